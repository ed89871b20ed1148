//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_ERROR_HPP_
#define RXNCOND_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rxncond {

/// Base of every error raised by the library. The CLI maps `kind()` onto the
/// stable error prefix it prints.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char *kind() const noexcept { return "error"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char *kind() const noexcept override { return "dimension"; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  const char *kind() const noexcept override { return "validation"; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  const char *kind() const noexcept override { return "usage"; }
};

class TrainingError : public Error {
 public:
  using Error::Error;
  const char *kind() const noexcept override { return "training"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char *kind() const noexcept override { return "config"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char *kind() const noexcept override { return "io"; }
};

/// SMILES syntax error. `offset()` is the 0-based byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string &what)
      : Error("at byte " + std::to_string(offset) + ": " + what),
        offset_(offset), reason_(what) { }

  std::size_t offset() const noexcept { return offset_; }
  const std::string &reason() const noexcept { return reason_; }
  const char *kind() const noexcept override { return "parse"; }

 private:
  std::size_t offset_;
  std::string reason_;
};

}  // namespace rxncond

#endif  // RXNCOND_ERROR_HPP_
