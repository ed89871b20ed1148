//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_CSV_HPP_
#define RXNCOND_CSV_HPP_

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rxncond {

struct CsvRow {
  std::size_t line = 0;  // 1-based line where the row starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, double-quoted fields may contain commas,
/// newlines and doubled quotes. Blank lines are skipped.
std::vector<CsvRow> read_csv(std::istream &in);

std::string csv_field(std::string_view value);
void write_csv_row(std::ostream &out, const std::vector<std::string> &fields);

/// Splits on `sep`, trimming ASCII whitespace and dropping empty pieces.
std::vector<std::string> split_list(std::string_view text, char sep);
std::string trim(std::string_view text);

}  // namespace rxncond

#endif  // RXNCOND_CSV_HPP_
