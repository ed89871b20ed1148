//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include "rxncond/csv.hpp"

#include <istream>
#include <iterator>
#include <ostream>

#include "rxncond/error.hpp"

namespace rxncond {

std::vector<CsvRow> read_csv(std::istream &in) {
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  std::size_t line = 1;
  std::size_t row_line = 1;
  std::size_t quote_line = 0;
  bool in_quotes = false;
  bool field_started = false;
  bool row_has_content = false;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    if (row_has_content || !row.fields.empty() || field_started) {
      end_field();
      row.line = row_line;
      rows.push_back(std::move(row));
    }
    row = CsvRow();
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n')
          ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
    case '"':
      if (!field.empty()) {
        throw ValidationError("line " + std::to_string(line)
                              + ": quote inside an unquoted field");
      }
      in_quotes = true;
      quote_line = line;
      field_started = true;
      row_has_content = true;
      break;
    case ',':
      end_field();
      row_has_content = true;
      break;
    case '\r':
      break;
    case '\n':
      end_row();
      ++line;
      row_line = line;
      break;
    default:
      field.push_back(c);
      field_started = true;
      row_has_content = true;
      break;
    }
  }
  if (in_quotes) {
    throw ValidationError("line " + std::to_string(quote_line)
                          + ": unterminated quoted field");
  }
  end_row();
  return rows;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos)
    return std::string(value);
  std::string out = "\"";
  for (char c: value) {
    if (c == '"')
      out += "\"\"";
    else
      out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream &out, const std::vector<std::string> &fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0)
      out << ',';
    out << csv_field(fields[i]);
  }
  out << '\n';
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return { };
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(sep, start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string piece = trim(text.substr(start, end - start));
    if (!piece.empty())
      out.push_back(std::move(piece));
    start = end + 1;
  }
  return out;
}

}  // namespace rxncond
