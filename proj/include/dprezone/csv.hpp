// Copyright 2026 The dp-rezone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPREZONE_CSV_HPP_
#define DPREZONE_CSV_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dprezone::csv {

// A parsed CSV table with a required header row. Quoted fields with
// embedded commas and doubled quotes are supported; CRLF is tolerated.
class Table {
 public:
  // `source` names the input in diagnostics ("blocks.csv").
  static Table parse(std::string_view text, std::string source);
  static Table read_file(const std::string& path);

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  // Index of `name` in the header; throws ValidationError listing the
  // missing column.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  const std::string& cell(std::size_t row, std::size_t col) const {
    return rows_[row][col];
  }

  // Typed accessors. Errors carry "source:line:column" positions, where
  // line counts the header as line 1.
  double number(std::size_t row, std::size_t col) const;
  std::int64_t integer(std::size_t row, std::size_t col) const;
  const std::string& text(std::size_t row, std::size_t col) const;

  // Optional numeric cell: empty means absent.
  bool empty(std::size_t row, std::size_t col) const {
    return rows_[row][col].empty();
  }

  std::string where(std::size_t row, std::size_t col) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes one CSV record, quoting fields that need it.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Fixed 6-decimal formatting used by every numeric CSV column.
std::string fixed6(double value);

}  // namespace dprezone::csv

#endif  // DPREZONE_CSV_HPP_
