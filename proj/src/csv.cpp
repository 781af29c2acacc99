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

#include "dprezone/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dprezone/error.hpp"

namespace dprezone::csv {
namespace {

std::vector<std::vector<std::string>> split_records(std::string_view text,
                                                    const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Skip blank lines.
    if (!(record.size() == 1 && record[0].empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };

  std::size_t i = 0;
  // UTF-8 byte order mark.
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF) {
    i = 3;
  }
  for (; i < text.size(); ++i) {
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
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw ValidationError(source + ":" + std::to_string(line) +
                                ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw ValidationError(source + ": unterminated quoted field");
  }
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

Table Table::parse(std::string_view text, std::string source) {
  Table t;
  t.source_ = std::move(source);
  auto records = split_records(text, t.source_);
  if (records.empty()) {
    throw ValidationError(t.source_ + ": missing header row");
  }
  for (auto& h : records[0]) t.header_.push_back(trim(h));
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.size() != t.header_.size()) {
      throw ValidationError(t.source_ + ":" + std::to_string(r + 1) +
                            ": expected " + std::to_string(t.header_.size()) +
                            " fields, found " + std::to_string(rec.size()));
    }
    for (auto& f : rec) f = trim(std::move(f));
    t.rows_.push_back(std::move(rec));
  }
  return t;
}

Table Table::read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

bool Table::has_column(std::string_view name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw ValidationError(source_ + ": missing required column '" +
                        std::string(name) + "'");
}

std::string Table::where(std::size_t row, std::size_t col) const {
  return source_ + ":" + std::to_string(row + 2) + ":" +
         std::to_string(col + 1) + " (" + header_[col] + ")";
}

double Table::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows_[row][col];
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    throw ValidationError(where(row, col) + ": expected a finite number, got '" +
                          s + "'");
  }
  return value;
}

std::int64_t Table::integer(std::size_t row, std::size_t col) const {
  const std::string& s = rows_[row][col];
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(where(row, col) + ": expected an integer, got '" + s +
                          "'");
  }
  return value;
}

const std::string& Table::text(std::size_t row, std::size_t col) const {
  const std::string& s = rows_[row][col];
  if (s.empty()) throw ValidationError(where(row, col) + ": empty value");
  return s;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out << f;
    } else {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    }
  }
  out << '\n';
}

std::string fixed6(double value) {
  char buf[64];
  if (value == 0.0) value = 0.0;  // no "-0.000000"
  std::snprintf(buf, sizeof buf, "%.6f", value);
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

}  // namespace dprezone::csv
