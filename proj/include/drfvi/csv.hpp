/*
 * Copyright 2026 The drfvi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "drfvi/common.hpp"
#include "drfvi/dataset.hpp"

namespace drfvi {

// Comma-separated, header row required, '.' decimal separator, no quoting.
class CsvError : public InvalidInput {
 public:
  CsvError(std::string file, std::size_t row, std::size_t col, const std::string& what)
      : InvalidInput(format(file, row, col, what)),
        file_(std::move(file)),
        row_(row),
        col_(col) {}

  // Row or column 0 means the error is not tied to that coordinate.
  static std::string format(const std::string& file, std::size_t row, std::size_t col, const std::string& what) {
    std::string where = file;
    if (row > 0) where += ": row " + std::to_string(row);
    if (col > 0) where += (row > 0 ? ", col " : ": col ") + std::to_string(col);
    return where + ": " + what;
  }

  const std::string& file() const noexcept { return file_; }
  std::size_t row() const noexcept { return row_; }  // 1-based data row, header excluded
  std::size_t col() const noexcept { return col_; }  // 1-based

 private:
  std::string file_;
  std::size_t row_;
  std::size_t col_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path, 0, 0, "cannot open file");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw CsvError(path, 0, 0, "missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = detail::split_fields(line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto fields = detail::split_fields(line);
    if (fields.size() != table.header.size())
      throw CsvError(path, row, std::min(fields.size(), table.header.size()) + 1,
                     "expected " + std::to_string(table.header.size()) + " fields, found " +
                         std::to_string(fields.size()));
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || f.empty())
        throw CsvError(path, row, c + 1, "cannot parse '" + f + "' as a number");
      if (!std::isfinite(v)) throw CsvError(path, row, c + 1, "non-finite value '" + f + "'");
      values[c] = v;
    }
    table.rows.push_back(std::move(values));
  }
  if (table.rows.empty()) throw CsvError(path, 0, 0, "no data rows");
  return table;
}

namespace detail {

inline std::vector<std::size_t> all_indices(std::size_t count) {
  std::vector<std::size_t> v(count);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

inline Matrix to_matrix(const CsvTable& t, const std::vector<std::size_t>& cols) {
  Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.rows[r][cols[c]];
  return m;
}

}  // namespace detail

// X and Y from two files with matching row counts.
inline Dataset load_csv_pair(const std::string& x_path, const std::string& y_path) {
  const auto xt = read_csv_table(x_path);
  const auto yt = read_csv_table(y_path);
  if (xt.rows.size() != yt.rows.size())
    throw CsvError(y_path, std::min(xt.rows.size(), yt.rows.size()) + 1, 0,
                   "row count mismatch: " + std::to_string(xt.rows.size()) + " vs " +
                       std::to_string(yt.rows.size()));
  Dataset data;
  data.x = detail::to_matrix(xt, detail::all_indices(xt.header.size()));
  data.y = detail::to_matrix(yt, detail::all_indices(yt.header.size()));
  data.x_names = xt.header;
  data.y_names = yt.header;
  data.provenance = x_path + ";" + y_path;
  data.validate();
  return data;
}

// One file; columns named in `y_columns` are outputs, the rest inputs.
inline Dataset load_csv(const std::string& path, const std::vector<std::string>& y_columns) {
  const auto t = read_csv_table(path);
  std::vector<std::size_t> xs, ys;
  for (const auto& name : y_columns) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw CsvError(path, 0, 0, "no column named '" + name + "'");
    ys.push_back(static_cast<std::size_t>(it - t.header.begin()));
  }
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (std::find(ys.begin(), ys.end(), c) == ys.end()) xs.push_back(c);
  if (xs.empty() || ys.empty()) throw CsvError(path, 0, 0, "need at least one input and one output column");
  Dataset data;
  data.x = detail::to_matrix(t, xs);
  data.y = detail::to_matrix(t, ys);
  for (auto c : xs) data.x_names.push_back(t.header[c]);
  for (auto c : ys) data.y_names.push_back(t.header[c]);
  data.provenance = path;
  data.validate();
  return data;
}

inline void write_matrix_csv(std::ostream& out, const std::vector<const Matrix*>& blocks,
                             const std::vector<std::string>& header) {
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const Eigen::Index rows = blocks.front()->rows();
  for (Eigen::Index r = 0; r < rows; ++r) {
    bool first = true;
    for (const Matrix* m : blocks)
      for (Eigen::Index c = 0; c < m->cols(); ++c) {
        out << (first ? "" : ",") << (*m)(r, c);
        first = false;
      }
    out << '\n';
  }
}

// Writes X then Y columns into one file.
inline void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  std::vector<std::string> header = data.x_names;
  header.insert(header.end(), data.y_names.begin(), data.y_names.end());
  write_matrix_csv(out, {&data.x, &data.y}, header);
}

inline void write_csv(const std::string& x_path, const std::string& y_path, const Dataset& data) {
  std::ofstream xo(x_path), yo(y_path);
  if (!xo || !yo) throw InvalidInput("cannot write " + x_path + " / " + y_path);
  write_matrix_csv(xo, {&data.x}, data.x_names);
  write_matrix_csv(yo, {&data.y}, data.y_names);
}

}  // namespace drfvi
