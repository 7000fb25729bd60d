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

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drfvi/common.hpp"

namespace drfvi {

// Paired inputs X (n x p) and outputs Y (n x d) with column names.
struct Dataset {
  Matrix x;
  Matrix y;
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;
  std::string provenance;

  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x.cols()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(y.cols()); }

  // Throws InvalidInput naming the first offending entry.
  void validate() const {
    if (x.rows() < 1) throw InvalidInput("dataset: no rows");
    if (x.rows() != y.rows())
      throw InvalidInput("dataset: X has " + std::to_string(x.rows()) + " rows but Y has " +
                         std::to_string(y.rows()));
    if (x.cols() < 1 || y.cols() < 1) throw InvalidInput("dataset: empty X or Y columns");
    if (x_names.size() != p() || y_names.size() != d())
      throw InvalidInput("dataset: column name count mismatch");
    auto check = [](const Matrix& m, const char* which) {
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          if (!std::isfinite(m(i, j)))
            throw InvalidInput(std::string("dataset: non-finite ") + which + " at row " +
                               std::to_string(i + 1) + ", col " + std::to_string(j + 1));
    };
    check(x, "X");
    check(y, "Y");
  }

  Dataset subset(const std::vector<std::uint32_t>& rows) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()), y.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.x.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
      out.y.row(static_cast<Eigen::Index>(r)) = y.row(rows[r]);
    }
    out.x_names = x_names;
    out.y_names = y_names;
    out.provenance = provenance;
    return out;
  }
};

// Centers each output column and scales it to unit sample standard deviation.
// Constant columns are only centered.
inline Dataset standardize_outputs(Dataset data) {
  const auto n = static_cast<double>(data.y.rows());
  for (Eigen::Index c = 0; c < data.y.cols(); ++c) {
    auto col = data.y.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = n > 1 ? std::sqrt(col.squaredNorm() / (n - 1)) : 0.0;
    if (sd > 0.0) col /= sd;
  }
  return data;
}

inline std::vector<std::string> default_names(const std::string& prefix, std::size_t count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (std::size_t j = 0; j < count; ++j) names.push_back(prefix + std::to_string(j + 1));
  return names;
}

// Random half split: the first ceil(n/2) shuffled rows go to `fit`.
struct HalfSplit {
  std::vector<std::uint32_t> fit;
  std::vector<std::uint32_t> eval;
};

inline HalfSplit half_split(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  std::mt19937_64 rng(mix_seed(seed, 0x5917));
  std::shuffle(rows.begin(), rows.end(), rng);
  HalfSplit split;
  const std::size_t cut = (n + 1) / 2;
  split.fit.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut));
  split.eval.assign(rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end());
  std::sort(split.fit.begin(), split.fit.end());
  std::sort(split.eval.begin(), split.eval.end());
  return split;
}

}  // namespace drfvi
