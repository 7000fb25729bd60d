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

// Oracle-equivalence checks run by `drfvi selfcheck`. Every fast routine is
// compared against a direct double-sum recomputation on small random inputs.

#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "drfvi/drfvi.hpp"

namespace drfvi::selfcheck {

struct CheckResult {
  std::string name;
  bool passed = true;
  double max_error = 0.0;
  std::size_t cases = 0;
};

namespace naive {

inline double k(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j, double bw) {
  return std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2.0 * bw * bw));
}

inline double mmd2(const Matrix& a, const Matrix& b, double bw) {
  double aa = 0, ab = 0, bb = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.rows(); ++j) aa += k(a, i, a, j, bw);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) ab += k(a, i, b, j, bw);
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) bb += k(b, i, b, j, bw);
  const double na = static_cast<double>(a.rows()), nb = static_cast<double>(b.rows());
  return aa / (na * na) - 2.0 * ab / (na * nb) + bb / (nb * nb);
}

// sum_a sum_b u_a v_b k(Y_a, Y_b) over dense vectors.
inline double expand(const Vector& u, const Vector& v, const Matrix& y, double bw) {
  double s = 0.0;
  for (Eigen::Index a = 0; a < y.rows(); ++a)
    for (Eigen::Index b = 0; b < y.rows(); ++b) s += u[a] * v[b] * k(y, a, y, b, bw);
  return s;
}

}  // namespace naive

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  return m;
}

inline Dataset random_dataset(std::size_t n, std::size_t p, std::size_t d, std::mt19937_64& rng) {
  Dataset data;
  data.x = random_matrix(n, p, rng);
  data.y = random_matrix(n, d, rng);
  for (Eigen::Index i = 0; i < data.y.rows(); ++i) data.y(i, 0) += 1.5 * data.x(i, 0);
  data.x_names = default_names("X", p);
  data.y_names = default_names("Y", d);
  return data;
}

inline void record(CheckResult& r, double error, double tol) {
  ++r.cases;
  r.max_error = std::max(r.max_error, error);
  if (!(error <= tol)) r.passed = false;
}

inline std::vector<CheckResult> run(std::size_t instances = 50, std::uint64_t seed = 1) {
  constexpr double kTol = 1e-10;
  std::mt19937_64 rng(mix_seed(seed, 0x5E1F));
  CheckResult mmd{"mmd2_empirical vs double sum"};
  CheckResult ratio{"importance numerator/normalizer vs double sum"};
  CheckResult proj{"projected_embedding_distance vs double sum"};
  CheckResult loss{"mmd_loss vs embedding expansion"};
  CheckResult scan{"mmd_split_scan vs recomputed statistic"};
  CheckResult simplex{"forest weights on the simplex"};

  for (std::size_t inst = 0; inst < instances; ++inst) {
    std::uniform_int_distribution<std::size_t> size(20, 100);
    const std::size_t n = size(rng);
    const std::size_t d = 1 + inst % 3;
    const double bw = 0.5 + 0.05 * static_cast<double>(inst % 20);
    const KernelSpec spec(bw, d);

    const Matrix a = random_matrix(1 + inst % 7, d, rng);
    const Matrix b = random_matrix(2 + inst % 5, d, rng);
    record(mmd, std::abs(mmd2_empirical(a, b, spec) - std::max(0.0, naive::mmd2(a, b, bw))), kTol);

    auto data = std::make_shared<const Dataset>(random_dataset(n, 4, d, rng));
    ForestParams params;
    params.num_trees = 8;
    params.min_leaf = 3;
    params.subsample_exponent = 0.95;
    params.bandwidth = bw;
    params.seed = mix_seed(seed, inst);
    params.threads = 1;
    const Forest forest = fit_forest(data, params, all_variables(4));
    const KernelMatrix kernel(data->y, forest.kernel(), 1);
    const Matrix queries = random_matrix(6, 4, rng);
    const Matrix query_y = random_matrix(6, d, rng);

    std::vector<WeightVector> w;
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      w.push_back(forest.weights(row_span(queries, q)));
      double total = 0.0, lowest = 0.0;
      for (double v : w.back().value) {
        total += v;
        lowest = std::min(lowest, v);
      }
      record(simplex, std::abs(total - 1.0) + std::max(0.0, -lowest), kTol);
    }

    // Normalizer: sum_i |mu_i - mean mu|^2 by explicit dense expansion.
    Vector mean = Vector::Zero(static_cast<Eigen::Index>(n));
    for (const auto& wi : w) mean += wi.to_dense(n);
    mean /= static_cast<double>(w.size());
    double norm_oracle = 0.0;
    for (const auto& wi : w) {
      const Vector diff = wi.to_dense(n) - mean;
      norm_oracle += naive::expand(diff, diff, data->y, bw);
    }
    record(ratio, std::abs(weight_dispersion(w, kernel, 1) - norm_oracle), kTol);

    std::vector<WeightVector> shifted;
    for (Eigen::Index q = 0; q < queries.rows(); ++q)
      shifted.push_back(forest.weights(row_span(queries, (q + 1) % queries.rows())));
    double num_oracle = 0.0;
    for (std::size_t q = 0; q < w.size(); ++q) {
      const Vector diff = w[q].to_dense(n) - shifted[q].to_dense(n);
      num_oracle += naive::expand(diff, diff, data->y, bw);
    }
    record(ratio, std::abs(sum_weight_distances(w, shifted, kernel, 1) - num_oracle), kTol);

    const std::size_t j = inst % 4;
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const Vector diff = forest.weights(row_span(queries, q)).to_dense(n) -
                          projected_weights(forest, row_span(queries, q), j).to_dense(n);
      record(proj,
             std::abs(projected_embedding_distance(forest, row_span(queries, q), j, kernel) -
                      naive::expand(diff, diff, data->y, bw)),
             kTol);
    }

    double loss_oracle = 0.0;
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const Vector wq = w[static_cast<std::size_t>(q)].to_dense(n);
      double cross = 0.0;
      for (Eigen::Index a2 = 0; a2 < data->y.rows(); ++a2) cross += wq[a2] * naive::k(data->y, a2, query_y, q, bw);
      loss_oracle += naive::expand(wq, wq, data->y, bw) - 2.0 * cross;
    }
    loss_oracle /= static_cast<double>(queries.rows());
    record(loss, std::abs(mmd_loss(forest, kernel, queries, query_y) - loss_oracle), kTol);

    // Split scan: recompute the statistic at the returned threshold.
    const Matrix features = forest.fourier().embed(data->y);
    std::vector<std::uint32_t> rows(n);
    for (std::size_t r = 0; r < n; ++r) rows[r] = static_cast<std::uint32_t>(r);
    const auto best = mmd_split_scan(rows, j, data->x, features, 0.05, 3);
    if (best) {
      Eigen::RowVectorXd left = Eigen::RowVectorXd::Zero(features.cols());
      Eigen::RowVectorXd right = left;
      double nl = 0, nr = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (data->x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) <= best->threshold) {
          left += features.row(static_cast<Eigen::Index>(r));
          ++nl;
        } else {
          right += features.row(static_cast<Eigen::Index>(r));
          ++nr;
        }
      }
      const double np = nl + nr;
      const double stat = nl * nr / (np * np) * (left / nl - right / nr).squaredNorm();
      record(scan, std::abs(stat - best->statistic), kTol);
    }
  }
  return {mmd, ratio, proj, loss, scan, simplex};
}

}  // namespace drfvi::selfcheck
