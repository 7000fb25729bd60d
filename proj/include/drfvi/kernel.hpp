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
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include "drfvi/common.hpp"

namespace drfvi {

inline std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Gaussian kernel k(a, b) = exp(-|a - b|^2 / (2 bandwidth^2)) on R^output_dim.
struct KernelSpec {
  double bandwidth = 1.0;
  std::size_t output_dim = 1;

  KernelSpec() = default;
  KernelSpec(double bw, std::size_t dim) : bandwidth(bw), output_dim(dim) { validate(); }

  void validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw InvalidInput("kernel: bandwidth must be positive and finite");
    if (output_dim == 0) throw InvalidInput("kernel: output dimension must be positive");
  }

  double gamma() const noexcept { return 0.5 / (bandwidth * bandwidth); }

  bool operator==(const KernelSpec&) const = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

inline double gaussian_kernel(std::span<const double> a, std::span<const double> b,
                              const KernelSpec& spec) {
  if (a.size() != spec.output_dim || b.size() != spec.output_dim)
    throw InvalidInput("gaussian_kernel: vector length does not match output dimension");
  return std::exp(-squared_distance(a, b) * spec.gamma());
}

struct BandwidthEstimate {
  double bandwidth = 1.0;
  bool degenerate = false;
};

// Median of pairwise Euclidean distances over min(max_pairs, n(n-1)/2) distinct
// pairs. All pairs are used when they fit in the budget; otherwise distinct
// pairs are drawn without replacement from a seeded stream.
inline BandwidthEstimate median_heuristic_bandwidth(const Matrix& y, std::size_t max_pairs = 10000,
                                                    std::uint64_t seed = 0) {
  const auto n = static_cast<std::uint64_t>(y.rows());
  if (n < 2) throw InvalidInput("median_heuristic_bandwidth: need at least 2 rows");
  if (max_pairs < 1) throw InvalidInput("median_heuristic_bandwidth: max_pairs must be >= 1");
  const std::uint64_t total = n * (n - 1) / 2;
  std::vector<double> dist;
  if (total <= max_pairs) {
    dist.reserve(total);
    for (Eigen::Index a = 0; a < y.rows(); ++a)
      for (Eigen::Index b = a + 1; b < y.rows(); ++b)
        dist.push_back(std::sqrt(squared_distance(row_span(y, a), row_span(y, b))));
  } else {
    std::mt19937_64 rng(mix_seed(seed, 0xB4D));
    std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
    std::unordered_set<std::uint64_t> seen;
    dist.reserve(max_pairs);
    while (dist.size() < max_pairs) {
      std::uint64_t a = pick(rng), b = pick(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (!seen.insert(a * n + b).second) continue;
      dist.push_back(std::sqrt(squared_distance(row_span(y, static_cast<Eigen::Index>(a)),
                                                row_span(y, static_cast<Eigen::Index>(b)))));
    }
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  if (median > 0.0) return {median, false};
  // More than half the pairs coincide: fall back to the mean nonzero distance.
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : dist)
    if (v > 0.0) {
      sum += v;
      ++count;
    }
  if (count == 0) return {1.0, true};
  return {sum / static_cast<double>(count), false};
}

// Sparse vector over training indices, sorted by index.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const noexcept { return index.size(); }

  double sum() const noexcept {
    double s = 0.0;
    for (double v : value) s += v;
    return s;
  }

  Vector to_dense(std::size_t n) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < index.size(); ++k) out[index[k]] = value[k];
    return out;
  }
};

// a - b for sorted sparse vectors.
inline SparseVector sparse_difference(const SparseVector& a, const SparseVector& b) {
  SparseVector out;
  out.index.reserve(a.nnz() + b.nnz());
  out.value.reserve(a.nnz() + b.nnz());
  std::size_t i = 0, j = 0;
  while (i < a.nnz() || j < b.nnz()) {
    if (j == b.nnz() || (i < a.nnz() && a.index[i] < b.index[j])) {
      out.index.push_back(a.index[i]);
      out.value.push_back(a.value[i++]);
    } else if (i == a.nnz() || b.index[j] < a.index[i]) {
      out.index.push_back(b.index[j]);
      out.value.push_back(-b.value[j++]);
    } else {
      const double v = a.value[i++] - b.value[j++];
      if (v != 0.0) {
        out.index.push_back(b.index[j - 1]);
        out.value.push_back(v);
      }
    }
  }
  return out;
}

// K = (k(Y_a, Y_b)) on a training sample, with quadratic forms over sparse
// weight vectors. An optional pivoted-Cholesky factor K ~ L L^T (residual
// diagonal below `tolerance`) turns a quadratic form with s nonzeros from
// O(s^2) into O(s r) when the rank r is small.
class KernelMatrix {
 public:
  KernelMatrix() = default;

  KernelMatrix(const Matrix& y, const KernelSpec& spec, unsigned threads = 0) : spec_(spec) {
    spec.validate();
    if (y.rows() < 1) throw InvalidInput("kernel_matrix: need at least one row");
    if (static_cast<std::size_t>(y.cols()) != spec.output_dim)
      throw InvalidInput("kernel_matrix: Y columns do not match kernel output dimension");
    const Eigen::Index n = y.rows();
    values_.resize(n, n);
    const double gamma = spec.gamma();
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t a) {
      const auto ia = static_cast<Eigen::Index>(a);
      values_(ia, ia) = 1.0;
      for (Eigen::Index b = 0; b < ia; ++b)
        values_(ia, b) = std::exp(-squared_distance(row_span(y, ia), row_span(y, b)) * gamma);
    });
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a + 1; b < n; ++b) values_(a, b) = values_(b, a);
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  const Matrix& values() const noexcept { return values_; }
  double operator()(std::size_t a, std::size_t b) const {
    return values_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  const KernelSpec& spec() const noexcept { return spec_; }
  std::size_t factor_rank() const noexcept { return static_cast<std::size_t>(factor_.cols()); }
  bool has_factor() const noexcept { return factor_.cols() > 0; }

  // Builds the low-rank factor; gives up (exact route only) past max_rank.
  void factorize(double tolerance = 1e-13, std::size_t max_rank = 0) {
    const Eigen::Index n = values_.rows();
    if (max_rank == 0) max_rank = static_cast<std::size_t>(std::max<Eigen::Index>(1, n / 3));
    std::vector<double> residual(static_cast<std::size_t>(n), 1.0);
    for (Eigen::Index a = 0; a < n; ++a) residual[static_cast<std::size_t>(a)] = values_(a, a);
    std::vector<Vector> columns;
    while (true) {
      const auto it = std::max_element(residual.begin(), residual.end());
      if (*it <= tolerance) break;
      if (columns.size() >= max_rank) {
        factor_.resize(0, 0);
        return;
      }
      const auto pivot = static_cast<Eigen::Index>(it - residual.begin());
      const double scale = 1.0 / std::sqrt(*it);
      Vector col = values_.col(pivot);
      for (const auto& prev : columns) col -= prev * prev[pivot];
      col *= scale;
      for (Eigen::Index a = 0; a < n; ++a) {
        auto& r = residual[static_cast<std::size_t>(a)];
        r = std::max(0.0, r - col[a] * col[a]);
      }
      residual[static_cast<std::size_t>(pivot)] = 0.0;
      columns.push_back(std::move(col));
    }
    factor_.resize(n, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k)
      factor_.col(static_cast<Eigen::Index>(k)) = columns[k];
  }

  void drop_factor() { factor_.resize(0, 0); }

  // v^T K v.
  double quadratic(const SparseVector& v) const {
    const std::size_t s = v.nnz();
    const std::size_t r = factor_rank();
    if (r > 0 && 2 * r < s) {
      Eigen::RowVectorXd t = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(r));
      for (std::size_t k = 0; k < s; ++k) t += v.value[k] * factor_.row(v.index[k]);
      return t.squaredNorm();
    }
    if (4 * s > size()) {
      // Dense matrix-vector product beats the pairwise loop on wide supports.
      const Vector dense = v.to_dense(size());
      return dense.dot(values_ * dense);
    }
    double off = 0.0, diag = 0.0;
    for (std::size_t a = 0; a < s; ++a) {
      const double* row = values_.data() + static_cast<Eigen::Index>(v.index[a]) * values_.cols();
      double acc = 0.0;
      for (std::size_t b = 0; b < a; ++b) acc += v.value[b] * row[v.index[b]];
      off += v.value[a] * acc;
      diag += v.value[a] * v.value[a] * row[v.index[a]];
    }
    return diag + 2.0 * off;
  }

  // u^T K v.
  double bilinear(const SparseVector& u, const SparseVector& v) const {
    double total = 0.0;
    for (std::size_t a = 0; a < u.nnz(); ++a) {
      const double* row = values_.data() + static_cast<Eigen::Index>(u.index[a]) * values_.cols();
      double acc = 0.0;
      for (std::size_t b = 0; b < v.nnz(); ++b) acc += v.value[b] * row[v.index[b]];
      total += u.value[a] * acc;
    }
    return total;
  }

  // u^T g for a dense g, typically g = K w.
  static double dot(const SparseVector& u, const Vector& g) {
    double total = 0.0;
    for (std::size_t a = 0; a < u.nnz(); ++a) total += u.value[a] * g[u.index[a]];
    return total;
  }

  Vector apply(const Vector& w) const { return values_ * w; }

 private:
  KernelSpec spec_;
  Matrix values_;
  Eigen::MatrixXd factor_;
};

inline KernelMatrix kernel_matrix(const Matrix& y, const KernelSpec& spec, unsigned threads = 0) {
  return KernelMatrix(y, spec, threads);
}

// Random Fourier features for the Gaussian kernel with paired cos/sin layout:
// phi(y) = B^{-1/2} (cos(w_1.y), sin(w_1.y), ..., cos(w_B.y), sin(w_B.y)),
// w_b ~ N(0, bandwidth^{-2} I). Each row has unit norm exactly (up to rounding).
class FourierFeatureMap {
 public:
  FourierFeatureMap() = default;

  explicit FourierFeatureMap(Matrix frequencies) : frequencies_(std::move(frequencies)) {
    if (frequencies_.rows() < 1 || frequencies_.cols() < 1)
      throw InvalidInput("fourier map: need at least one frequency and one dimension");
  }

  static FourierFeatureMap sample(std::size_t num_features, const KernelSpec& spec,
                                  std::uint64_t seed) {
    spec.validate();
    if (num_features < 1) throw InvalidInput("fourier map: num_features must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / spec.bandwidth);
    Matrix freq(static_cast<Eigen::Index>(num_features), static_cast<Eigen::Index>(spec.output_dim));
    for (Eigen::Index b = 0; b < freq.rows(); ++b)
      for (Eigen::Index k = 0; k < freq.cols(); ++k) freq(b, k) = normal(rng);
    return FourierFeatureMap(std::move(freq));
  }

  std::size_t num_features() const noexcept { return static_cast<std::size_t>(frequencies_.rows()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(frequencies_.cols()); }
  std::size_t output_dim() const noexcept { return 2 * num_features(); }
  const Matrix& frequencies() const noexcept { return frequencies_; }

  Matrix embed(const Matrix& y) const {
    if (static_cast<std::size_t>(y.cols()) != input_dim())
      throw InvalidInput("fourier_embed: Y columns do not match the feature map dimension");
    const Eigen::Index num = frequencies_.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(num));
    Matrix out(y.rows(), 2 * num);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index b = 0; b < num; ++b) {
        const double phase = frequencies_.row(b).dot(y.row(i));
        out(i, 2 * b) = scale * std::cos(phase);
        out(i, 2 * b + 1) = scale * std::sin(phase);
      }
    }
    return out;
  }

 private:
  Matrix frequencies_;
};

inline Matrix fourier_embed(const Matrix& y, const FourierFeatureMap& map) { return map.embed(y); }

// Squared MMD V-statistic: mean(K_AA) - 2 mean(K_AB) + mean(K_BB).
inline double mmd2_empirical(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
  if (a.rows() < 1 || b.rows() < 1) throw InvalidInput("mmd2_empirical: empty sample");
  if (static_cast<std::size_t>(a.cols()) != spec.output_dim ||
      static_cast<std::size_t>(b.cols()) != spec.output_dim)
    throw InvalidInput("mmd2_empirical: sample dimension does not match kernel");
  const double gamma = spec.gamma();
  auto block_mean = [gamma](const Matrix& u, const Matrix& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      double row = 0.0;
      for (Eigen::Index j = 0; j < v.rows(); ++j)
        row += std::exp(-squared_distance(row_span(u, i), row_span(v, j)) * gamma);
      s += row;
    }
    return s / (static_cast<double>(u.rows()) * static_cast<double>(v.rows()));
  };
  const double value = block_mean(a, a) - 2.0 * block_mean(a, b) + block_mean(b, b);
  return std::max(0.0, value);
}

}  // namespace drfvi
