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

#include "drfvi/common.hpp"
#include "drfvi/dataset.hpp"

namespace drfvi {

enum class Scenario { kMotivating, kUnivariate, kBivariate, kFunctional, kNull, kCustomSparse };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kMotivating: return "motivating";
    case Scenario::kUnivariate: return "univariate";
    case Scenario::kBivariate: return "bivariate";
    case Scenario::kFunctional: return "functional";
    case Scenario::kNull: return "null";
    case Scenario::kCustomSparse: return "custom-sparse";
  }
  return "unknown";
}

inline Scenario parse_scenario(const std::string& s) {
  for (auto sc : {Scenario::kMotivating, Scenario::kUnivariate, Scenario::kBivariate, Scenario::kFunctional,
                  Scenario::kNull, Scenario::kCustomSparse})
    if (to_string(sc) == s) return sc;
  throw InvalidInput("unknown scenario '" + s + "'");
}

struct GeneratorSpec {
  Scenario scenario = Scenario::kMotivating;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  // Gaussian-copula parameter linking X3 to X1 (motivating) or the decoy to X1
  // (custom-sparse).
  double copula_rho = 0.9;
  // Univariate: noise standard deviation is noise_scale * (|X3| + |X4| + |X5|).
  double noise_scale = 2.0;
  // Functional: grid size on [-5, 5]; when false the GP length scale is 1/X2,
  // when true it is X2.
  std::size_t grid_size = 30;
  bool functional_inverse_bandwidth = false;
  // Null and custom-sparse.
  std::size_t num_inputs = 10;
  std::size_t num_relevant = 3;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

inline Dataset make_dataset(std::size_t n, std::size_t p, std::size_t d, const GeneratorSpec& spec) {
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  data.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.x_names = default_names("X", p);
  data.y_names = default_names("Y", d);
  data.provenance = to_string(spec.scenario) + ":n=" + std::to_string(n) + ":seed=" + std::to_string(spec.seed);
  return data;
}

}  // namespace detail

// Y ~ N(0.8 1(X1 > 0), (1 + 1(X2 > 0))^2); X1, X2, X4..X10 ~ U[-1, 1]; X3 is
// tied to X1 through a Gaussian copula.
inline Dataset gen_motivating(std::size_t n, std::uint64_t seed, double rho = 0.9) {
  GeneratorSpec spec{Scenario::kMotivating, n, seed};
  auto data = detail::make_dataset(n, 10, 1, spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double rest = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    const double z1 = normal(rng);
    const double z3 = rho * z1 + rest * normal(rng);
    data.x(i, 0) = 2.0 * normal_cdf(z1) - 1.0;
    data.x(i, 1) = unif(rng);
    data.x(i, 2) = 2.0 * normal_cdf(z3) - 1.0;
    for (Eigen::Index j = 3; j < 10; ++j) data.x(i, j) = unif(rng);
    const double mean = data.x(i, 0) > 0.0 ? 0.8 : 0.0;
    const double sd = data.x(i, 1) > 0.0 ? 2.0 : 1.0;
    data.y(i, 0) = mean + sd * normal(rng);
  }
  return data;
}

// Ten unit-variance Gaussian inputs, pairwise correlation 0.5 except
// corr(X1, X10) = 0.9; Y ~ N(2 X1 + X2, (s(|X3| + |X4| + |X5|))^2).
inline Dataset gen_univariate(std::size_t n, std::uint64_t seed, double noise_scale = 2.0) {
  GeneratorSpec spec{Scenario::kUnivariate, n, seed};
  auto data = detail::make_dataset(n, 10, 1, spec);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(10, 10, 0.5);
  cov.diagonal().setOnes();
  cov(0, 9) = cov(9, 0) = 0.9;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalFailure("gen_univariate: covariance is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(10);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < 10; ++j) z[j] = normal(rng);
    data.x.row(i) = (chol * z).transpose();
    const double mean = 2.0 * data.x(i, 0) + data.x(i, 1);
    const double sd = noise_scale * (std::abs(data.x(i, 2)) + std::abs(data.x(i, 3)) + std::abs(data.x(i, 4)));
    data.y(i, 0) = mean + sd * normal(rng);
  }
  return data;
}

// X ~ U[0,1]^10; Y1 ~ U(X1, 1 + X1), Y2 ~ U(0, X2), conditionally independent.
inline Dataset gen_bivariate(std::size_t n, std::uint64_t seed) {
  GeneratorSpec spec{Scenario::kBivariate, n, seed};
  auto data = detail::make_dataset(n, 10, 2, spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < 10; ++j) data.x(i, j) = unif(rng);
    data.y(i, 0) = data.x(i, 0) + unif(rng);
    data.y(i, 1) = data.x(i, 1) * unif(rng);
  }
  return data;
}

// X ~ U[0,1]^10; Y(t) = X1 + f(t) on an equispaced grid of [-5, 5], f a
// zero-mean GP with unit-variance Gaussian covariance of length scale 1/X2
// (or X2 with `inverse_bandwidth`).
inline Dataset gen_functional(std::size_t n, std::size_t grid_size, std::uint64_t seed,
                              bool inverse_bandwidth = false) {
  if (grid_size < 2) throw InvalidInput("gen_functional: grid size must be >= 2");
  GeneratorSpec spec{Scenario::kFunctional, n, seed};
  auto data = detail::make_dataset(n, 10, grid_size, spec);
  std::vector<double> grid(grid_size);
  for (std::size_t a = 0; a < grid_size; ++a)
    grid[a] = -5.0 + 10.0 * static_cast<double>(a) / static_cast<double>(grid_size - 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(grid_size);
  Eigen::MatrixXd cov(d, d);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < 10; ++j) data.x(i, j) = unif(rng);
    const double x2 = data.x(i, 1);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) {
        const double dt = grid[static_cast<std::size_t>(a)] - grid[static_cast<std::size_t>(b)];
        cov(a, b) = inverse_bandwidth ? std::exp(-dt * dt / (2.0 * x2 * x2)) : std::exp(-0.5 * dt * dt * x2 * x2);
      }
    Eigen::MatrixXd chol;
    for (double jitter = 1e-10;; jitter *= 10.0) {
      Eigen::LLT<Eigen::MatrixXd> llt(cov + jitter * Eigen::MatrixXd::Identity(d, d));
      if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
        break;
      }
      if (jitter >= 1e-6) throw NumericalFailure("gen_functional: Cholesky failed at row " + std::to_string(i + 1));
    }
    for (Eigen::Index a = 0; a < d; ++a) z[a] = normal(rng);
    data.y.row(i) = (chol * z).transpose().array() + data.x(i, 0);
  }
  return data;
}

// Outputs independent of inputs: X ~ U[0,1]^p, Y ~ N(0, 1).
inline Dataset gen_null(std::size_t n, std::uint64_t seed, std::size_t p = 10) {
  GeneratorSpec spec{Scenario::kNull, n, seed};
  auto data = detail::make_dataset(n, p, 1, spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) data.x(i, j) = unif(rng);
    data.y(i, 0) = normal(rng);
  }
  return data;
}

// Sparse design with r relevant inputs among p: X ~ U[0,1]^p except the last
// column, a Gaussian-copula decoy of X1 that does not enter Y. With r >= 2,
// Y ~ N(2 (X1 + ... + X_{r-1}), (0.2 + 2 X_r)^2); with r = 1, Y ~ N(2 X1, 1).
inline Dataset gen_custom_sparse(std::size_t n, std::uint64_t seed, std::size_t p = 15,
                                 std::size_t relevant = 3, double rho = 0.9) {
  if (relevant < 1 || relevant + 1 > p)
    throw InvalidInput("gen_custom_sparse: need 1 <= relevant and relevant + 1 <= p");
  GeneratorSpec spec{Scenario::kCustomSparse, n, seed};
  auto data = detail::make_dataset(n, p, 1, spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rest = std::sqrt(1.0 - rho * rho);
  const auto decoy = static_cast<Eigen::Index>(p - 1);
  const auto r = static_cast<Eigen::Index>(relevant);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    const double z1 = normal(rng);
    data.x(i, 0) = normal_cdf(z1);
    for (Eigen::Index j = 1; j < decoy; ++j) data.x(i, j) = unif(rng);
    data.x(i, decoy) = normal_cdf(rho * z1 + rest * normal(rng));
    double mean = 0.0;
    double sd = 1.0;
    if (r == 1) {
      mean = 2.0 * data.x(i, 0);
    } else {
      for (Eigen::Index j = 0; j + 1 < r; ++j) mean += 2.0 * data.x(i, j);
      sd = 0.2 + 2.0 * data.x(i, r - 1);
    }
    data.y(i, 0) = mean + sd * normal(rng);
  }
  return data;
}

inline Dataset generate(const GeneratorSpec& spec) {
  switch (spec.scenario) {
    case Scenario::kMotivating: return gen_motivating(spec.n, spec.seed, spec.copula_rho);
    case Scenario::kUnivariate: return gen_univariate(spec.n, spec.seed, spec.noise_scale);
    case Scenario::kBivariate: return gen_bivariate(spec.n, spec.seed);
    case Scenario::kFunctional:
      return gen_functional(spec.n, spec.grid_size, spec.seed, spec.functional_inverse_bandwidth);
    case Scenario::kNull: return gen_null(spec.n, spec.seed, spec.num_inputs);
    case Scenario::kCustomSparse:
      return gen_custom_sparse(spec.n, spec.seed, spec.num_inputs, spec.num_relevant, spec.copula_rho);
  }
  throw InvalidInput("generate: unknown scenario");
}

}  // namespace drfvi
