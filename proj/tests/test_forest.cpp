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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "drfvi/forest.hpp"
#include "drfvi/generators.hpp"
#include "drfvi/io.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace drfvi {
namespace {

using namespace testing_support;

TEST(ForestParamsTest, Validation) {
  ForestParams p;
  EXPECT_NO_THROW(p.validate(10));
  p.alpha = 0.25;
  EXPECT_THROW(p.validate(10), InvalidInput);
  p = {};
  p.alpha = 0.0;
  EXPECT_THROW(p.validate(10), InvalidInput);
  p = {};
  p.subsample_exponent = 1.0;
  EXPECT_THROW(p.validate(10), InvalidInput);
  p = {};
  p.mtry = 11;
  EXPECT_THROW(p.validate(10), InvalidInput);
  p = {};
  p.num_trees = 0;
  EXPECT_THROW(p.validate(10), InvalidInput);
}

TEST(ForestParamsTest, ResolvedSizes) {
  ForestParams p;
  p.subsample_exponent = 0.5;
  EXPECT_EQ(p.resolve_subsample(100), 10u);
  EXPECT_EQ(p.resolve_subsample(101), 11u);
  EXPECT_EQ(p.resolve_subsample(2), 2u);
  p.subsample_size = 500;
  EXPECT_EQ(p.resolve_subsample(100), 100u);
  EXPECT_EQ(p.resolve_mtry(10), 4u);
  EXPECT_EQ(p.resolve_mtry(9), 3u);
  EXPECT_EQ(p.resolve_mtry(1), 1u);
}

TEST(FitForest, InputErrors) {
  auto data = make_data(9, 3, 1, 1);
  EXPECT_THROW(fit_forest(data, small_params(1), {}), InvalidInput);
  ForestParams p = small_params(1);
  p.min_leaf = 5;
  EXPECT_THROW(fit_forest(data, p, all_variables(3)), InvalidInput);
  EXPECT_THROW(fit_forest(data, small_params(1), {7}), InvalidInput);
}

TEST(FitForest, TinySampleGivesRootOnlyTrees) {
  auto data = make_data(10, 3, 1, 2);
  ForestParams p = small_params(2, 20);
  p.min_leaf = 5;
  p.subsample_size = 10;
  const Forest f = fit_forest(data, p, all_variables(3));
  for (const auto& t : f.trees()) EXPECT_EQ(t.nodes.size(), 1u);
}

TEST(FitForest, ConstantOutputStillGivesSimplexWeights) {
  auto base = make_data(60, 3, 1, 3);
  Dataset d = *base;
  d.y.setConstant(2.0);
  auto data = std::make_shared<const Dataset>(d);
  const Forest f = fit_forest(data, small_params(3), all_variables(3));
  EXPECT_DOUBLE_EQ(f.kernel().bandwidth, 1.0);
  for (Eigen::Index i = 0; i < 10; ++i) {
    const auto w = f.weights(row_span(d.x, i));
    EXPECT_NEAR(w.sum(), 1.0, 1e-10);
  }
}

TEST(FitForest, DeterministicSerialization) {
  auto data = make_data(120, 4, 2, 4);
  const Forest a = fit_forest(data, small_params(9), all_variables(4));
  const Forest b = fit_forest(data, small_params(9), all_variables(4));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  ForestParams threaded = small_params(9);
  threaded.threads = 3;
  EXPECT_EQ(to_json(a).dump(), to_json(fit_forest(data, threaded, all_variables(4))).dump());
  EXPECT_NE(to_json(a).dump(), to_json(fit_forest(data, small_params(10), all_variables(4))).dump());
}

TEST(FitForest, SubsamplesAndHonestyHalves) {
  auto data = make_data(200, 3, 1, 5);
  ForestParams p = small_params(5, 15);
  p.subsample_exponent = 0.8;
  const Forest f = fit_forest(data, p, all_variables(3));
  const std::size_t s = p.resolve_subsample(200);
  EXPECT_EQ(s, static_cast<std::size_t>(std::ceil(std::pow(200.0, 0.8))));
  for (const auto& t : f.trees()) {
    EXPECT_EQ(t.subsample.size(), s);
    EXPECT_TRUE(std::adjacent_find(t.subsample.begin(), t.subsample.end()) == t.subsample.end());
    EXPECT_EQ(t.structure.size(), (s + 1) / 2);
    EXPECT_EQ(t.estimation.size(), s / 2);
    std::vector<std::uint32_t> both;
    std::set_union(t.structure.begin(), t.structure.end(), t.estimation.begin(), t.estimation.end(),
                   std::back_inserter(both));
    EXPECT_EQ(both, t.subsample);
  }
}

TEST(FitForest, SplitsOnlyOnActiveVariables) {
  auto data = make_data(150, 5, 1, 6);
  const Forest f = fit_forest(data, small_params(6), {1, 3});
  const auto counts = f.split_counts();
  EXPECT_EQ(counts[0] + counts[2] + counts[4], 0u);
  EXPECT_GT(counts[1] + counts[3], 0u);
}

TEST(SplitScan, HandExample) {
  Matrix x(4, 1), y(4, 1);
  x << 0, 1, 2, 3;
  y << 0, 0, std::numbers::pi, std::numbers::pi;
  const Matrix features = FourierFeatureMap(Matrix::Ones(1, 1)).embed(y);
  const std::vector<std::uint32_t> rows{0, 1, 2, 3};
  const auto best = mmd_split_scan(rows, 0, x, features, 0.05, 1);
  ASSERT_TRUE(best.has_value());
  EXPECT_DOUBLE_EQ(best->threshold, 1.5);
  // |(1,0) - (-1,0)|^2 * 2*2/16 = 1.
  EXPECT_NEAR(best->statistic, 1.0, 1e-12);
  EXPECT_NEAR(oracle::split_statistic(rows, 0, 0.5, x, features), 1.0 / 3.0, 1e-12);
}

TEST(SplitScan, ConstantOutputGivesZeroStatistic) {
  Matrix x(6, 1), y = Matrix::Constant(6, 1, 3.0);
  x << 0, 1, 2, 3, 4, 5;
  const Matrix features = FourierFeatureMap::sample(5, KernelSpec(1.0, 1), 1).embed(y);
  const std::vector<std::uint32_t> rows{0, 1, 2, 3, 4, 5};
  const auto best = mmd_split_scan(rows, 0, x, features, 0.05, 1);
  ASSERT_TRUE(best.has_value());
  EXPECT_NEAR(best->statistic, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(best->threshold, 0.5);  // ties go to the smallest threshold
}

TEST(SplitScan, NoSpreadOrTooFewRows) {
  Matrix x = Matrix::Constant(6, 1, 1.0), y(6, 1);
  y << 0, 1, 2, 3, 4, 5;
  const Matrix features = FourierFeatureMap::sample(5, KernelSpec(1.0, 1), 1).embed(y);
  const std::vector<std::uint32_t> rows{0, 1, 2, 3, 4, 5};
  EXPECT_FALSE(mmd_split_scan(rows, 0, x, features, 0.05, 1).has_value());
  Matrix x2(6, 1);
  x2 << 0, 1, 2, 3, 4, 5;
  EXPECT_FALSE(mmd_split_scan(rows, 0, x2, features, 0.05, 4).has_value());
}

// Every admissible threshold is recomputed from scratch; the scan must return
// the maximizer (smallest threshold on ties) with a matching statistic.
TEST(SplitScan, MatchesNaiveOracleOnRandomNodes) {
  std::mt19937_64 rng(21);
  for (int node = 0; node < 50; ++node) {
    const std::size_t n = 10 + static_cast<std::size_t>(node) * 3;
    Matrix x = oracle::random_matrix(n, 2, rng);
    if (node % 5 == 0)
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 1) = std::round(x(i, 1) * 2.0);  // ties in X
    const Matrix y = oracle::random_matrix(n, 2, rng);
    const Matrix features = FourierFeatureMap::sample(7, KernelSpec(1.0, 2), static_cast<std::uint64_t>(node)).embed(y);
    std::vector<std::uint32_t> rows(n);
    for (std::size_t r = 0; r < n; ++r) rows[r] = static_cast<std::uint32_t>(r);
    const std::size_t kappa = 1 + static_cast<std::size_t>(node) % 4;
    const double alpha = 0.1;
    for (std::size_t var = 0; var < 2; ++var) {
      std::vector<double> sorted(n);
      for (std::size_t r = 0; r < n; ++r) sorted[r] = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(var));
      std::sort(sorted.begin(), sorted.end());
      const std::size_t min_side = std::max<std::size_t>(kappa, static_cast<std::size_t>(std::ceil(alpha * n - 1e-12)));
      std::optional<std::pair<double, double>> best;
      for (std::size_t k = 1; k < n; ++k) {
        if (sorted[k - 1] == sorted[k] || k < min_side || n - k < min_side) continue;
        const double thr = 0.5 * (sorted[k - 1] + sorted[k]);
        const double stat = oracle::split_statistic(rows, var, thr, x, features);
        if (!best || stat > best->second + 1e-12) best = {thr, stat};
      }
      const auto got = mmd_split_scan(rows, var, x, features, alpha, kappa);
      ASSERT_EQ(got.has_value(), best.has_value());
      if (!got) continue;
      EXPECT_NEAR(got->statistic, best->second, 1e-10);
      EXPECT_NEAR(oracle::split_statistic(rows, var, got->threshold, x, features), got->statistic, 1e-10);
      EXPECT_DOUBLE_EQ(got->threshold, best->first);
    }
  }
}

TEST(Candidates, RandomSplitFloor) {
  const auto active = all_variables(10);
  std::mt19937_64 rng(31);
  std::vector<double> freq(10, 0.0);
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    const auto c = draw_candidates(active, 3, rng);
    ASSERT_EQ(c.size(), 3u);
    ASSERT_TRUE(std::is_sorted(c.begin(), c.end()));
    for (auto v : c) freq[v] += 1.0 / draws;
  }
  for (double f : freq) EXPECT_NEAR(f, 0.3, 0.02);
}

TEST(Weights, SingleRootLeaf) {
  auto data = make_data(10, 2, 1, 7);
  Tree t;
  add_leaf(t, {2, 5, 9});
  const Forest f = hand_forest(data, {t});
  const auto w = f.weights(row_span(data->x, 0));
  EXPECT_EQ(w.index, (std::vector<std::uint32_t>{2, 5, 9}));
  for (double v : w.value) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(Weights, HandRoutedSplit) {
  auto data = make_data(5, 1, 1, 8);
  Tree t;
  t.nodes.push_back(split(0, 0.5, 1, 2));
  add_leaf(t, {0, 1});
  add_leaf(t, {2, 3, 4});
  const Forest f = hand_forest(data, {t});
  const std::vector<double> x{0.2};
  const auto w = f.weights(x);
  EXPECT_EQ(w.index, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(w.value, (std::vector<double>{0.5, 0.5}));
  const std::vector<double> x2{0.9};
  EXPECT_EQ(f.weights(x2).index, (std::vector<std::uint32_t>{2, 3, 4}));
}

TEST(Weights, EmptyForestAndBadQuery) {
  auto data = make_data(5, 2, 1, 9);
  const Forest f = hand_forest(data, {});
  const std::vector<double> x{0.0, 0.0};
  EXPECT_THROW(f.weights(x), InvalidState);
  Tree t;
  add_leaf(t, {0});
  const Forest g = hand_forest(data, {t});
  const std::vector<double> bad{0.0};
  EXPECT_THROW(g.weights(bad), InvalidInput);
}

TEST(Weights, SimplexAndOracleAgreement) {
  auto data = make_data(150, 4, 2, 10);
  const Forest f = fit_forest(data, small_params(10, 25), all_variables(4));
  std::mt19937_64 rng(3);
  const Matrix q = oracle::random_matrix(40, 4, rng);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const auto w = f.weights(row_span(q, i));
    const auto expected = oracle::weights(f, q.data() + i * q.cols());
    const auto got = dense(w, data->n());
    double total = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_NEAR(got[k], expected[k], 1e-14);
      EXPECT_GE(got[k], 0.0);
      total += got[k];
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
    for (auto r : w.index) {
      bool in_some_estimation = false;
      for (const auto& t : f.trees())
        in_some_estimation |= std::binary_search(t.estimation.begin(), t.estimation.end(), r);
      EXPECT_TRUE(in_some_estimation);
    }
  }
}

TEST(OutOfBag, FullSubsampleFlagsEveryRow) {
  auto data = make_data(30, 2, 1, 11);
  ForestParams p = small_params(11, 1);
  p.subsample_size = 30;
  const auto oob = oob_query_set(fit_forest(data, p, all_variables(2)));
  EXPECT_EQ(oob.num_flagged(), 30u);
}

TEST(OutOfBag, FractionMatchesSubsampleRate) {
  auto data = make_data(400, 2, 1, 12);
  ForestParams p = small_params(12, 200);
  p.subsample_exponent = 0.7;
  const Forest f = fit_forest(data, p, all_variables(2));
  const auto oob = f.oob_sets();
  double mean = 0.0;
  for (const auto& t : oob.trees) mean += static_cast<double>(t.size()) / 200.0;
  mean /= 400.0;
  const double s = static_cast<double>(p.resolve_subsample(400));
  EXPECT_NEAR(mean, 1.0 - s / 400.0, 0.02);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto w = f.weights(row_span(data->x, static_cast<Eigen::Index>(i)), oob.trees[i]);
    EXPECT_NEAR(w.sum(), 1.0, 1e-10);
    for (auto t : oob.trees[i]) EXPECT_FALSE(f.trees()[t].contains(static_cast<std::uint32_t>(i)));
  }
}

TEST(Audit, StructuralInvariantsOnGenerators) {
  const std::vector<Dataset> sets{gen_motivating(300, 1), gen_univariate(300, 2), gen_bivariate(300, 3),
                                  gen_functional(300, 10, 4)};
  for (const auto& d : sets) {
    ForestParams p = small_params(5, 20);
    p.min_leaf = 5;
    const Forest f = fit_forest(d, p, all_variables(d.p()));
    const auto audit = audit_forest(f);
    EXPECT_GE(audit.min_child_fraction, p.alpha);
    EXPECT_EQ(audit.unexplained_leaf_sizes, 0u);
    EXPECT_EQ(audit.honesty_violations, 0u);
    EXPECT_GT(audit.internal_nodes, 0u);
  }
}

TEST(Audit, HonestyPermutationLeavesStructureUnchanged) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto data = make_data(120, 3, 1, 100 + seed);
    ForestParams p = small_params(seed, 1);
    const Forest f = fit_forest(data, p, all_variables(3));
    p.bandwidth = f.kernel().bandwidth;
    const Tree& tree = f.trees()[0];
    Dataset shuffled = *data;
    std::vector<std::uint32_t> perm = tree.estimation;
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k = 0; k < perm.size(); ++k) shuffled.y.row(tree.estimation[k]) = data->y.row(perm[k]);
    const Forest g = fit_forest(shuffled, p, all_variables(3));
    EXPECT_TRUE(tree.same_structure(g.trees()[0]));
    EXPECT_EQ(tree.estimation, g.trees()[0].estimation);
  }
}

TEST(Audit, NoHonestyModeUsesWholeSubsample) {
  auto data = make_data(100, 2, 1, 13);
  ForestParams p = small_params(13, 3);
  p.honesty = false;
  const Forest f = fit_forest(data, p, all_variables(2));
  for (const auto& t : f.trees()) EXPECT_EQ(t.structure, t.estimation);
  EXPECT_EQ(audit_forest(f).honesty_violations, 0u);
}

TEST(FitForest, PerTreeFourierOption) {
  auto data = make_data(100, 2, 1, 14);
  ForestParams p = small_params(14, 4);
  p.per_tree_fourier = true;
  const Forest f = fit_forest(data, p, all_variables(2));
  EXPECT_EQ(f.num_trees(), 4u);
  EXPECT_EQ(audit_forest(f).unexplained_leaf_sizes, 0u);
}

}  // namespace
}  // namespace drfvi
