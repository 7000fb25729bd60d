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
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drfvi/common.hpp"
#include "drfvi/dataset.hpp"
#include "drfvi/kernel.hpp"

namespace drfvi {

struct ForestParams {
  std::size_t num_trees = 500;
  // Subsample size is ceil(n^subsample_exponent) unless subsample_size > 0.
  double subsample_exponent = 0.9;
  std::size_t subsample_size = 0;
  std::size_t min_leaf = 5;
  double alpha = 0.05;
  // Candidate split variables per node; 0 means ceil(sqrt(|active|)).
  std::size_t mtry = 0;
  std::size_t num_fourier = 10;
  bool honesty = true;
  bool per_tree_fourier = false;
  std::uint64_t seed = 1;
  // Controls which rows each tree sees. Defaults to `seed` when unset; refits
  // that must share out-of-bag sets with another forest pin it explicitly.
  std::optional<std::uint64_t> subsample_seed;
  // Kernel bandwidth; 0 selects the median heuristic on the training outputs.
  double bandwidth = 0.0;
  unsigned threads = 0;

  std::uint64_t effective_subsample_seed() const noexcept { return subsample_seed.value_or(seed); }

  void validate(std::size_t p) const {
    if (num_trees < 1) throw InvalidInput("forest: num_trees must be >= 1");
    if (subsample_size == 0 && !(subsample_exponent > 0.0 && subsample_exponent < 1.0))
      throw InvalidInput("forest: subsample exponent must lie in (0, 1)");
    if (min_leaf < 1) throw InvalidInput("forest: min_leaf must be >= 1");
    if (!(alpha > 0.0 && alpha <= 0.2)) throw InvalidInput("forest: alpha must lie in (0, 0.2]");
    if (mtry > p) throw InvalidInput("forest: mtry exceeds the number of variables");
    if (num_fourier < 1) throw InvalidInput("forest: num_fourier must be >= 1");
    if (bandwidth < 0.0 || !std::isfinite(bandwidth))
      throw InvalidInput("forest: bandwidth must be nonnegative and finite");
  }

  std::size_t resolve_subsample(std::size_t n) const {
    std::size_t s = subsample_size;
    if (s == 0) s = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), subsample_exponent) - 1e-9));
    return std::clamp<std::size_t>(s, std::min<std::size_t>(2, n), n);
  }

  std::size_t resolve_mtry(std::size_t num_active) const {
    if (mtry > 0) return std::min(mtry, num_active);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(num_active)))));
  }
};

struct TreeNode {
  std::int32_t split_variable = -1;  // -1 marks a leaf
  double threshold = 0.0;            // x[var] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t leaf_begin = 0;      // range into Tree::leaf_samples
  std::uint32_t leaf_end = 0;
  std::uint32_t structure_count = 0;
  std::uint32_t estimation_count = 0;
  // Leaf that could have been split by size but had no admissible threshold.
  bool no_admissible_split = false;

  bool is_leaf() const noexcept { return split_variable < 0; }
  std::uint32_t leaf_size() const noexcept { return leaf_end - leaf_begin; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> leaf_samples;  // estimation rows, grouped by leaf
  std::vector<std::uint32_t> subsample;     // sorted
  std::vector<std::uint32_t> structure;     // sorted
  std::vector<std::uint32_t> estimation;    // sorted
  std::uint64_t seed = 0;

  std::span<const std::uint32_t> leaf(std::int32_t node) const {
    const auto& nd = nodes[static_cast<std::size_t>(node)];
    return {leaf_samples.data() + nd.leaf_begin, nd.leaf_size()};
  }

  std::int32_t find_leaf(std::span<const double> x) const {
    std::int32_t id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
      const auto& nd = nodes[static_cast<std::size_t>(id)];
      id = x[static_cast<std::size_t>(nd.split_variable)] <= nd.threshold ? nd.left : nd.right;
    }
    return id;
  }

  bool contains(std::uint32_t row) const {
    return std::binary_search(subsample.begin(), subsample.end(), row);
  }

  bool same_structure(const Tree& other) const {
    if (nodes.size() != other.nodes.size()) return false;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto& a = nodes[k];
      const auto& b = other.nodes[k];
      if (a.split_variable != b.split_variable || a.threshold != b.threshold || a.left != b.left ||
          a.right != b.right)
        return false;
    }
    return true;
  }

  bool operator==(const Tree&) const = default;
};

struct SplitCandidate {
  double threshold = 0.0;
  double statistic = 0.0;
  std::size_t left_count = 0;
};

// Two-sample MMD split statistic (n_L n_R / n_P^2) |mean(phi_L) - mean(phi_R)|^2
// scanned over the node rows sorted by column `variable`, in one pass with
// running sums. Admissible splits leave at least max(kappa, ceil(alpha n_P))
// node rows on each side and, when `estimation_values` is given, at least
// kappa of those values on each side. Returns the best threshold (midpoint of
// the straddling values; ties go to the smallest threshold) or nothing.
inline std::optional<SplitCandidate> mmd_split_scan(std::span<const std::uint32_t> node_rows,
                                                    std::size_t variable, const Matrix& x,
                                                    const Matrix& features, double alpha,
                                                    std::size_t kappa,
                                                    std::span<const double> estimation_values = {},
                                                    bool check_estimation = false) {
  const std::size_t n = node_rows.size();
  if (n < 2 * kappa || n < 2) return std::nullopt;
  const auto min_side = std::max<std::size_t>(
      {kappa, static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-12)), 1});
  if (2 * min_side > n) return std::nullopt;

  std::vector<std::pair<double, std::uint32_t>> order(n);
  for (std::size_t k = 0; k < n; ++k)
    order[k] = {x(node_rows[k], static_cast<Eigen::Index>(variable)), node_rows[k]};
  std::sort(order.begin(), order.end());
  if (order.front().first == order.back().first) return std::nullopt;

  std::vector<double> est;
  if (check_estimation) {
    est.assign(estimation_values.begin(), estimation_values.end());
    std::sort(est.begin(), est.end());
    if (est.size() < 2 * kappa) return std::nullopt;
  }

  const Eigen::Index width = features.cols();
  Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(width);
  for (const auto& [v, row] : order) total += features.row(row);
  Eigen::RowVectorXd left = Eigen::RowVectorXd::Zero(width);

  const double np = static_cast<double>(n);
  std::optional<SplitCandidate> best;
  std::size_t est_left = 0;
  for (std::size_t k = 1; k < n; ++k) {
    left += features.row(order[k - 1].second);
    const double lo = order[k - 1].first;
    const double hi = order[k].first;
    if (lo == hi) continue;
    if (k < min_side || n - k < min_side) continue;
    double threshold = lo + 0.5 * (hi - lo);
    if (threshold >= hi) threshold = lo;
    if (check_estimation) {
      while (est_left < est.size() && est[est_left] <= threshold) ++est_left;
      if (est_left < kappa || est.size() - est_left < kappa) continue;
    }
    const double nl = static_cast<double>(k);
    const double nr = np - nl;
    const double stat = (nl * nr / (np * np)) * (left / nl - (total - left) / nr).squaredNorm();
    // Gains within rounding of the incumbent count as ties.
    if (!best || stat > best->statistic + 1e-12) best = SplitCandidate{threshold, stat, k};
  }
  return best;
}

// Draws `mtry` distinct variables uniformly from `active`, returned sorted.
inline std::vector<std::size_t> draw_candidates(const std::vector<std::size_t>& active,
                                                std::size_t mtry, std::mt19937_64& rng) {
  std::vector<std::size_t> pool = active;
  const std::size_t m = std::min(mtry, pool.size());
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Grows one honest tree on `subsample`. Split choices depend only on the
// structure half's rows (their X and their features) and, for admissibility,
// the estimation half's X values; never on estimation outputs.
inline Tree grow_tree(const Matrix& x, const Matrix& features, const std::vector<std::size_t>& active,
                      const ForestParams& params, std::vector<std::uint32_t> subsample,
                      std::uint64_t tree_seed) {
  Tree tree;
  tree.seed = tree_seed;
  std::mt19937_64 rng(tree_seed);
  std::sort(subsample.begin(), subsample.end());
  tree.subsample = subsample;

  std::vector<std::uint32_t> structure, estimation;
  if (params.honesty) {
    std::vector<std::uint32_t> shuffled = subsample;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const std::size_t cut = (shuffled.size() + 1) / 2;
    structure.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(cut));
    estimation.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(cut), shuffled.end());
    std::sort(structure.begin(), structure.end());
    std::sort(estimation.begin(), estimation.end());
  } else {
    structure = subsample;
    estimation = subsample;
  }
  tree.structure = structure;
  tree.estimation = estimation;

  const std::size_t kappa = params.min_leaf;
  const std::size_t mtry = params.resolve_mtry(active.size());

  struct Work {
    std::int32_t node;
    std::vector<std::uint32_t> structure;
    std::vector<std::uint32_t> estimation;
  };
  std::vector<Work> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::move(structure), std::move(estimation)});

  std::vector<double> est_values;
  while (!stack.empty()) {
    Work work = std::move(stack.back());
    stack.pop_back();
    auto id = static_cast<std::size_t>(work.node);
    tree.nodes[id].structure_count = static_cast<std::uint32_t>(work.structure.size());
    tree.nodes[id].estimation_count = static_cast<std::uint32_t>(work.estimation.size());

    const bool splittable = work.estimation.size() >= 2 * kappa && work.structure.size() >= 2 * kappa;
    std::optional<SplitCandidate> best;
    std::size_t best_var = 0;
    if (splittable) {
      for (std::size_t var : draw_candidates(active, mtry, rng)) {
        est_values.resize(work.estimation.size());
        for (std::size_t k = 0; k < work.estimation.size(); ++k)
          est_values[k] = x(work.estimation[k], static_cast<Eigen::Index>(var));
        auto cand = mmd_split_scan(work.structure, var, x, features, params.alpha, kappa, est_values,
                                   params.honesty);
        if (cand && (!best || cand->statistic > best->statistic)) {
          best = cand;
          best_var = var;
        }
      }
    }

    if (!best) {
      auto& nd = tree.nodes[id];
      nd.leaf_begin = static_cast<std::uint32_t>(tree.leaf_samples.size());
      tree.leaf_samples.insert(tree.leaf_samples.end(), work.estimation.begin(), work.estimation.end());
      nd.leaf_end = static_cast<std::uint32_t>(tree.leaf_samples.size());
      nd.no_admissible_split = work.estimation.size() >= 2 * kappa;
      continue;
    }

    Work left{static_cast<std::int32_t>(tree.nodes.size()), {}, {}};
    Work right{static_cast<std::int32_t>(tree.nodes.size() + 1), {}, {}};
    const auto col = static_cast<Eigen::Index>(best_var);
    for (auto r : work.structure) (x(r, col) <= best->threshold ? left : right).structure.push_back(r);
    for (auto r : work.estimation) (x(r, col) <= best->threshold ? left : right).estimation.push_back(r);
    auto& nd = tree.nodes[id];
    nd.split_variable = static_cast<std::int32_t>(best_var);
    nd.threshold = best->threshold;
    nd.left = left.node;
    nd.right = right.node;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    // Right first so the left subtree is expanded next (depth-first, left-to-right).
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return tree;
}

inline std::vector<std::uint32_t> draw_subsample(std::size_t n, std::size_t size, std::uint64_t seed) {
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0U);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < size; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(rows[k], rows[pick(rng)]);
  }
  rows.resize(size);
  std::sort(rows.begin(), rows.end());
  return rows;
}

// Weight vector w(x): nonnegative, sums to one, supported on estimation rows.
using WeightVector = SparseVector;

namespace detail {

// Dense scratch for summing (row, mass) contributions into a sorted sparse
// vector. One instance per thread; reused across queries.
class Accumulator {
 public:
  void reset(std::size_t n) {
    if (dense_.size() != n) {
      dense_.assign(n, 0.0);
      seen_.assign(n, 0);
    }
    touched_.clear();
  }

  void add(std::uint32_t row, double mass) {
    if (!seen_[row]) {
      seen_[row] = 1;
      touched_.push_back(row);
    }
    dense_[row] += mass;
  }

  // Emits touched rows in increasing order and clears them.
  WeightVector take() {
    WeightVector w;
    w.index.reserve(touched_.size());
    w.value.reserve(touched_.size());
    auto emit = [&](std::uint32_t r) {
      w.index.push_back(r);
      w.value.push_back(dense_[r]);
      dense_[r] = 0.0;
      seen_[r] = 0;
    };
    if (touched_.size() * 8 > dense_.size()) {
      for (std::size_t r = 0; r < dense_.size(); ++r)
        if (seen_[r]) emit(static_cast<std::uint32_t>(r));
    } else {
      std::sort(touched_.begin(), touched_.end());
      for (auto r : touched_) emit(r);
    }
    touched_.clear();
    return w;
  }

  static Accumulator& local(std::size_t n) {
    thread_local Accumulator acc;
    acc.reset(n);
    return acc;
  }

 private:
  std::vector<double> dense_;
  std::vector<char> seen_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace detail

struct OobSets {
  // trees[i]: trees whose subsample excludes training row i.
  std::vector<std::vector<std::uint32_t>> trees;
  // Rows with no out-of-bag tree; excluded from downstream averages.
  std::vector<bool> flagged;

  std::size_t num_flagged() const {
    return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true));
  }
};

class Forest {
 public:
  Forest() = default;
  Forest(std::shared_ptr<const Dataset> data, ForestParams params, KernelSpec kernel,
         FourierFeatureMap fourier, std::vector<std::size_t> active, std::vector<Tree> trees)
      : data_(std::move(data)),
        params_(std::move(params)),
        kernel_(kernel),
        fourier_(std::move(fourier)),
        active_(std::move(active)),
        trees_(std::move(trees)) {}

  const Dataset& data() const {
    if (!data_) throw InvalidState("forest: no training data attached");
    return *data_;
  }
  std::shared_ptr<const Dataset> data_ptr() const noexcept { return data_; }
  const ForestParams& params() const noexcept { return params_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const FourierFeatureMap& fourier() const noexcept { return fourier_; }
  const std::vector<std::size_t>& active() const noexcept { return active_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  std::size_t num_trees() const noexcept { return trees_.size(); }
  std::size_t num_train() const { return data().n(); }

  bool is_active(std::size_t var) const {
    return std::find(active_.begin(), active_.end(), var) != active_.end();
  }

  void check_query(std::span<const double> x) const {
    if (trees_.empty()) throw InvalidState("forest: no trees");
    if (x.size() != data().p())
      throw InvalidInput("forest: query has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(data().p()));
  }

  // Average over `tree_ids` of the uniform distribution on the reached leaf.
  WeightVector weights(std::span<const double> x, std::span<const std::uint32_t> tree_ids) const {
    check_query(x);
    auto& acc = detail::Accumulator::local(num_train());
    const double per_tree = 1.0 / static_cast<double>(tree_ids.size());
    for (auto t : tree_ids) {
      const Tree& tree = trees_[t];
      const auto members = tree.leaf(tree.find_leaf(x));
      const double mass = per_tree / static_cast<double>(members.size());
      for (auto r : members) acc.add(r, mass);
    }
    return acc.take();
  }

  WeightVector weights(std::span<const double> x) const {
    return weights(x, all_tree_ids());
  }

  std::vector<std::uint32_t> all_tree_ids() const {
    std::vector<std::uint32_t> ids(trees_.size());
    std::iota(ids.begin(), ids.end(), 0U);
    return ids;
  }

  OobSets oob_sets() const {
    const std::size_t n = num_train();
    OobSets out;
    out.trees.assign(n, {});
    out.flagged.assign(n, false);
    std::vector<bool> in(n);
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      std::fill(in.begin(), in.end(), false);
      for (auto r : trees_[t].subsample) in[r] = true;
      for (std::size_t i = 0; i < n; ++i)
        if (!in[i]) out.trees[i].push_back(static_cast<std::uint32_t>(t));
    }
    for (std::size_t i = 0; i < n; ++i) out.flagged[i] = out.trees[i].empty();
    return out;
  }

  // Number of internal nodes splitting on each column (size p).
  std::vector<std::size_t> split_counts() const {
    std::vector<std::size_t> counts(data().p(), 0);
    for (const auto& tree : trees_)
      for (const auto& nd : tree.nodes)
        if (!nd.is_leaf()) ++counts[static_cast<std::size_t>(nd.split_variable)];
    return counts;
  }

  bool operator==(const Forest& o) const {
    return params_.num_trees == o.params_.num_trees && kernel_ == o.kernel_ &&
           fourier_.frequencies() == o.fourier_.frequencies() && active_ == o.active_ &&
           trees_ == o.trees_;
  }

 private:
  std::shared_ptr<const Dataset> data_;
  ForestParams params_;
  KernelSpec kernel_;
  FourierFeatureMap fourier_;
  std::vector<std::size_t> active_;
  std::vector<Tree> trees_;
};

inline WeightVector forest_weights(const Forest& forest, std::span<const double> x) {
  return forest.weights(x);
}

inline OobSets oob_query_set(const Forest& forest) { return forest.oob_sets(); }

inline KernelSpec resolve_kernel(const Dataset& data, const ForestParams& params) {
  if (params.bandwidth > 0.0) return KernelSpec(params.bandwidth, data.d());
  if (data.n() < 2) return KernelSpec(1.0, data.d());
  return KernelSpec(median_heuristic_bandwidth(data.y, 10000, params.seed).bandwidth, data.d());
}

inline std::vector<std::size_t> all_variables(std::size_t p) {
  std::vector<std::size_t> v(p);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Fits N honest trees on independent subsamples. Tree l draws its rows from
// mix_seed(subsample_seed, l) and grows with mix_seed(seed, l), so the result
// does not depend on scheduling.
inline Forest fit_forest(std::shared_ptr<const Dataset> data, const ForestParams& params,
                         std::vector<std::size_t> active, std::optional<KernelSpec> kernel = {}) {
  if (!data) throw InvalidInput("fit_forest: no data");
  const std::size_t n = data->n(), p = data->p();
  params.validate(p);
  if (active.empty()) throw InvalidInput("fit_forest: empty active variable set");
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  if (active.back() >= p) throw InvalidInput("fit_forest: active variable out of range");
  if (n < 2 * params.min_leaf)
    throw InvalidInput("fit_forest: n = " + std::to_string(n) + " is below 2 * min_leaf");
  if (static_cast<std::size_t>(data->y.rows()) != n) throw InvalidInput("fit_forest: X/Y row mismatch");

  const KernelSpec spec = kernel ? *kernel : resolve_kernel(*data, params);
  spec.validate();
  if (spec.output_dim != data->d()) throw InvalidInput("fit_forest: kernel dimension mismatch");
  auto fourier = FourierFeatureMap::sample(params.num_fourier, spec, mix_seed(params.seed, 0xF0F0));
  Matrix shared_features;
  if (!params.per_tree_fourier) shared_features = fourier.embed(data->y);

  const std::size_t s = params.resolve_subsample(n);
  std::vector<Tree> trees(params.num_trees);
  parallel_for(params.num_trees, params.threads, [&](std::size_t t) {
    auto rows = draw_subsample(n, s, mix_seed(params.effective_subsample_seed(), 2 * t + 1));
    const std::uint64_t tree_seed = mix_seed(params.seed, 2 * t);
    if (params.per_tree_fourier) {
      auto own = FourierFeatureMap::sample(params.num_fourier, spec, mix_seed(tree_seed, 0xF0F0));
      trees[t] = grow_tree(data->x, own.embed(data->y), active, params, std::move(rows), tree_seed);
    } else {
      trees[t] = grow_tree(data->x, shared_features, active, params, std::move(rows), tree_seed);
    }
  });
  return Forest(std::move(data), params, spec, std::move(fourier), std::move(active), std::move(trees));
}

inline Forest fit_forest(const Dataset& data, const ForestParams& params,
                         std::vector<std::size_t> active, std::optional<KernelSpec> kernel = {}) {
  return fit_forest(std::make_shared<const Dataset>(data), params, std::move(active), kernel);
}

// Structural checks over every tree of a forest.
struct ForestAudit {
  double min_child_fraction = 1.0;  // min over splits of child/parent structure count
  std::size_t internal_nodes = 0;
  std::size_t leaves = 0;
  std::size_t root_only_trees = 0;
  // Leaves outside [kappa, 2 kappa - 1] estimation rows.
  std::size_t leaf_size_exceptions = 0;
  // Of those, leaves not explained by root-only trees or a recorded
  // no-admissible-split flag. Must be zero.
  std::size_t unexplained_leaf_sizes = 0;
  // Estimation rows outside their tree's estimation half, or structure and
  // estimation halves overlapping under honesty. Must be zero.
  std::size_t honesty_violations = 0;
};

inline ForestAudit audit_forest(const Forest& forest) {
  ForestAudit audit;
  const std::size_t kappa = forest.params().min_leaf;
  for (const auto& tree : forest.trees()) {
    if (tree.nodes.size() == 1) ++audit.root_only_trees;
    for (const auto& nd : tree.nodes) {
      if (nd.is_leaf()) {
        ++audit.leaves;
        const auto size = nd.leaf_size();
        if (size < kappa || size > 2 * kappa - 1) {
          ++audit.leaf_size_exceptions;
          const bool explained = tree.nodes.size() == 1 || (size > 2 * kappa - 1 && nd.no_admissible_split);
          if (!explained) ++audit.unexplained_leaf_sizes;
        }
        for (auto r : tree.leaf(static_cast<std::int32_t>(&nd - tree.nodes.data())))
          if (!std::binary_search(tree.estimation.begin(), tree.estimation.end(), r))
            ++audit.honesty_violations;
        continue;
      }
      ++audit.internal_nodes;
      const auto& l = tree.nodes[static_cast<std::size_t>(nd.left)];
      const auto& r = tree.nodes[static_cast<std::size_t>(nd.right)];
      const double parent = nd.structure_count;
      audit.min_child_fraction =
          std::min({audit.min_child_fraction, l.structure_count / parent, r.structure_count / parent});
    }
    if (forest.params().honesty) {
      std::vector<std::uint32_t> both;
      std::set_intersection(tree.structure.begin(), tree.structure.end(), tree.estimation.begin(),
                            tree.estimation.end(), std::back_inserter(both));
      audit.honesty_violations += both.size();
    }
  }
  return audit;
}

}  // namespace drfvi
