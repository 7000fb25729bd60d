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
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "drfvi/common.hpp"
#include "drfvi/dataset.hpp"
#include "drfvi/forest.hpp"
#include "drfvi/kernel.hpp"
#include "drfvi/projection.hpp"

namespace drfvi {

enum class ImportanceMethod { kRetrain, kProjected, kSplitFrequency };
enum class EvalMode { kIndependentSample, kOutOfBag };

inline std::string to_string(ImportanceMethod m) {
  switch (m) {
    case ImportanceMethod::kRetrain: return "retrain";
    case ImportanceMethod::kProjected: return "projected";
    case ImportanceMethod::kSplitFrequency: return "split_frequency";
  }
  return "unknown";
}

inline ImportanceMethod parse_method(const std::string& s) {
  if (s == "retrain") return ImportanceMethod::kRetrain;
  if (s == "projected") return ImportanceMethod::kProjected;
  if (s == "split_frequency" || s == "split-frequency") return ImportanceMethod::kSplitFrequency;
  throw InvalidInput("unknown importance method '" + s + "'");
}

inline std::string to_string(EvalMode m) {
  return m == EvalMode::kOutOfBag ? "oob" : "independent_sample";
}

// Where the importance ratio is evaluated: out-of-bag training rows, or an
// independent sample of inputs.
struct EvalSpec {
  EvalMode mode = EvalMode::kOutOfBag;
  Matrix points;  // used for kIndependentSample

  static EvalSpec oob() { return {}; }
  static EvalSpec independent(Matrix x) { return {EvalMode::kIndependentSample, std::move(x)}; }
};

struct VariableScore {
  std::size_t variable = 0;
  std::string name;
  double value = 0.0;
  std::optional<std::string> error;
};

struct ImportanceReport {
  ImportanceMethod method = ImportanceMethod::kRetrain;
  EvalMode eval_mode = EvalMode::kOutOfBag;
  std::vector<VariableScore> scores;
  // Sum over evaluation points of |mu(x_i) - mean mu|_H^2 (unnormalized; 1/m cancels).
  double normalizer = 0.0;
  // Retrain only: the drop ratio obtained by refitting with every variable kept.
  double correction = 0.0;
  bool degenerate = false;
  std::size_t eval_points = 0;
  std::size_t excluded_points = 0;  // OOB rows without any out-of-bag tree
  std::size_t fallback_trees = 0;   // projected only
  std::vector<std::string> warnings;
  ForestParams params;
  double bandwidth = 0.0;

  std::optional<double> value_of(std::size_t variable) const {
    for (const auto& s : scores)
      if (s.variable == variable) return s.value;
    return std::nullopt;
  }

  // Variables ordered by decreasing value; ties by column index.
  std::vector<std::size_t> ranking() const {
    std::vector<VariableScore> sorted = scores;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.value != b.value) return a.value > b.value;
      return a.variable < b.variable;
    });
    std::vector<std::size_t> out;
    for (const auto& s : sorted) out.push_back(s.variable);
    return out;
  }

  void clip_negative() {
    for (auto& s : scores) s.value = std::max(0.0, s.value);
  }
};

// Resolved evaluation: the query rows and the trees each one may use.
struct EvalPlan {
  EvalMode mode = EvalMode::kOutOfBag;
  const Matrix* points = nullptr;
  std::vector<std::uint32_t> rows;                    // rows of *points that are evaluated
  std::vector<std::vector<std::uint32_t>> tree_ids;   // per evaluated row (OOB only)
  std::size_t excluded = 0;

  std::size_t size() const noexcept { return rows.size(); }
  std::span<const double> point(std::size_t k) const { return row_span(*points, rows[k]); }
};

inline EvalPlan make_eval_plan(const Forest& forest, const EvalSpec& spec) {
  EvalPlan plan;
  plan.mode = spec.mode;
  if (spec.mode == EvalMode::kIndependentSample) {
    if (spec.points.rows() < 1) throw InvalidInput("importance: empty evaluation sample");
    if (static_cast<std::size_t>(spec.points.cols()) != forest.data().p())
      throw InvalidInput("importance: evaluation sample has the wrong number of columns");
    plan.points = &spec.points;
    plan.rows.resize(static_cast<std::size_t>(spec.points.rows()));
    std::iota(plan.rows.begin(), plan.rows.end(), 0U);
    return plan;
  }
  plan.points = &forest.data().x;
  auto oob = forest.oob_sets();
  for (std::size_t i = 0; i < oob.trees.size(); ++i) {
    if (oob.flagged[i]) {
      ++plan.excluded;
      continue;
    }
    plan.rows.push_back(static_cast<std::uint32_t>(i));
    plan.tree_ids.push_back(std::move(oob.trees[i]));
  }
  if (plan.rows.empty()) throw InvalidState("importance: no row has an out-of-bag tree");
  return plan;
}

inline std::vector<WeightVector> plan_weights(const Forest& forest, const EvalPlan& plan) {
  std::vector<WeightVector> out(plan.size());
  const auto all = forest.all_tree_ids();
  parallel_for(plan.size(), forest.params().threads, [&](std::size_t k) {
    out[k] = plan.mode == EvalMode::kOutOfBag ? forest.weights(plan.point(k), plan.tree_ids[k])
                                              : forest.weights(plan.point(k), all);
  });
  return out;
}

// Sum_i (w_i - v_i)^T K (w_i - v_i).
inline double sum_weight_distances(const std::vector<WeightVector>& w, const std::vector<WeightVector>& v,
                                   const KernelMatrix& kernel, unsigned threads) {
  std::vector<double> parts(w.size());
  parallel_for(w.size(), threads,
               [&](std::size_t k) { parts[k] = kernel.quadratic(sparse_difference(w[k], v[k])); });
  double total = 0.0;
  for (double x : parts) total += x;
  return total;
}

// Sum_i (w_i - wbar)^T K (w_i - wbar) with wbar the mean weight vector.
inline double weight_dispersion(const std::vector<WeightVector>& w, const KernelMatrix& kernel,
                                unsigned threads) {
  const std::size_t n = kernel.size();
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(n));
  for (const auto& wi : w)
    for (std::size_t a = 0; a < wi.nnz(); ++a) mean[wi.index[a]] += wi.value[a];
  mean /= static_cast<double>(w.size());
  const Vector kmean = kernel.apply(mean);
  const double center = mean.dot(kmean);
  std::vector<double> parts(w.size());
  parallel_for(w.size(), threads, [&](std::size_t k) {
    parts[k] = kernel.quadratic(w[k]) - 2.0 * KernelMatrix::dot(w[k], kmean) + center;
  });
  double total = 0.0;
  for (double x : parts) total += x;
  return total;
}

inline constexpr double kDegenerateNormalizer = 1e-12;

namespace detail {

inline ImportanceReport make_report(const Forest& forest, ImportanceMethod method, const EvalPlan& plan) {
  ImportanceReport report;
  report.method = method;
  report.eval_mode = plan.mode;
  report.eval_points = plan.size();
  report.excluded_points = plan.excluded;
  report.params = forest.params();
  report.bandwidth = forest.kernel().bandwidth;
  return report;
}

inline void check_j_set(const Forest& forest, const std::vector<std::size_t>& j_set) {
  for (auto j : j_set)
    if (!forest.is_active(j))
      throw InvalidInput("importance: variable " + std::to_string(j + 1) + " is not active in the forest");
}

inline std::string var_name(const Forest& f, std::size_t j) {
  const auto& names = f.data().x_names;
  return j < names.size() ? names[j] : "X" + std::to_string(j + 1);
}

}  // namespace detail

// Seed conventions for the refits around a full forest with seed s: the
// all-variable correction refit uses s ^ 1, the drop-j refit mix_seed(s, 0x1000 + j).
// All refits share the full forest's subsample seed so out-of-bag sets align,
// and keep the full forest's resolved mtry so that dropping a column does not
// also change the number of split candidates.
inline ForestParams correction_params(const ForestParams& full, std::size_t num_active) {
  ForestParams p = full;
  p.seed = full.seed ^ 1ULL;
  p.subsample_seed = full.effective_subsample_seed();
  p.mtry = full.resolve_mtry(num_active);
  return p;
}

inline ForestParams drop_params(const ForestParams& full, std::size_t num_active, std::size_t j) {
  ForestParams p = correction_params(full, num_active);
  p.seed = mix_seed(full.seed, 0x1000 + j);
  return p;
}

// Drop-and-relearn importance around an already fitted full forest.
inline ImportanceReport importance_retrain(const Forest& full, const KernelMatrix& kernel,
                                           const EvalSpec& eval, const std::vector<std::size_t>& j_set) {
  detail::check_j_set(full, j_set);
  if (kernel.size() != full.num_train())
    throw InvalidInput("importance: kernel matrix size does not match the training set");
  const unsigned threads = full.params().threads;
  const EvalPlan plan = make_eval_plan(full, eval);
  auto report = detail::make_report(full, ImportanceMethod::kRetrain, plan);

  const auto base = plan_weights(full, plan);
  report.normalizer = weight_dispersion(base, kernel, threads);
  if (!(report.normalizer > kDegenerateNormalizer)) {
    report.degenerate = true;
    report.warnings.push_back("normalizer is ~0: forest weights do not vary across evaluation points");
    for (auto j : j_set) report.scores.push_back({j, detail::var_name(full, j), 0.0, std::nullopt});
    return report;
  }

  auto data = full.data_ptr();
  auto ratio_against = [&](const ForestParams& params, std::vector<std::size_t> active) {
    const Forest refit = fit_forest(data, params, std::move(active), full.kernel());
    const auto other = plan_weights(refit, plan);
    return sum_weight_distances(base, other, kernel, threads) / report.normalizer;
  };

  const std::size_t num_active = full.active().size();
  report.correction = ratio_against(correction_params(full.params(), num_active), full.active());
  for (auto j : j_set) {
    VariableScore score{j, detail::var_name(full, j), 0.0, std::nullopt};
    std::vector<std::size_t> active;
    for (auto v : full.active())
      if (v != j) active.push_back(v);
    if (active.empty()) {
      score.error = "cannot drop the only active variable";
    } else {
      try {
        score.value = ratio_against(drop_params(full.params(), num_active, j), std::move(active)) - report.correction;
      } catch (const Error& e) {
        score.error = e.what();
      }
    }
    report.scores.push_back(std::move(score));
  }
  return report;
}

// Fits the full forest, builds K on the training outputs and scores j_set.
inline ImportanceReport importance_retrain(std::shared_ptr<const Dataset> data, const ForestParams& params,
                                           const EvalSpec& eval, std::vector<std::size_t> j_set) {
  const Forest full = fit_forest(data, params, all_variables(data->p()));
  KernelMatrix kernel(data->y, full.kernel(), params.threads);
  kernel.factorize();
  if (j_set.empty()) j_set = full.active();
  return importance_retrain(full, kernel, eval, j_set);
}

// Projected importance: the drop is emulated on the full forest, no refit and
// no correction term.
inline ImportanceReport importance_projected(const Forest& forest, const KernelMatrix& kernel,
                                             const EvalSpec& eval, std::vector<std::size_t> j_set) {
  if (j_set.empty()) j_set = forest.active();
  detail::check_j_set(forest, j_set);
  if (kernel.size() != forest.num_train())
    throw InvalidInput("importance: kernel matrix size does not match the training set");
  const unsigned threads = forest.params().threads;
  const EvalPlan plan = make_eval_plan(forest, eval);
  auto report = detail::make_report(forest, ImportanceMethod::kProjected, plan);

  const auto base = plan_weights(forest, plan);
  report.normalizer = weight_dispersion(base, kernel, threads);
  if (!(report.normalizer > kDegenerateNormalizer)) {
    report.degenerate = true;
    report.warnings.push_back("normalizer is ~0: forest weights do not vary across evaluation points");
    for (auto j : j_set) report.scores.push_back({j, detail::var_name(forest, j), 0.0, std::nullopt});
    return report;
  }
  const auto all = forest.all_tree_ids();
  for (auto j : j_set) {
    const ProjectedForest projected(forest, j);
    std::vector<double> parts(plan.size());
    std::vector<std::size_t> fallbacks(plan.size());
    parallel_for(plan.size(), threads, [&](std::size_t k) {
      auto diff = plan.mode == EvalMode::kOutOfBag ? projected.difference(plan.point(k), plan.tree_ids[k])
                                                   : projected.difference(plan.point(k), all);
      fallbacks[k] = diff.fallback_trees;
      parts[k] = kernel.quadratic(diff.weights);
    });
    double numerator = 0.0;
    for (std::size_t k = 0; k < plan.size(); ++k) {
      numerator += parts[k];
      report.fallback_trees += fallbacks[k];
    }
    report.scores.push_back({j, detail::var_name(forest, j), numerator / report.normalizer, std::nullopt});
  }
  return report;
}

// Split-frequency convention. max_depth == 0 counts every internal node
// equally. max_depth > 0 keeps nodes at depth 1..max_depth (root is depth 1),
// normalizes the counts within each depth and averages the depths with
// weights depth^-decay_exponent.
struct SplitFrequencyOptions {
  std::size_t max_depth = 0;
  double decay_exponent = 2.0;
};

// Share of internal nodes (all trees) splitting on each active variable.
inline ImportanceReport split_frequency_importance(const Forest& forest, const SplitFrequencyOptions& options = {}) {
  ImportanceReport report;
  report.method = ImportanceMethod::kSplitFrequency;
  report.params = forest.params();
  report.bandwidth = forest.kernel().bandwidth;
  const std::size_t p = forest.data().p();
  std::vector<double> share(p, 0.0);
  bool any = false;
  if (options.max_depth == 0) {
    const auto counts = forest.split_counts();
    std::size_t total = 0;
    for (auto j : forest.active()) total += counts[j];
    any = total > 0;
    for (auto j : forest.active())
      share[j] = any ? static_cast<double>(counts[j]) / static_cast<double>(total) : 0.0;
  } else {
    std::vector<std::vector<double>> by_depth(options.max_depth, std::vector<double>(p, 0.0));
    for (const auto& tree : forest.trees()) {
      std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 1}};
      while (!stack.empty()) {
        const auto [id, depth] = stack.back();
        stack.pop_back();
        const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
        if (nd.is_leaf() || depth > options.max_depth) continue;
        by_depth[depth - 1][static_cast<std::size_t>(nd.split_variable)] += 1.0;
        stack.push_back({nd.left, depth + 1});
        stack.push_back({nd.right, depth + 1});
      }
    }
    for (std::size_t d = 0; d < options.max_depth; ++d) {
      const double w = std::pow(static_cast<double>(d + 1), -options.decay_exponent);
      double total = 0.0;
      for (double c : by_depth[d]) total += c;
      if (total == 0.0) continue;
      any = true;
      for (std::size_t j = 0; j < p; ++j) share[j] += w * by_depth[d][j] / total;
    }
    // Depths without splits contribute nothing; rescale so the shares sum to one.
    double sum = 0.0;
    for (double v : share) sum += v;
    if (sum > 0.0)
      for (auto& v : share) v /= sum;
  }
  if (!any) {
    report.degenerate = true;
    report.warnings.push_back("forest has no internal nodes");
  }
  for (auto j : forest.active()) report.scores.push_back({j, detail::var_name(forest, j), share[j], std::nullopt});
  return report;
}

}  // namespace drfvi
