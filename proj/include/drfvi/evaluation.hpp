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
#include <optional>
#include <string>
#include <vector>

#include "drfvi/common.hpp"
#include "drfvi/dataset.hpp"
#include "drfvi/forest.hpp"
#include "drfvi/importance.hpp"
#include "drfvi/kernel.hpp"

namespace drfvi {

// Held-out MMD loss up to the constant E|Phi(P_{Y|X})|^2:
//   (1/m) sum_i w(x_i)^T K w(x_i) - 2 w(x_i)^T k(y_i),
// with k(y)_a = k(Y_a, y) over the forest's training outputs. May be negative.
inline double mmd_loss(const Forest& forest, const KernelMatrix& kernel, const Matrix& eval_x,
                       const Matrix& eval_y) {
  if (eval_x.rows() < 1) throw InvalidInput("mmd_loss: empty evaluation set");
  if (eval_x.rows() != eval_y.rows()) throw InvalidInput("mmd_loss: evaluation X/Y row mismatch");
  if (kernel.size() != forest.num_train())
    throw InvalidInput("mmd_loss: kernel matrix size does not match the training set");
  if (static_cast<std::size_t>(eval_y.cols()) != forest.data().d())
    throw InvalidInput("mmd_loss: evaluation Y has the wrong dimension");
  const Matrix& train_y = forest.data().y;
  const KernelSpec& spec = kernel.spec();
  const auto all = forest.all_tree_ids();
  std::vector<double> parts(static_cast<std::size_t>(eval_x.rows()));
  parallel_for(parts.size(), forest.params().threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const auto w = forest.weights(row_span(eval_x, row), all);
    double cross = 0.0;
    for (std::size_t a = 0; a < w.nnz(); ++a)
      cross += w.value[a] * gaussian_kernel(row_span(train_y, w.index[a]), row_span(eval_y, row), spec);
    parts[i] = kernel.quadratic(w) - 2.0 * cross;
  });
  double total = 0.0;
  for (double v : parts) total += v;
  return total / static_cast<double>(parts.size());
}

struct RfeStep {
  std::vector<std::size_t> active;
  std::vector<VariableScore> importance;  // empty on the final step
  std::optional<std::size_t> removed;
  double loss = 0.0;
};

struct RfeTrace {
  ImportanceMethod method = ImportanceMethod::kRetrain;
  std::size_t stop_size = 3;
  std::vector<RfeStep> steps;
  double cumulative_loss = 0.0;
  std::vector<std::uint32_t> fit_rows;
  std::vector<std::uint32_t> eval_rows;
  double bandwidth = 0.0;
  std::optional<std::string> error;

  std::vector<std::size_t> final_active() const {
    return steps.empty() ? std::vector<std::size_t>{} : steps.back().active;
  }
};

// Argmin of the scores; ties go to the smallest column index. Scores carrying
// an error are skipped.
inline std::size_t least_important(const std::vector<VariableScore>& scores) {
  const VariableScore* best = nullptr;
  for (const auto& s : scores) {
    if (s.error) continue;
    if (!best || s.value < best->value || (s.value == best->value && s.variable < best->variable)) best = &s;
  }
  if (!best) throw NumericalFailure("rfe: no variable has a valid importance score");
  return best->variable;
}

struct RfeOptions {
  ImportanceMethod method = ImportanceMethod::kRetrain;
  std::size_t stop_size = 3;
};

// Recursive feature elimination on a fit/eval split. The bandwidth and K are
// fixed from the fit fold once; importance is computed out-of-bag on the fit
// fold and the loss on the eval fold. The forest at a given active-set size
// uses seed mix_seed(params.seed, |J|), so methods that agree on J fit the
// same forest.
inline RfeTrace rfe_run(const Dataset& data, const ForestParams& params, const RfeOptions& options,
                        const HalfSplit& split) {
  const std::size_t p = data.p();
  if (!(options.stop_size >= 1 && options.stop_size < p))
    throw InvalidInput("rfe: need p > stop_size >= 1");
  if (split.fit.empty() || split.eval.empty()) throw InvalidInput("rfe: empty fit or eval fold");
  RfeTrace trace;
  trace.method = options.method;
  trace.stop_size = options.stop_size;
  trace.fit_rows = split.fit;
  trace.eval_rows = split.eval;

  auto fit = std::make_shared<const Dataset>(data.subset(split.fit));
  const Dataset eval = data.subset(split.eval);
  const KernelSpec spec = resolve_kernel(*fit, params);
  trace.bandwidth = spec.bandwidth;
  KernelMatrix kernel(fit->y, spec, params.threads);
  kernel.factorize();

  std::vector<std::size_t> active = all_variables(p);
  while (true) {
    RfeStep step;
    step.active = active;
    try {
      ForestParams step_params = params;
      step_params.seed = mix_seed(params.seed, active.size());
      const Forest forest = fit_forest(fit, step_params, active, spec);
      step.loss = mmd_loss(forest, kernel, eval.x, eval.y);
      if (active.size() > options.stop_size) {
        ImportanceReport report;
        switch (options.method) {
          case ImportanceMethod::kRetrain:
            report = importance_retrain(forest, kernel, EvalSpec::oob(), active);
            break;
          case ImportanceMethod::kProjected:
            report = importance_projected(forest, kernel, EvalSpec::oob(), active);
            break;
          case ImportanceMethod::kSplitFrequency:
            report = split_frequency_importance(forest);
            break;
        }
        step.importance = report.scores;
        step.removed = least_important(report.scores);
      }
    } catch (const Error& e) {
      trace.error = "step with " + std::to_string(active.size()) + " variables: " + e.what();
      break;
    }
    trace.cumulative_loss += step.loss;
    const auto removed = step.removed;
    trace.steps.push_back(std::move(step));
    if (!removed) break;
    active.erase(std::find(active.begin(), active.end(), *removed));
  }
  return trace;
}

struct MethodSummary {
  ImportanceMethod method = ImportanceMethod::kRetrain;
  std::vector<double> cumulative_losses;  // one per repetition
  double mean = 0.0;
  double std_of_mean = 0.0;
  std::vector<RfeTrace> traces;
};

struct MethodComparison {
  std::size_t first = 0;   // indices into CompareSummary::methods
  std::size_t second = 0;
  double gap = 0.0;        // mean(first) - mean(second)
  bool significant = false;
};

struct CompareSummary {
  std::vector<MethodSummary> methods;
  std::vector<MethodComparison> comparisons;
};

struct CompareOptions {
  std::vector<ImportanceMethod> methods{ImportanceMethod::kRetrain, ImportanceMethod::kSplitFrequency};
  std::size_t repetitions = 10;
  std::size_t stop_size = 3;
  std::uint64_t seed = 1;
  // Repetitions on larger datasets work on a random subset of this many rows.
  std::size_t max_rows = 2000;
};

// Runs RFE per method and repetition on paired half-splits and applies the
// significance rule: |gap| > std_of_mean(a) + std_of_mean(b).
inline CompareSummary compare_methods(const Dataset& data, const ForestParams& params,
                                      const CompareOptions& options) {
  if (options.repetitions < 1) throw InvalidInput("compare: repetitions must be >= 1");
  if (options.methods.empty()) throw InvalidInput("compare: no methods");
  CompareSummary summary;
  for (auto m : options.methods) summary.methods.push_back({m, {}, 0.0, 0.0, {}});

  for (std::size_t r = 0; r < options.repetitions; ++r) {
    const std::uint64_t rep_seed = mix_seed(options.seed, r);
    const Dataset* source = &data;
    Dataset capped;
    if (data.n() > options.max_rows) {
      auto rows = draw_subsample(data.n(), options.max_rows, mix_seed(rep_seed, 0xCA9));
      capped = data.subset(rows);
      source = &capped;
    }
    const HalfSplit split = half_split(source->n(), rep_seed);
    ForestParams rep_params = params;
    rep_params.seed = rep_seed;
    for (auto& ms : summary.methods) {
      auto trace = rfe_run(*source, rep_params, {ms.method, options.stop_size}, split);
      ms.cumulative_losses.push_back(trace.cumulative_loss);
      ms.traces.push_back(std::move(trace));
    }
  }
  for (auto& ms : summary.methods) {
    const auto count = static_cast<double>(ms.cumulative_losses.size());
    double mean = 0.0;
    for (double v : ms.cumulative_losses) mean += v;
    mean /= count;
    double var = 0.0;
    for (double v : ms.cumulative_losses) var += (v - mean) * (v - mean);
    ms.mean = mean;
    ms.std_of_mean = count > 1 ? std::sqrt(var / (count - 1)) / std::sqrt(count) : 0.0;
  }
  for (std::size_t a = 0; a < summary.methods.size(); ++a)
    for (std::size_t b = a + 1; b < summary.methods.size(); ++b) {
      const auto& ma = summary.methods[a];
      const auto& mb = summary.methods[b];
      const double gap = ma.mean - mb.mean;
      summary.comparisons.push_back({a, b, gap, std::abs(gap) > ma.std_of_mean + mb.std_of_mean});
    }
  return summary;
}

}  // namespace drfvi
