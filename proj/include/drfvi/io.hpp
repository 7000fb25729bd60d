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

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drfvi/common.hpp"
#include "drfvi/dataset.hpp"
#include "drfvi/evaluation.hpp"
#include "drfvi/forest.hpp"
#include "drfvi/importance.hpp"

namespace drfvi {

using Json = nlohmann::json;

inline constexpr const char* kForestSchema = "drfvi.forest/1";
inline constexpr const char* kReportSchema = "drfvi.importance/1";
inline constexpr const char* kTraceSchema = "drfvi.rfe/1";
inline constexpr const char* kCompareSchema = "drfvi.rfe-compare/1";

namespace detail {

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols)
      throw InvalidInput("json: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace detail

inline Json to_json(const ForestParams& p) {
  Json j{{"num_trees", p.num_trees},
         {"subsample_exponent", p.subsample_exponent},
         {"subsample_size", p.subsample_size},
         {"min_leaf", p.min_leaf},
         {"alpha", p.alpha},
         {"mtry", p.mtry},
         {"num_fourier", p.num_fourier},
         {"honesty", p.honesty},
         {"per_tree_fourier", p.per_tree_fourier},
         {"seed", p.seed},
         {"bandwidth", p.bandwidth}};
  j["subsample_seed"] = p.subsample_seed ? Json(*p.subsample_seed) : Json(nullptr);
  return j;
}

inline ForestParams params_from_json(const Json& j) {
  ForestParams p;
  p.num_trees = j.at("num_trees").get<std::size_t>();
  p.subsample_exponent = j.at("subsample_exponent").get<double>();
  p.subsample_size = j.at("subsample_size").get<std::size_t>();
  p.min_leaf = j.at("min_leaf").get<std::size_t>();
  p.alpha = j.at("alpha").get<double>();
  p.mtry = j.at("mtry").get<std::size_t>();
  p.num_fourier = j.at("num_fourier").get<std::size_t>();
  p.honesty = j.at("honesty").get<bool>();
  p.per_tree_fourier = j.at("per_tree_fourier").get<bool>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.bandwidth = j.at("bandwidth").get<double>();
  if (!j.at("subsample_seed").is_null()) p.subsample_seed = j.at("subsample_seed").get<std::uint64_t>();
  return p;
}

inline Json to_json(const Dataset& d) {
  return Json{{"x", detail::matrix_to_json(d.x)},
              {"y", detail::matrix_to_json(d.y)},
              {"x_names", d.x_names},
              {"y_names", d.y_names},
              {"provenance", d.provenance}};
}

inline Dataset dataset_from_json(const Json& j) {
  Dataset d;
  d.x_names = j.at("x_names").get<std::vector<std::string>>();
  d.y_names = j.at("y_names").get<std::vector<std::string>>();
  d.x = detail::matrix_from_json(j.at("x"), static_cast<Eigen::Index>(d.x_names.size()));
  d.y = detail::matrix_from_json(j.at("y"), static_cast<Eigen::Index>(d.y_names.size()));
  d.provenance = j.at("provenance").get<std::string>();
  d.validate();
  return d;
}

inline Json to_json(const Tree& t) {
  Json nodes = Json::array();
  for (const auto& nd : t.nodes)
    nodes.push_back(Json::array({nd.split_variable, nd.threshold, nd.left, nd.right, nd.leaf_begin,
                                 nd.leaf_end, nd.structure_count, nd.estimation_count,
                                 nd.no_admissible_split}));
  return Json{{"seed", t.seed},
              {"subsample", t.subsample},
              {"structure", t.structure},
              {"estimation", t.estimation},
              {"leaf_samples", t.leaf_samples},
              {"nodes", std::move(nodes)}};
}

inline Tree tree_from_json(const Json& j) {
  Tree t;
  t.seed = j.at("seed").get<std::uint64_t>();
  t.subsample = j.at("subsample").get<std::vector<std::uint32_t>>();
  t.structure = j.at("structure").get<std::vector<std::uint32_t>>();
  t.estimation = j.at("estimation").get<std::vector<std::uint32_t>>();
  t.leaf_samples = j.at("leaf_samples").get<std::vector<std::uint32_t>>();
  for (const auto& a : j.at("nodes")) {
    TreeNode nd;
    nd.split_variable = a.at(0).get<std::int32_t>();
    nd.threshold = a.at(1).get<double>();
    nd.left = a.at(2).get<std::int32_t>();
    nd.right = a.at(3).get<std::int32_t>();
    nd.leaf_begin = a.at(4).get<std::uint32_t>();
    nd.leaf_end = a.at(5).get<std::uint32_t>();
    nd.structure_count = a.at(6).get<std::uint32_t>();
    nd.estimation_count = a.at(7).get<std::uint32_t>();
    nd.no_admissible_split = a.at(8).get<bool>();
    t.nodes.push_back(nd);
  }
  return t;
}

inline Json to_json(const Forest& f, bool include_data = true) {
  Json trees = Json::array();
  for (const auto& t : f.trees()) trees.push_back(to_json(t));
  Json j{{"schema", kForestSchema},
         {"params", to_json(f.params())},
         {"kernel", {{"bandwidth", f.kernel().bandwidth}, {"output_dim", f.kernel().output_dim}}},
         {"fourier", detail::matrix_to_json(f.fourier().frequencies())},
         {"active", f.active()},
         {"trees", std::move(trees)}};
  if (include_data) j["data"] = to_json(f.data());
  return j;
}

// `data` overrides (or supplies, if absent) the embedded training data.
inline Forest forest_from_json(const Json& j, std::shared_ptr<const Dataset> data = nullptr) {
  if (j.value("schema", "") != kForestSchema)
    throw InvalidInput("forest json: unsupported schema '" + j.value("schema", "") + "'");
  if (!data) {
    if (!j.contains("data")) throw InvalidInput("forest json: no embedded training data");
    data = std::make_shared<const Dataset>(dataset_from_json(j.at("data")));
  }
  const KernelSpec kernel(j.at("kernel").at("bandwidth").get<double>(),
                          j.at("kernel").at("output_dim").get<std::size_t>());
  FourierFeatureMap fourier(detail::matrix_from_json(j.at("fourier")));
  std::vector<Tree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
  return Forest(std::move(data), params_from_json(j.at("params")), kernel, std::move(fourier),
                j.at("active").get<std::vector<std::size_t>>(), std::move(trees));
}

inline void save_forest(const std::string& path, const Forest& f) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << to_json(f).dump();
}

inline Forest load_forest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw InvalidInput(path + ": " + e.what());
  }
  return forest_from_json(j);
}

namespace detail {

inline Json scores_to_json(const std::vector<VariableScore>& scores) {
  Json out = Json::array();
  for (const auto& s : scores) {
    Json e{{"variable", s.variable + 1}, {"name", s.name}, {"value", s.value}};
    if (s.error) e["error"] = *s.error;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace detail

inline Json to_json(const ImportanceReport& r) {
  Json j{{"schema", kReportSchema},
         {"method", to_string(r.method)},
         {"eval_mode", to_string(r.eval_mode)},
         {"scores", detail::scores_to_json(r.scores)},
         {"normalizer", r.normalizer},
         {"degenerate", r.degenerate},
         {"eval_points", r.eval_points},
         {"excluded_points", r.excluded_points},
         {"warnings", r.warnings},
         {"bandwidth", r.bandwidth},
         {"params", to_json(r.params)}};
  if (r.method == ImportanceMethod::kRetrain) j["correction"] = r.correction;
  if (r.method == ImportanceMethod::kProjected) j["fallback_trees"] = r.fallback_trees;
  if (r.method == ImportanceMethod::kSplitFrequency) j.erase("eval_mode");
  return j;
}

// Aligned columns: rank, variable, value; sorted by decreasing value.
inline std::string to_table(const ImportanceReport& r) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "rank" << std::setw(16) << "variable" << "value\n";
  const auto order = r.ranking();
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& s = *std::find_if(r.scores.begin(), r.scores.end(),
                                  [&](const auto& v) { return v.variable == order[k]; });
    out << std::left << std::setw(6) << k + 1 << std::setw(16) << s.name;
    if (s.error)
      out << "error: " << *s.error;
    else
      out << std::fixed << std::setprecision(6) << s.value;
    out << '\n';
  }
  return out.str();
}

inline std::string to_csv(const ImportanceReport& r) {
  std::ostringstream out;
  out << "rank,variable,name,value\n" << std::setprecision(17);
  const auto order = r.ranking();
  for (std::size_t k = 0; k < order.size(); ++k)
    for (const auto& s : r.scores)
      if (s.variable == order[k]) out << k + 1 << ',' << s.variable + 1 << ',' << s.name << ',' << s.value << '\n';
  return out.str();
}

inline Json to_json(const RfeTrace& t) {
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    Json active = Json::array();
    for (auto v : s.active) active.push_back(v + 1);
    Json e{{"active", std::move(active)}, {"loss", s.loss}, {"importance", detail::scores_to_json(s.importance)}};
    e["removed"] = s.removed ? Json(*s.removed + 1) : Json(nullptr);
    steps.push_back(std::move(e));
  }
  Json j{{"schema", kTraceSchema},
         {"method", to_string(t.method)},
         {"stop_size", t.stop_size},
         {"cumulative_loss", t.cumulative_loss},
         {"bandwidth", t.bandwidth},
         {"steps", std::move(steps)},
         {"fit_rows", t.fit_rows},
         {"eval_rows", t.eval_rows}};
  if (t.error) j["error"] = *t.error;
  return j;
}

inline Json to_json(const CompareSummary& s) {
  Json methods = Json::array();
  for (const auto& m : s.methods) {
    Json traces = Json::array();
    for (const auto& t : m.traces) traces.push_back(to_json(t));
    methods.push_back(Json{{"method", to_string(m.method)},
                           {"mean_cumulative_loss", m.mean},
                           {"std_of_mean", m.std_of_mean},
                           {"cumulative_losses", m.cumulative_losses},
                           {"traces", std::move(traces)}});
  }
  Json comps = Json::array();
  for (const auto& c : s.comparisons)
    comps.push_back(Json{{"first", to_string(s.methods[c.first].method)},
                         {"second", to_string(s.methods[c.second].method)},
                         {"gap", c.gap},
                         {"significant", c.significant}});
  return Json{{"schema", kCompareSchema}, {"methods", std::move(methods)}, {"comparisons", std::move(comps)}};
}

// Plot-ready RFE path: one row per (repetition, step).
inline std::string rfe_path_csv(const CompareSummary& s) {
  std::ostringstream out;
  out << "method,repetition,step,remaining,loss\n" << std::setprecision(17);
  for (const auto& m : s.methods)
    for (std::size_t r = 0; r < m.traces.size(); ++r)
      for (std::size_t k = 0; k < m.traces[r].steps.size(); ++k)
        out << to_string(m.method) << ',' << r + 1 << ',' << k + 1 << ','
            << m.traces[r].steps[k].active.size() << ',' << m.traces[r].steps[k].loss << '\n';
  return out.str();
}

inline std::string to_table(const CompareSummary& s) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "method" << std::setw(18) << "cumulative_loss" << "std\n";
  for (const auto& m : s.methods)
    out << std::left << std::setw(18) << to_string(m.method) << std::setw(18) << std::fixed
        << std::setprecision(4) << m.mean << m.std_of_mean << '\n';
  for (const auto& c : s.comparisons)
    out << to_string(s.methods[c.first].method) << " vs " << to_string(s.methods[c.second].method)
        << ": gap " << std::setprecision(4) << c.gap << (c.significant ? " (significant)" : "") << '\n';
  return out.str();
}

}  // namespace drfvi
