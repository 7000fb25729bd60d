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

// drfvi command-line interface.
//
//   drfvi [--seed N] [--threads N] [--out json|table|csv] <command> ...
//
// Exit codes: 0 success, 1 invalid input, 2 internal or numerical failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drfvi/drfvi.hpp"
#include "selfcheck.hpp"

namespace {

using namespace drfvi;

struct GlobalOptions {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out = "table";
};

struct DataOptions {
  std::string data;
  std::string y_cols;
  std::string x_path;
  std::string y_path;
  bool standardize = false;

  void add(CLI::App* app) {
    app->add_option("--data", data, "CSV with inputs and outputs in one file");
    app->add_option("--y-cols", y_cols, "Comma-separated output column names for --data");
    app->add_option("--x", x_path, "CSV with input columns");
    app->add_option("--y", y_path, "CSV with output columns");
    app->add_flag("--standardize", standardize, "Scale each output column to zero mean, unit variance");
  }

  bool given() const { return !data.empty() || !x_path.empty(); }

  Dataset load() const {
    Dataset d;
    if (!data.empty()) {
      if (y_cols.empty()) throw InvalidInput("--data needs --y-cols");
      std::vector<std::string> cols;
      std::stringstream ss(y_cols);
      for (std::string c; std::getline(ss, c, ',');)
        if (!c.empty()) cols.push_back(c);
      d = load_csv(data, cols);
    } else if (!x_path.empty() && !y_path.empty()) {
      d = load_csv_pair(x_path, y_path);
    } else {
      throw InvalidInput("give either --data with --y-cols, or --x and --y");
    }
    return standardize ? standardize_outputs(std::move(d)) : d;
  }
};

void add_forest_options(CLI::App* app, ForestParams& p) {
  app->add_option("--trees", p.num_trees, "Number of trees")->check(CLI::PositiveNumber);
  app->add_option("--beta", p.subsample_exponent, "Subsample size exponent: s = ceil(n^beta)");
  app->add_option("--subsample", p.subsample_size, "Explicit subsample size (overrides --beta)");
  app->add_option("--min-leaf", p.min_leaf, "Minimum leaf size kappa");
  app->add_option("--alpha", p.alpha, "Minimum child fraction per split");
  app->add_option("--mtry", p.mtry, "Candidate variables per node (0: ceil(sqrt(p)))");
  app->add_option("--fourier", p.num_fourier, "Random Fourier features for the split criterion");
  app->add_option("--bandwidth", p.bandwidth, "Kernel bandwidth (0: median heuristic)");
  app->add_flag("!--no-honesty", p.honesty, "Grow and populate trees on the same rows");
  app->add_flag("--per-tree-fourier", p.per_tree_fourier, "Resample Fourier frequencies per tree");
}

void emit(const std::string& format, const Json& json, const std::string& table, const std::string& csv) {
  if (format == "json")
    std::cout << json.dump(2) << '\n';
  else if (format == "csv")
    std::cout << csv;
  else
    std::cout << table;
}

std::string dataset_summary_csv(const Dataset& d, const std::string& path) {
  return "path,rows,inputs,outputs\n" + path + ',' + std::to_string(d.n()) + ',' + std::to_string(d.p()) + ',' +
         std::to_string(d.d()) + '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Distributional random forests with MMD variable importance"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "Worker threads (0: all cores)");
  app.add_option("--out", g.out, "Output format")->check(CLI::IsMember({"json", "table", "csv"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset as CSV");
  GeneratorSpec gen;
  std::string scenario = "motivating", sim_path, sim_x, sim_y;
  sim->add_option("--scenario", scenario, "motivating|univariate|bivariate|functional|null|custom-sparse")
      ->check(CLI::IsMember({"motivating", "univariate", "bivariate", "functional", "null", "custom-sparse"}));
  sim->add_option("-n,--rows", gen.n, "Number of rows")->check(CLI::PositiveNumber);
  sim->add_option("--grid", gen.grid_size, "Functional grid size");
  sim->add_option("--inputs", gen.num_inputs, "Number of inputs (null, custom-sparse)");
  sim->add_option("--relevant", gen.num_relevant, "Relevant inputs (custom-sparse)");
  sim->add_option("--rho", gen.copula_rho, "Copula correlation of the correlated input");
  sim->add_option("--noise-scale", gen.noise_scale, "Univariate noise scale");
  sim->add_flag("--inverse-bandwidth", gen.functional_inverse_bandwidth, "Functional: GP length scale X2");
  sim->add_option("-o,--output", sim_path, "Output CSV (inputs then outputs)");
  sim->add_option("--x-out", sim_x, "Output CSV for inputs");
  sim->add_option("--y-out", sim_y, "Output CSV for outputs");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a forest and save it as JSON");
  DataOptions fit_data;
  ForestParams fit_params;
  std::string model_out;
  fit_data.add(fit);
  add_forest_options(fit, fit_params);
  fit->add_option("-m,--model", model_out, "Output model file")->required();

  // importance
  auto* imp = app.add_subcommand("importance", "Variable importance");
  DataOptions imp_data;
  ForestParams imp_params;
  std::string model_in, method = "retrain", eval = "oob", eval_x;
  std::vector<std::size_t> variables;
  bool clip = false;
  SplitFrequencyOptions split_opts;
  imp_data.add(imp);
  add_forest_options(imp, imp_params);
  imp->add_option("-m,--model", model_in, "Fitted model (instead of data)");
  imp->add_option("--method", method, "retrain|projected|split-frequency")
      ->check(CLI::IsMember({"retrain", "projected", "split-frequency", "split_frequency"}));
  imp->add_option("--eval", eval, "oob|holdout")->check(CLI::IsMember({"oob", "holdout"}));
  imp->add_option("--eval-x", eval_x, "Holdout inputs CSV (default: held-out half of the data)");
  imp->add_option("--vars", variables, "1-based variables to score (default: all)");
  imp->add_flag("--clip-negative", clip, "Report negative importances as 0");
  imp->add_option("--split-depth", split_opts.max_depth,
                  "split-frequency: weight the top levels by depth^-2 (0: count all nodes)");

  // rfe
  auto* rfe = app.add_subcommand("rfe", "Recursive feature elimination under the MMD loss");
  DataOptions rfe_data;
  ForestParams rfe_params;
  std::vector<std::string> rfe_methods{"retrain"};
  CompareOptions cmp;
  std::string path_csv;
  rfe_data.add(rfe);
  add_forest_options(rfe, rfe_params);
  rfe->add_option("--method", rfe_methods, "One or more of retrain|projected|split-frequency")
      ->check(CLI::IsMember({"retrain", "projected", "split-frequency", "split_frequency"}));
  rfe->add_option("--stop-size", cmp.stop_size, "Stop when this many variables remain");
  rfe->add_option("--reps", cmp.repetitions, "Repetitions with fresh half splits")->check(CLI::PositiveNumber);
  rfe->add_option("--max-rows", cmp.max_rows, "Row cap per repetition");
  rfe->add_option("--path-csv", path_csv, "Write the plot-ready loss path here");

  // selfcheck
  auto* check = app.add_subcommand("selfcheck", "Run oracle-equivalence checks");
  std::size_t instances = 50;
  check->add_option("--instances", instances, "Random instances per check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  for (ForestParams* p : {&fit_params, &imp_params, &rfe_params}) {
    p->seed = g.seed;
    p->threads = g.threads;
  }

  if (*sim) {
    gen.scenario = parse_scenario(scenario);
    gen.seed = g.seed;
    if (gen.scenario == Scenario::kCustomSparse && sim->count("--inputs") == 0) gen.num_inputs = 15;
    const Dataset d = generate(gen);
    if (!sim_x.empty() || !sim_y.empty()) {
      if (sim_x.empty() || sim_y.empty()) throw InvalidInput("--x-out and --y-out go together");
      write_csv(sim_x, sim_y, d);
    } else if (!sim_path.empty()) {
      write_csv(sim_path, d);
    } else {
      std::vector<std::string> header = d.x_names;
      header.insert(header.end(), d.y_names.begin(), d.y_names.end());
      write_matrix_csv(std::cout, {&d.x, &d.y}, header);
      return 0;
    }
    const std::string where = sim_path.empty() ? sim_x + ";" + sim_y : sim_path;
    emit(g.out,
         Json{{"schema", "drfvi.dataset/1"}, {"path", where}, {"rows", d.n()}, {"inputs", d.p()},
              {"outputs", d.d()}, {"provenance", d.provenance}},
         "wrote " + std::to_string(d.n()) + " rows (" + std::to_string(d.p()) + " inputs, " +
             std::to_string(d.d()) + " outputs) to " + where + "\n",
         dataset_summary_csv(d, where));
    return 0;
  }

  if (*fit) {
    auto data = std::make_shared<const Dataset>(fit_data.load());
    const Forest forest = fit_forest(data, fit_params, all_variables(data->p()));
    save_forest(model_out, forest);
    const auto audit = audit_forest(forest);
    std::ostringstream table;
    table << "trees " << forest.num_trees() << ", internal nodes " << audit.internal_nodes << ", leaves "
          << audit.leaves << ", bandwidth " << forest.kernel().bandwidth << "\nsaved " << model_out << '\n';
    emit(g.out,
         Json{{"schema", kForestSchema}, {"model", model_out}, {"trees", forest.num_trees()},
              {"internal_nodes", audit.internal_nodes}, {"leaves", audit.leaves},
              {"bandwidth", forest.kernel().bandwidth}, {"params", to_json(forest.params())}},
         table.str(), "model,trees,internal_nodes,leaves,bandwidth\n" + model_out + ',' +
                          std::to_string(forest.num_trees()) + ',' + std::to_string(audit.internal_nodes) + ',' +
                          std::to_string(audit.leaves) + ',' + std::to_string(forest.kernel().bandwidth) + '\n');
    return 0;
  }

  if (*imp) {
    const auto m = parse_method(method);
    std::shared_ptr<const Dataset> data;
    std::optional<Forest> forest;
    std::optional<EvalSpec> spec;
    if (!model_in.empty()) {
      if (imp_data.given()) throw InvalidInput("give either --model or data, not both");
      forest = load_forest(model_in);
      data = forest->data_ptr();
      if (m == ImportanceMethod::kRetrain) {
        // Refits inherit the stored forest's params; the global flags still govern threads.
        ForestParams p = forest->params();
        p.threads = g.threads;
        forest = Forest(data, p, forest->kernel(), forest->fourier(), forest->active(), forest->trees());
      }
    } else {
      data = std::make_shared<const Dataset>(imp_data.load());
    }

    if (eval == "holdout") {
      if (!eval_x.empty()) {
        const auto table = read_csv_table(eval_x);
        Matrix points(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(table.header.size()));
        for (std::size_t r = 0; r < table.rows.size(); ++r)
          for (std::size_t c = 0; c < table.header.size(); ++c)
            points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.rows[r][c];
        spec = EvalSpec::independent(std::move(points));
      } else {
        if (forest) throw InvalidInput("--eval holdout with --model needs --eval-x");
        const auto split = half_split(data->n(), g.seed);
        spec = EvalSpec::independent(data->subset(split.eval).x);
        data = std::make_shared<const Dataset>(data->subset(split.fit));
      }
    } else {
      spec = EvalSpec::oob();
    }

    if (!forest) forest = fit_forest(data, imp_params, all_variables(data->p()));
    std::vector<std::size_t> j_set;
    for (auto v : variables) {
      if (v < 1 || v > data->p()) throw InvalidInput("--vars: variable " + std::to_string(v) + " out of range");
      j_set.push_back(v - 1);
    }
    if (j_set.empty()) j_set = forest->active();

    ImportanceReport report;
    if (m == ImportanceMethod::kSplitFrequency) {
      report = split_frequency_importance(*forest, split_opts);
    } else {
      KernelMatrix kernel(data->y, forest->kernel(), g.threads);
      kernel.factorize();
      report = m == ImportanceMethod::kRetrain ? importance_retrain(*forest, kernel, *spec, j_set)
                                               : importance_projected(*forest, kernel, *spec, j_set);
    }
    if (clip) report.clip_negative();
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    emit(g.out, to_json(report), to_table(report), to_csv(report));
    for (const auto& s : report.scores)
      if (s.error) return 2;
    return 0;
  }

  if (*rfe) {
    const Dataset data = rfe_data.load();
    cmp.methods.clear();
    for (const auto& s : rfe_methods) cmp.methods.push_back(parse_method(s));
    cmp.seed = g.seed;
    const auto summary = compare_methods(data, rfe_params, cmp);
    if (!path_csv.empty()) {
      std::ofstream out(path_csv);
      if (!out) throw InvalidInput("cannot write " + path_csv);
      out << rfe_path_csv(summary);
    }
    emit(g.out, to_json(summary), to_table(summary), rfe_path_csv(summary));
    for (const auto& m : summary.methods)
      for (const auto& t : m.traces)
        if (t.error) {
          std::cerr << "error: " << *t.error << '\n';
          return 2;
        }
    return 0;
  }

  if (*check) {
    const auto results = selfcheck::run(instances, g.seed);
    bool ok = true;
    Json j{{"schema", "drfvi.selfcheck/1"}, {"checks", Json::array()}};
    std::ostringstream table, csv;
    csv << "check,cases,max_error,status\n";
    for (const auto& r : results) {
      ok = ok && r.passed;
      j["checks"].push_back({{"check", r.name}, {"cases", r.cases}, {"max_error", r.max_error}, {"passed", r.passed}});
      table << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.cases << " cases, max error " << r.max_error
            << ")\n";
      csv << '"' << r.name << "\"," << r.cases << ',' << r.max_error << ',' << (r.passed ? "PASS" : "FAIL") << '\n';
    }
    emit(g.out, j, table.str(), csv.str());
    return ok ? 0 : 2;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const drfvi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed model file: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}
