// Copyright 2026 The S3D Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "s3d/dataset.hpp"
#include "s3d/error.hpp"
#include "s3d/evaluator.hpp"
#include "s3d/export.hpp"
#include "s3d/io.hpp"
#include "s3d/predictor.hpp"
#include "s3d/selector.hpp"
#include "s3d/synthetic.hpp"

namespace s3d::cli {

namespace detail {

inline TaskKind parse_task(const std::string& s) {
  if (s == "class") return TaskKind::binary_classification;
  if (s == "reg") return TaskKind::regression;
  throw UsageError("--task must be 'class' or 'reg'");
}

inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("invalid lambda grid entry '" + item + "'");
    }
  }
  if (grid.empty()) throw UsageError("lambda grid is empty");
  return grid;
}

// "calibrated", "fixed:0.3", "fixed 0.3" or a bare number.
inline std::optional<double> parse_threshold(const std::string& text, bool& calibrated) {
  calibrated = false;
  if (text.empty()) return std::nullopt;
  if (text == "calibrated") {
    calibrated = true;
    return std::nullopt;
  }
  std::string number = text;
  for (const char* prefix : {"fixed:", "fixed=", "fixed "})
    if (number.rfind(prefix, 0) == 0) number = number.substr(std::string(prefix).size());
  try {
    std::size_t used = 0;
    const double v = std::stod(number, &used);
    if (used != number.size()) throw std::invalid_argument(number);
    return v;
  } catch (const std::exception&) {
    throw UsageError("--threshold must be 'calibrated' or 'fixed FLOAT'");
  }
}

inline void print_steps(std::ostream& out, const S3DModel& model) {
  out << "step\tfeature\tdelta_r2\tcumulative_r2\n";
  for (std::size_t l = 0; l < model.num_selected(); ++l) {
    const std::size_t f = model.selected[l];
    out << (l + 1) << '\t' << model.feature_names[f] << '\t'
        << std::setprecision(6) << model.step_scores[l][f] << '\t'
        << std::setprecision(6) << model.r2_trajectory[l] << '\n';
  }
  if (model.num_selected() == 0) out << "(no feature explains variance above lambda)\n";
}

}  // namespace detail

/// Entry point of the `s3d` tool. Exit codes: 0 success, 1 data or model
/// error, 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"s3d: structured sum-of-squares decomposition learner"};
  app.require_subcommand(1);

  // train
  std::string data_path, target, task_name, out_path, model_path;
  double lambda = 1e-3;
  std::size_t max_features = 0;
  bool calibrate = false;
  auto* train = app.add_subcommand("train", "fit a model and write it as JSON");
  train->add_option("--data", data_path, "CSV file with a header row")->required();
  train->add_option("--target", target, "target column name")->required();
  train->add_option("--task", task_name, "class or reg")->required();
  train->add_option("--lambda", lambda, "per-split penalty (> 0)")->required();
  train->add_option("--max-features", max_features, "stop after this many features");
  train->add_flag("--calibrate", calibrate, "store the calibrated threshold at k = m");
  train->add_option("--out", out_path, "model JSON path")->required();

  // predict
  std::size_t k = 0;
  std::string threshold_text;
  auto* predict = app.add_subcommand("predict", "predict with the top-k features");
  predict->add_option("--model", model_path)->required();
  predict->add_option("--data", data_path)->required();
  predict->add_option("--k", k, "number of selected features to use")->required();
  predict->add_option("--threshold", threshold_text, "'calibrated' or 'fixed FLOAT'");
  predict->add_option("--out", out_path, "predictions CSV path")->required();

  // cv
  std::string grid_text;
  std::string surface_path;
  std::uint64_t seed = 0;
  bool standardize = false;
  auto* cv = app.add_subcommand("cv", "nested cross-validation over (lambda, k)");
  cv->add_option("--data", data_path)->required();
  cv->add_option("--target", target)->required();
  cv->add_option("--task", task_name, "class or reg")->required();
  cv->add_option("--grid", grid_text, "comma-separated lambdas (default 1e-4,1e-3,1e-2,1e-1)");
  cv->add_option("--seed", seed, "fold seed");
  cv->add_option("--out", out_path, "report JSON path")->required();
  cv->add_option("--surface", surface_path, "tuning surface CSV path");
  cv->add_flag("--calibrate", calibrate, "calibrate thresholds on training folds");
  cv->add_flag("--standardize", standardize, "standardize features with training moments");

  // export-network
  std::string dot_path;
  bool include_negative = false;
  auto* network = app.add_subcommand("export-network", "write the feature redundancy network");
  network->add_option("--model", model_path)->required();
  network->add_option("--out", out_path, "edge list CSV path")->required();
  network->add_option("--dot", dot_path, "Graphviz DOT path");
  network->add_flag("--include-negative", include_negative, "also emit negative weights");

  // export-grid
  std::string svg_path, color = "mean";
  auto* grid = app.add_subcommand("export-grid", "write the partition grid of the top-k features");
  grid->add_option("--model", model_path)->required();
  grid->add_option("--k", k, "number of features to visualize")->required();
  grid->add_option("--out", out_path, "grid JSON path")->required();
  grid->add_option("--svg", svg_path, "SVG heatmap path (k <= 4)");
  grid->add_option("--color", color, "mean or class")->check(CLI::IsMember({"mean", "class"}));

  // gen-synthetic
  std::string kind;
  std::size_t rows = 0;
  double positive_rate = 0.0025, noise = 0.0;
  auto* gen = app.add_subcommand("gen-synthetic", "write a bundled synthetic dataset");
  gen->add_option("--kind", kind, "step, classification or unbalanced")
      ->required()
      ->check(CLI::IsMember({"step", "classification", "unbalanced"}));
  gen->add_option("--rows", rows, "rows (replicates of the 24-cell design for step)");
  gen->add_option("--seed", seed);
  gen->add_option("--positive-rate", positive_rate, "positive rate for unbalanced");
  gen->add_option("--noise", noise, "target noise sd for step");
  gen->add_option("--out", out_path, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const Dataset data = ingest_csv(data_path, target, detail::parse_task(task_name));
      TrainConfig config;
      config.lambda = lambda;
      if (max_features) config.max_features = max_features;
      S3DModel model = fit(data, config);
      if (calibrate && model.task == TaskKind::binary_classification)
        model.threshold = choose_threshold(model, model.num_selected());
      save_model(model, out_path);
      detail::print_steps(out, model);
    } else if (*predict) {
      const S3DModel model = load_model(model_path);
      if (k > model.num_selected() || (k == 0 && model.num_selected() > 0))
        throw UsageError("k exceeds selected features (m=" + std::to_string(model.num_selected()) +
                         ")");
      bool calibrated = false;
      std::optional<double> theta = detail::parse_threshold(threshold_text, calibrated);
      if (model.task != TaskKind::binary_classification && (theta || calibrated))
        throw UsageError("--threshold applies to classification models only");
      if (calibrated) theta = choose_threshold(model, k);
      const CsvTable table = read_csv(data_path);
      std::vector<std::ptrdiff_t> column_of(model.num_features());
      for (std::size_t f = 0; f < model.num_features(); ++f) {
        column_of[f] = table.find(model.feature_names[f]);
        if (column_of[f] < 0)
          throw Error("schema mismatch: data has no column '" + model.feature_names[f] + "'");
      }
      const PredictorView view(model, k, theta);
      const bool classify = model.task == TaskKind::binary_classification;
      write_file_atomic(out_path, [&](std::ostream& os) {
        os << "row_id,expected_value" << (classify ? ",predicted_class" : "") << ",block_key\n";
        std::vector<double> row(model.num_features());
        for (std::size_t i = 0; i < table.num_rows; ++i) {
          for (std::size_t f = 0; f < row.size(); ++f)
            row[f] = table.columns[static_cast<std::size_t>(column_of[f])][i];
          const BlockKey key = view.locate_block(row);
          const double ev = view.expected_value(key);
          os << i << ',' << format_double(ev);
          if (classify) os << ',' << (ev >= *view.theta() ? 1 : 0);
          os << ',' << key.to_string(':') << '\n';
        }
      });
    } else if (*cv) {
      const Dataset data = ingest_csv(data_path, target, detail::parse_task(task_name));
      const auto lambdas = grid_text.empty() ? default_lambda_grid() : detail::parse_grid(grid_text);
      const FoldPlan plan = make_folds(data, seed);
      TuneOptions options;
      options.calibrate_threshold = calibrate;
      options.standardize = standardize;
      const CvReport report = tune(data, lambdas, plan, default_objective(data.task()), options);
      const std::string text = report_to_json(report).dump(1, '\t');
      write_file_atomic(out_path, [&](std::ostream& os) { os << text << '\n'; });
      if (!surface_path.empty())
        write_file_atomic(surface_path, [&](std::ostream& os) { write_surface_csv(os, report); });
      out << "outer_fold\tlambda\tk\tm_lambda";
      for (const auto& [name, v] : report.folds.front().test) out << '\t' << name;
      out << '\n';
      for (const auto& f : report.folds) {
        out << f.outer << '\t' << f.lambda << '\t' << f.k << '\t' << f.m_lambda;
        for (const auto& [name, v] : f.test) out << '\t' << std::setprecision(6) << v;
        out << '\n';
      }
      for (const auto& s : report.aggregate)
        out << s.name << ": " << std::setprecision(6) << s.mean << " +/- " << s.stddev << '\n';
    } else if (*network) {
      const S3DModel model = load_model(model_path);
      NetworkOptions options;
      options.include_negative = include_negative;
      write_file_atomic(out_path, [&](std::ostream& os) { write_network_csv(os, model, options); });
      if (!dot_path.empty())
        write_file_atomic(dot_path, [&](std::ostream& os) { write_network_dot(os, model, options); });
    } else if (*grid) {
      const S3DModel model = load_model(model_path);
      const PartitionGrid pg = partition_grid(model, k);
      if (!svg_path.empty()) {
        const auto coloring = color == "class" ? SvgColoring::predicted_class : SvgColoring::mean;
        write_file_atomic(svg_path, [&](std::ostream& os) { write_grid_svg(os, model, pg, coloring); });
      }
      const std::string text = grid_to_json(model, pg).dump(1, '\t');
      write_file_atomic(out_path, [&](std::ostream& os) { os << text << '\n'; });
    } else if (*gen) {
      Dataset data = kind == "step"
                         ? synthetic::step_function(rows ? rows : 20, seed, noise, 1)
                     : kind == "unbalanced"
                         ? synthetic::unbalanced_classification(rows ? rows : 40000, seed, positive_rate)
                         : synthetic::overfit_classification(rows ? rows : 1000, seed);
      write_file_atomic(out_path, [&](std::ostream& os) { write_csv(os, data, "y"); });
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace s3d::cli
