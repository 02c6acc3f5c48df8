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

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <system_error>

#include "json.hpp"
#include "s3d/error.hpp"
#include "s3d/evaluator.hpp"
#include "s3d/selector.hpp"

namespace s3d {

inline constexpr int kModelFormatVersion = 1;

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Writes through `body` into a sibling temporary and renames it over
/// `path`. On any failure the temporary is removed and `path` is untouched.
inline void write_file_atomic(const std::string& path,
                              const std::function<void(std::ostream&)>& body) {
  const std::string partial = path + ".partial";
  try {
    {
      std::ofstream out(partial, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot open '" + path + "' for writing");
      body(out);
      out.flush();
      if (!out) throw Error("write to '" + path + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(partial, path, ec);
    if (ec) throw Error("cannot move output into place at '" + path + "': " + ec.message());
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(partial, ignored);
    throw;
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Model files

inline nlohmann::json model_to_json(const S3DModel& model) {
  using nlohmann::json;
  json j;
  j["format"] = "s3d-model";
  j["format_version"] = kModelFormatVersion;
  j["task"] = to_string(model.task);
  j["lambda"] = model.lambda;
  j["feature_names"] = model.feature_names;
  j["feature_min"] = model.feature_min;
  j["feature_max"] = model.feature_max;
  j["selected"] = model.selected;
  json parts = json::array();
  for (const auto& p : model.partitions)
    parts.push_back({{"feature", p.feature_index}, {"thresholds", p.thresholds}});
  j["partitions"] = parts;
  j["global_mean"] = model.global_mean;
  j["global_count"] = model.global_count;
  j["sst"] = model.sst;
  j["r2_trajectory"] = model.r2_trajectory;
  j["step_scores"] = model.step_scores;
  json levels = json::array();
  for (const auto& table : model.levels) {
    json blocks = json::array();
    for (const auto& [key, stats] : table.entries)
      blocks.push_back({{"key", key.bins}, {"count", stats.count}, {"sum", stats.target_sum}});
    levels.push_back({{"level", table.level}, {"blocks", blocks}});
  }
  j["levels"] = levels;
  json edges = json::array();
  for (const auto& e : model.redundancy_edges)
    edges.push_back({{"source", e.source}, {"target", e.target}, {"weight", e.weight}});
  j["redundancy_edges"] = edges;
  j["threshold"] = model.threshold ? json(*model.threshold) : json(nullptr);
  return j;
}

inline S3DModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "s3d-model")
      throw Error("not an s3d model file");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw Error("unsupported model format_version " + std::to_string(version));
    S3DModel m;
    m.task = task_from_string(j.at("task").get<std::string>());
    m.lambda = j.at("lambda").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.feature_min = j.at("feature_min").get<std::vector<double>>();
    m.feature_max = j.at("feature_max").get<std::vector<double>>();
    m.selected = j.at("selected").get<std::vector<std::size_t>>();
    for (const auto& p : j.at("partitions")) {
      FeaturePartition part;
      part.feature_index = p.at("feature").get<std::size_t>();
      part.thresholds = p.at("thresholds").get<std::vector<double>>();
      part.check();
      m.partitions.push_back(std::move(part));
    }
    m.global_mean = j.at("global_mean").get<double>();
    m.global_count = j.at("global_count").get<std::uint64_t>();
    m.sst = j.at("sst").get<double>();
    m.r2_trajectory = j.at("r2_trajectory").get<std::vector<double>>();
    m.step_scores = j.at("step_scores").get<std::vector<std::vector<double>>>();
    for (const auto& t : j.at("levels")) {
      LevelTable table;
      table.level = t.at("level").get<std::size_t>();
      for (const auto& b : t.at("blocks")) {
        BlockKey key{b.at("key").get<std::vector<int>>()};
        if (key.level() != table.level) throw Error("block key length does not match level");
        table.entries[key] = BlockStats{b.at("count").get<std::uint64_t>(),
                                        b.at("sum").get<double>()};
      }
      m.levels.push_back(std::move(table));
    }
    for (const auto& e : j.at("redundancy_edges"))
      m.redundancy_edges.push_back({e.at("source").get<std::size_t>(),
                                    e.at("target").get<std::size_t>(),
                                    e.at("weight").get<double>()});
    if (!j.at("threshold").is_null()) m.threshold = j.at("threshold").get<double>();

    const std::size_t sel = m.selected.size();
    const std::size_t nf = m.feature_names.size();
    if (m.partitions.size() != sel || m.levels.size() != sel + 1 ||
        m.r2_trajectory.size() != sel || m.feature_min.size() != nf ||
        m.feature_max.size() != nf)
      throw Error("inconsistent model dimensions");
    for (std::size_t l = 0; l < sel; ++l)
      if (m.selected[l] >= nf || m.partitions[l].feature_index != m.selected[l])
        throw Error("partition does not match selected feature");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid model file: ") + e.what());
  }
}

inline void save_model(const S3DModel& model, const std::string& path) {
  const std::string text = model_to_json(model).dump(1, '\t');
  write_file_atomic(path, [&](std::ostream& out) { out << text << '\n'; });
}

inline S3DModel load_model(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

// ---------------------------------------------------------------------------
// Cross-validation reports

inline nlohmann::json report_to_json(const CvReport& report) {
  using nlohmann::json;
  json j;
  j["format"] = "s3d-cv-report";
  j["task"] = to_string(report.task);
  j["objective"] = report.objective == Objective::auc ? "auc" : "rmse";
  j["seed"] = report.seed;
  j["lambda_grid"] = report.lambda_grid;
  json folds = json::array();
  for (const auto& f : report.folds) {
    json test = json::object();
    for (const auto& [name, value] : f.test) test[name] = value;
    folds.push_back({{"outer_fold", f.outer},
                     {"lambda", f.lambda},
                     {"k", f.k},
                     {"m_lambda", f.m_lambda},
                     {"inner_max_k", f.inner_max_k},
                     {"inner_objective", f.objective},
                     {"threshold", f.threshold ? json(*f.threshold) : json(nullptr)},
                     {"test", test}});
  }
  j["folds"] = folds;
  json agg = json::object();
  for (const auto& s : report.aggregate) agg[s.name] = {{"mean", s.mean}, {"std", s.stddev}};
  j["aggregate"] = agg;
  return j;
}

/// Tuning surface as CSV: outer_fold,lambda,k,objective,train_r2.
inline void write_surface_csv(std::ostream& out, const CvReport& report) {
  out << "outer_fold,lambda,k," << (report.objective == Objective::auc ? "auc" : "rmse")
      << ",train_r2\n";
  for (const auto& p : report.surface)
    out << p.outer << ',' << format_double(p.lambda) << ',' << p.k << ','
        << format_double(p.objective) << ',' << format_double(p.train_r2) << '\n';
}

}  // namespace s3d
