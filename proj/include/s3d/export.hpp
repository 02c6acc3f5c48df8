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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "s3d/error.hpp"
#include "s3d/io.hpp"
#include "s3d/predictor.hpp"
#include "s3d/selector.hpp"

namespace s3d {

// ---------------------------------------------------------------------------
// Feature network

struct NetworkOptions {
  bool include_negative = false;
  double max_width = 8.0;
};

/// Edges to export: positive weights only unless include_negative.
inline std::vector<RedundancyEdge> network_edges(const S3DModel& model,
                                                 const NetworkOptions& options = {}) {
  std::vector<RedundancyEdge> edges;
  for (const auto& e : model.redundancy_edges)
    if (options.include_negative || e.weight > 0.0) edges.push_back(e);
  return edges;
}

namespace detail {

inline double max_abs_weight(const std::vector<RedundancyEdge>& edges) {
  double w = 0.0;
  for (const auto& e : edges) w = std::max(w, std::abs(e.weight));
  return w;
}

inline double edge_width(double weight, double max_weight, double max_width) {
  if (max_weight <= 0.0) return 1.0;
  return 1.0 + (max_width - 1.0) * std::abs(weight) / max_weight;
}

inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

inline void write_network_csv(std::ostream& out, const S3DModel& model,
                              const NetworkOptions& options = {}) {
  const auto edges = network_edges(model, options);
  const double max_w = detail::max_abs_weight(edges);
  out << "source,target,weight,width\n";
  for (const auto& e : edges)
    out << detail::csv_field(model.feature_names[e.source]) << ','
        << detail::csv_field(model.feature_names[e.target]) << ','
        << format_double(e.weight) << ','
        << format_double(detail::edge_width(e.weight, max_w, options.max_width)) << '\n';
}

/// Directed weighted graph, unselected -> selected. Selected features are
/// boxes labelled with their selection rank.
inline void write_network_dot(std::ostream& out, const S3DModel& model,
                              const NetworkOptions& options = {}) {
  const auto edges = network_edges(model, options);
  const double max_w = detail::max_abs_weight(edges);
  out << "digraph feature_network {\n  rankdir=LR;\n";
  std::set<std::size_t> nodes(model.selected.begin(), model.selected.end());
  for (const auto& e : edges) nodes.insert(e.source);
  for (std::size_t f : nodes) {
    const auto rank = std::find(model.selected.begin(), model.selected.end(), f);
    out << "  " << detail::dot_quote(model.feature_names[f]);
    if (rank != model.selected.end())
      out << " [shape=box, xlabel=" << detail::dot_quote(std::to_string(rank - model.selected.begin() + 1)) << "]";
    else
      out << " [shape=ellipse]";
    out << ";\n";
  }
  char label[32];
  for (const auto& e : edges) {
    std::snprintf(label, sizeof label, "%.4f", e.weight);
    out << "  " << detail::dot_quote(model.feature_names[e.source]) << " -> "
        << detail::dot_quote(model.feature_names[e.target])
        << " [weight=" << format_double(e.weight)
        << ", penwidth=" << format_double(detail::edge_width(e.weight, max_w, options.max_width))
        << ", label=" << detail::dot_quote(label);
    if (e.weight < 0) out << ", style=dashed";
    out << "];\n";
  }
  out << "}\n";
}

// ---------------------------------------------------------------------------
// Partition grid

inline constexpr std::size_t kMaxSvgFeatures = 4;
inline constexpr std::size_t kMaxGridBlocks = 1u << 22;

struct GridBlock {
  BlockKey key;
  std::vector<std::pair<double, double>> ranges;  // per visualized feature
  BlockStats stats;
  std::optional<int> predicted_class;
};

struct PartitionGrid {
  std::size_t k = 0;
  std::optional<double> threshold;
  std::vector<GridBlock> blocks;  // full cartesian product, key order
};

/// Every block of the top-k_vis product, occupied or not. Outer bin edges
/// are rendered with the training minimum and maximum.
inline PartitionGrid partition_grid(const S3DModel& model, std::size_t k_vis) {
  if (k_vis < 1 || k_vis > model.num_selected())
    throw UsageError("k_vis must be in [1, " + std::to_string(model.num_selected()) + "]");
  PartitionGrid grid;
  grid.k = k_vis;
  if (model.task == TaskKind::binary_classification)
    grid.threshold = model.threshold.value_or(kDefaultThreshold);

  std::size_t total = 1;
  for (std::size_t l = 0; l < k_vis; ++l) {
    total *= model.partitions[l].num_bins();
    if (total > kMaxGridBlocks) throw UsageError("partition grid too large to export");
  }
  const LevelTable& table = model.levels.at(k_vis);
  std::vector<int> bins(k_vis, 0);
  for (std::size_t b = 0; b < total; ++b) {
    GridBlock block;
    block.key.bins = bins;
    for (std::size_t l = 0; l < k_vis; ++l) {
      const auto& part = model.partitions[l];
      const std::size_t f = model.selected[l];
      const auto i = static_cast<std::size_t>(bins[l]);
      const double lo = i == 0 ? model.feature_min[f] : part.thresholds[i - 1];
      const double hi = i == part.thresholds.size() ? model.feature_max[f] : part.thresholds[i];
      block.ranges.emplace_back(lo, hi);
    }
    if (const BlockStats* s = table.find(block.key)) block.stats = *s;
    if (grid.threshold && !block.stats.empty())
      block.predicted_class = block.stats.mean() >= *grid.threshold ? 1 : 0;
    grid.blocks.push_back(std::move(block));
    for (std::size_t l = k_vis; l-- > 0;) {  // odometer, last index fastest
      if (++bins[l] < static_cast<int>(model.partitions[l].num_bins())) break;
      bins[l] = 0;
    }
  }
  return grid;
}

inline nlohmann::json grid_to_json(const S3DModel& model, const PartitionGrid& grid) {
  using nlohmann::json;
  json j;
  j["format"] = "s3d-partition-grid";
  j["k"] = grid.k;
  j["global_mean"] = model.global_mean;
  j["global_count"] = model.global_count;
  j["sst"] = model.sst;
  j["threshold"] = grid.threshold ? json(*grid.threshold) : json(nullptr);
  json features = json::array();
  for (std::size_t l = 0; l < grid.k; ++l) {
    const std::size_t f = model.selected[l];
    features.push_back({{"name", model.feature_names[f]},
                        {"index", f},
                        {"thresholds", model.partitions[l].thresholds},
                        {"min", model.feature_min[f]},
                        {"max", model.feature_max[f]}});
  }
  j["features"] = features;
  json blocks = json::array();
  for (const auto& b : grid.blocks) {
    json jb;
    jb["key"] = b.key.bins;
    json ranges = json::array();
    for (const auto& [lo, hi] : b.ranges) ranges.push_back({lo, hi});
    jb["ranges"] = ranges;
    jb["count"] = b.stats.count;
    jb["no_observations"] = b.stats.empty();
    if (!b.stats.empty()) jb["mean"] = b.stats.mean();
    if (b.predicted_class) jb["predicted_class"] = *b.predicted_class;
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = blocks;
  return j;
}

enum class SvgColoring { mean, predicted_class };

namespace detail {

inline std::string hex_colour(double t) {
  // Light-to-dark blue ramp.
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247 + (8 - 247) * t));
  const int g = static_cast<int>(std::lround(251 + (48 - 251) * t));
  const int b = static_cast<int>(std::lround(255 + (107 - 255) * t));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Heatmap of the grid: feature 1 on x and feature 2 on y inside each panel;
/// features 3 and 4 index the columns and rows of small multiples. Empty
/// blocks are gray.
inline void write_grid_svg(std::ostream& out, const S3DModel& model, const PartitionGrid& grid,
                           SvgColoring coloring = SvgColoring::mean) {
  if (grid.k > kMaxSvgFeatures)
    throw UsageError("SVG export supports at most 4 features; use the JSON grid for k_vis = " +
                     std::to_string(grid.k));
  if (coloring == SvgColoring::predicted_class && !grid.threshold)
    throw UsageError("class coloring requires a classification model");
  std::vector<std::size_t> nb(kMaxSvgFeatures, 1);
  for (std::size_t l = 0; l < grid.k; ++l) nb[l] = model.partitions[l].num_bins();
  const double cell = std::clamp(360.0 / static_cast<double>(std::max(nb[0], nb[1])), 6.0, 40.0);
  const double panel_w = cell * static_cast<double>(nb[0]);
  const double panel_h = cell * static_cast<double>(nb[1]);
  const double gap = 36.0, margin = 60.0;
  const double width = margin * 2 + static_cast<double>(nb[2]) * (panel_w + gap);
  const double height = margin * 2 + static_cast<double>(nb[3]) * (panel_h + gap) + 30.0;

  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const auto& b : grid.blocks) {
    if (b.stats.empty()) continue;
    const double m = b.stats.mean();
    if (first) lo = hi = m, first = false;
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  auto name_of = [&](std::size_t l) { return model.feature_names[model.selected[l]]; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::short_num(width)
      << "\" height=\"" << detail::short_num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (const auto& b : grid.blocks) {
    const auto bin = [&](std::size_t l) {
      return l < grid.k ? static_cast<double>(b.key.bins[l]) : 0.0;
    };
    const double px = margin + bin(2) * (panel_w + gap) + bin(0) * cell;
    const double py = margin + bin(3) * (panel_h + gap) + (static_cast<double>(nb[1]) - 1 - bin(1)) * cell;
    std::string fill = "#bdbdbd";
    if (!b.stats.empty()) {
      if (coloring == SvgColoring::predicted_class)
        fill = b.predicted_class.value_or(0) ? "#d73027" : "#1a9850";
      else
        fill = detail::hex_colour(hi > lo ? (b.stats.mean() - lo) / (hi - lo) : 0.5);
    }
    out << "  <rect x=\"" << detail::short_num(px) << "\" y=\"" << detail::short_num(py)
        << "\" width=\"" << detail::short_num(cell) << "\" height=\"" << detail::short_num(cell)
        << "\" fill=\"" << fill << "\" stroke=\"#ffffff\" stroke-width=\"0.5\"><title>"
        << (b.stats.empty() ? std::string("no observations")
                            : "N=" + std::to_string(b.stats.count) + " mean=" + detail::short_num(b.stats.mean()))
        << "</title></rect>\n";
  }
  for (std::size_t r = 0; r < nb[3]; ++r)
    for (std::size_t c = 0; c < nb[2]; ++c) {
      std::string title;
      const GridBlock* any = nullptr;
      for (const auto& b : grid.blocks)
        if ((grid.k < 3 || b.key.bins[2] == static_cast<int>(c)) &&
            (grid.k < 4 || b.key.bins[3] == static_cast<int>(r))) {
          any = &b;
          break;
        }
      if (any && grid.k >= 3)
        title += name_of(2) + " in (" + detail::short_num(any->ranges[2].first) + ", " +
                 detail::short_num(any->ranges[2].second) + "]";
      if (any && grid.k >= 4)
        title += "; " + name_of(3) + " in (" + detail::short_num(any->ranges[3].first) + ", " +
                 detail::short_num(any->ranges[3].second) + "]";
      const double x = margin + static_cast<double>(c) * (panel_w + gap);
      const double y = margin + static_cast<double>(r) * (panel_h + gap);
      if (!title.empty())
        out << "  <text x=\"" << detail::short_num(x) << "\" y=\"" << detail::short_num(y - 6)
            << "\">" << detail::xml_escape(title) << "</text>\n";
      out << "  <text x=\"" << detail::short_num(x) << "\" y=\"" << detail::short_num(y + panel_h + 14)
          << "\">" << detail::xml_escape(name_of(0)) << "</text>\n";
      if (grid.k >= 2)
        out << "  <text x=\"" << detail::short_num(x - 4) << "\" y=\"" << detail::short_num(y + panel_h)
            << "\" text-anchor=\"end\">" << detail::xml_escape(name_of(1)) << "</text>\n";
    }
  std::string legend = coloring == SvgColoring::mean
                           ? "block mean from " + detail::short_num(lo) + " (light) to " +
                                 detail::short_num(hi) + " (dark); gray: no observations"
                           : "red: predicted 1, green: predicted 0; gray: no observations";
  if (grid.threshold) legend += "; threshold = " + detail::short_num(*grid.threshold);
  out << "  <text x=\"" << detail::short_num(margin) << "\" y=\"" << detail::short_num(height - 16)
      << "\">" << detail::xml_escape(legend) << "</text>\n</svg>\n";
}

}  // namespace s3d
