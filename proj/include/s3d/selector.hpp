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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s3d/dataset.hpp"
#include "s3d/error.hpp"
#include "s3d/parallel.hpp"
#include "s3d/partition.hpp"
#include "s3d/partitioner.hpp"

namespace s3d {

struct TrainConfig {
  double lambda = 1e-3;
  std::optional<std::size_t> max_features;
  double min_delta_r2 = 1e-12;
  unsigned threads = 0;  // 0: S3D_THREADS or 1

  void check() const {
    if (!(lambda > 0.0)) throw UsageError("lambda must be > 0");
    if (max_features && *max_features < 1)
      throw UsageError("max_features must be >= 1");
    if (!(min_delta_r2 >= 0.0)) throw UsageError("min_delta_r2 must be >= 0");
  }
};

/// Edge of the feature network: selecting `target` made `weight` of the
/// standalone Delta R^2 of the unselected feature `source` redundant.
struct RedundancyEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  double weight = 0.0;

  friend bool operator==(const RedundancyEdge&, const RedundancyEdge&) = default;
};

/// A trained model. Immutable after fit; safe to share across threads.
struct S3DModel {
  TaskKind task = TaskKind::regression;
  std::vector<std::string> feature_names;
  std::vector<double> feature_min;  // training range, per feature
  std::vector<double> feature_max;
  double lambda = 0.0;

  std::vector<std::size_t> selected;           // selection order
  std::vector<FeaturePartition> partitions;    // parallel to `selected`
  std::vector<LevelTable> levels;              // levels[l], l = 0..m
  double global_mean = 0.0;
  std::uint64_t global_count = 0;
  double sst = 0.0;
  std::vector<double> r2_trajectory;           // cumulative R^2 after step l
  std::vector<std::vector<double>> step_scores;  // [step][feature], steps 0..m
  std::vector<RedundancyEdge> redundancy_edges;
  std::optional<double> threshold;

  std::size_t num_selected() const { return selected.size(); }
  std::size_t num_features() const { return feature_names.size(); }
  const LevelTable& level(std::size_t l) const { return levels.at(l); }

  friend bool operator==(const S3DModel&, const S3DModel&) = default;
};

/// Redundancy weights: for each selection step l and every
/// feature j still unselected after it, scores[l-1][j] - scores[l][j].
/// Signed values are kept.
inline std::vector<RedundancyEdge> redundancy_coefficients(
    const std::vector<std::vector<double>>& step_scores,
    std::span<const std::size_t> selected) {
  const std::size_t m = selected.size();
  if (step_scores.size() < m + 1)
    throw Error("redundancy_coefficients: need " + std::to_string(m + 1) +
                " score rows, got " + std::to_string(step_scores.size()));
  const std::size_t num_features = step_scores.empty() ? 0 : step_scores[0].size();
  for (const auto& row : step_scores)
    if (row.size() != num_features)
      throw Error("redundancy_coefficients: ragged score matrix");
  std::vector<char> taken(num_features, 0);
  std::vector<RedundancyEdge> edges;
  for (std::size_t l = 1; l <= m; ++l) {
    const std::size_t chosen = selected[l - 1];
    if (chosen >= num_features)
      throw Error("redundancy_coefficients: selected feature out of range");
    taken[chosen] = 1;
    for (std::size_t j = 0; j < num_features; ++j) {
      if (taken[j]) continue;
      edges.push_back({j, chosen, step_scores[l - 1][j] - step_scores[l][j]});
    }
  }
  return edges;
}

/// Forward selection. Each step re-learns every remaining feature's partition
/// conditioned on the current blocks, takes the largest Delta R^2 (ties to the
/// smaller feature index) and refines the blocks with it.
///
/// Stops when the best Delta R^2 <= min_delta_r2, when max_features is hit or
/// when no feature is left. The scores of the step after the last selection
/// are always recorded so redundancy weights exist for every selected
/// feature.
inline S3DModel fit(const Dataset& data, const TrainConfig& config) {
  config.check();
  const std::size_t n = data.num_rows();
  const std::size_t num_features = data.num_features();
  if (num_features == 0) throw Error("empty feature set");

  const auto y = data.target();
  double sum = 0.0, sum_sq = 0.0;
  for (double v : y) {
    sum += v;
    sum_sq += v * v;
  }
  const double total_ss = s3d::sst(y);
  if (!(total_ss > 1e-24 * sum_sq) || total_ss <= 0.0)
    throw NoVarianceError("no variance to explain: target is constant");

  S3DModel model;
  model.task = data.task();
  model.feature_names = data.feature_names();
  model.lambda = config.lambda;
  model.global_count = n;
  model.global_mean = sum / static_cast<double>(n);
  model.sst = total_ss;
  for (std::size_t j = 0; j < num_features; ++j) {
    const auto col = data.column(j);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    model.feature_min.push_back(*lo);
    model.feature_max.push_back(*hi);
  }

  // Gains are shift invariant; centring keeps the block terms small.
  std::vector<double> centred(y.begin(), y.end());
  for (double& v : centred) v -= model.global_mean;

  std::vector<SortedFeature> sorted(num_features);
  for (std::size_t j = 0; j < num_features; ++j)
    sorted[j] = SortedFeature::build(data.column(j), j);

  const unsigned threads = config.threads ? config.threads : default_thread_count();
  std::vector<char> taken(num_features, 0);
  BlockAssignment blocks = BlockAssignment::single(n);
  double r2 = 0.0;

  while (true) {
    std::vector<double> scores(num_features, 0.0);
    std::vector<PartitionResult> results(num_features);
    const bool saturated = 1.0 - r2 <= 1e-12;
    if (!saturated) {
      parallel_for(num_features, threads, [&](std::size_t j) {
        if (taken[j]) return;
        const auto scan = build_scan(sorted[j], blocks.row_block,
                                     blocks.num_blocks(), centred);
        results[j] = fit_partition(scan, config.lambda, r2, total_ss);
        scores[j] = results[j].delta_r2;
      });
    }
    model.step_scores.push_back(scores);

    if (saturated) break;
    if (config.max_features && model.selected.size() >= *config.max_features) break;
    std::size_t best = num_features;
    for (std::size_t j = 0; j < num_features; ++j) {
      if (taken[j]) continue;
      if (best == num_features || scores[j] > scores[best]) best = j;
    }
    if (best == num_features || scores[best] <= config.min_delta_r2) break;

    taken[best] = 1;
    model.selected.push_back(best);
    model.partitions.push_back(results[best].partition);
    blocks = blocks.refine(results[best].partition, data.column(best));
    r2 += scores[best];
    model.r2_trajectory.push_back(r2);

    if (model.selected.size() == num_features) {
      model.step_scores.emplace_back(num_features, 0.0);
      break;
    }
  }

  const std::size_t m = model.selected.size();
  model.levels.resize(m + 1);
  model.levels[m] = blocks.table(y);
  for (std::size_t l = m; l > 0; --l) model.levels[l - 1] = model.levels[l].marginalize();
  model.redundancy_edges = redundancy_coefficients(model.step_scores, model.selected);
  return model;
}

/// Per-row block keys of `data` under the first `k` selected features.
inline std::vector<BlockKey> assign_blocks(const S3DModel& model,
                                           const Dataset& data, std::size_t k) {
  if (k > model.num_selected()) throw UsageError("k exceeds selected features");
  std::vector<BlockKey> keys(data.num_rows());
  for (std::size_t l = 0; l < k; ++l) {
    const auto col = data.column(model.selected[l]);
    for (std::size_t i = 0; i < data.num_rows(); ++i)
      keys[i].bins.push_back(model.partitions[l].bin_of(col[i]));
  }
  return keys;
}

}  // namespace s3d
