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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s3d/dataset.hpp"
#include "s3d/error.hpp"
#include "s3d/selector.hpp"

namespace s3d {

inline constexpr double kDefaultThreshold = 0.5;

/// A model restricted to its top-k selected features. `model` must outlive
/// the view.
class PredictorView {
 public:
  PredictorView(const S3DModel& model, std::size_t k,
                std::optional<double> theta = std::nullopt)
      : model_(&model), k_(k), theta_(theta) {
    if (k > model.num_selected())
      throw UsageError("k exceeds selected features (m=" +
                       std::to_string(model.num_selected()) + ")");
    if (k == 0 && model.num_selected() > 0)
      throw UsageError("k must be >= 1");
    if (model.task == TaskKind::binary_classification) {
      if (!theta_) theta_ = model.threshold.value_or(kDefaultThreshold);
    } else if (theta_) {
      throw UsageError("a discrimination threshold applies to classification only");
    }
  }

  const S3DModel& model() const { return *model_; }
  std::size_t k() const { return k_; }
  std::optional<double> theta() const { return theta_; }

  /// Block of `row` (values indexed by feature) at level k. Out-of-range
  /// values clamp into the outer bins.
  BlockKey locate_block(std::span<const double> row) const {
    BlockKey key;
    key.bins.reserve(k_);
    for (std::size_t l = 0; l < k_; ++l) {
      const std::size_t f = model_->selected[l];
      if (f >= row.size())
        throw Error("missing value for feature '" + model_->feature_names.at(f) + "'");
      key.bins.push_back(model_->partitions[l].bin_of(row[f]));
    }
    return key;
  }

  /// Mean of the located block; an empty block falls back to its deepest
  /// populated ancestor, ultimately the global mean.
  double expected_value(std::span<const double> row) const {
    return expected_value(locate_block(row));
  }

  double expected_value(const BlockKey& key) const {
    for (std::size_t l = key.level() + 1; l-- > 0;) {
      const BlockStats* stats = model_->levels.at(l).find(key.prefix(l));
      if (stats && !stats->empty()) return stats->mean();
    }
    return model_->global_mean;
  }

  int predict_class(std::span<const double> row) const {
    if (model_->task != TaskKind::binary_classification)
      throw UsageError("predict_class requires a classification model");
    return expected_value(row) >= *theta_ ? 1 : 0;
  }

 private:
  const S3DModel* model_;
  std::size_t k_;
  std::optional<double> theta_;
};

inline std::vector<double> predict_expected(const PredictorView& view,
                                            const Dataset& data) {
  std::vector<double> out(data.num_rows());
  std::vector<double> row(data.num_features());
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    for (std::size_t j = 0; j < data.num_features(); ++j) row[j] = data.column(j)[i];
    out[i] = view.expected_value(row);
  }
  return out;
}

namespace detail {

// Largest theta among block means (plus a sentinel above 1) whose
// predicted-positive count reaches `positives`. `mass` maps mean -> rows.
inline double max_threshold(const std::map<double, double>& mass, double positives) {
  double threshold = std::nextafter(1.0, 2.0);
  if (!mass.empty()) threshold = std::max(threshold, std::nextafter(mass.rbegin()->first, 2.0));
  if (positives <= 0.0) return threshold;
  double predicted = 0.0;
  for (auto it = mass.rbegin(); it != mass.rend(); ++it) {
    predicted += it->second;
    if (predicted >= positives) return it->first;
  }
  return mass.empty() ? threshold : mass.begin()->first;
}

}  // namespace detail

/// Calibrated discrimination threshold at level k from the model's own
/// training statistics.
inline double choose_threshold(const S3DModel& model, std::size_t k) {
  if (model.task != TaskKind::binary_classification)
    throw UsageError("threshold calibration requires a classification model");
  if (k > model.num_selected())
    throw UsageError("k exceeds selected features (m=" +
                     std::to_string(model.num_selected()) + ")");
  std::map<double, double> mass;
  for (const auto& [key, stats] : model.levels.at(k).entries)
    if (!stats.empty()) mass[stats.mean()] += static_cast<double>(stats.count);
  const double positives = model.global_mean * static_cast<double>(model.global_count);
  return detail::max_threshold(mass, std::round(positives));
}

/// Same calibration, counting predicted positives by locating the rows of
/// `training`.
inline double choose_threshold(const S3DModel& model, std::size_t k,
                               const Dataset& training) {
  if (model.task != TaskKind::binary_classification)
    throw UsageError("threshold calibration requires a classification model");
  const PredictorView view(model, k, 0.5);
  std::map<double, double> mass;
  for (double ev : predict_expected(view, training)) mass[ev] += 1.0;
  double positives = 0.0;
  for (double v : training.target()) positives += v;
  return detail::max_threshold(mass, positives);
}

}  // namespace s3d
