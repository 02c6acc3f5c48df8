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
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "s3d/dataset.hpp"
#include "s3d/error.hpp"
#include "s3d/metrics.hpp"
#include "s3d/parallel.hpp"
#include "s3d/predictor.hpp"
#include "s3d/selector.hpp"

namespace s3d {

using IndexSet = std::vector<std::size_t>;

/// Outer test folds and, per outer fold, inner validation folds over the
/// remaining rows. All index sets are ascending row indices.
struct FoldPlan {
  std::vector<IndexSet> outer;
  std::vector<std::vector<IndexSet>> inner;
  std::uint64_t seed = 0;

  /// Rows of every outer fold except `o`.
  IndexSet outer_train(std::size_t o) const {
    IndexSet rows;
    for (std::size_t f = 0; f < outer.size(); ++f)
      if (f != o) rows.insert(rows.end(), outer[f].begin(), outer[f].end());
    std::sort(rows.begin(), rows.end());
    return rows;
  }

  /// Rows of outer-train `o` outside its inner fold `v`.
  IndexSet inner_train(std::size_t o, std::size_t v) const {
    IndexSet rows;
    for (std::size_t f = 0; f < inner[o].size(); ++f)
      if (f != v) rows.insert(rows.end(), inner[o][f].begin(), inner[o][f].end());
    std::sort(rows.begin(), rows.end());
    return rows;
  }

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

namespace detail {

// Fisher-Yates on raw mt19937_64 output so shuffles are identical across
// standard libraries.
inline void shuffle(IndexSet& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

// Deals `rows` into `k` folds. With `labels`, each class is shuffled and
// dealt round-robin, continuing the rotation across classes, so per-class
// counts differ by at most one and fold sizes by at most one.
inline std::vector<IndexSet> deal(const IndexSet& rows, std::size_t k,
                                  const std::vector<double>* labels,
                                  std::mt19937_64& rng) {
  std::vector<IndexSet> groups;
  if (labels) {
    IndexSet neg, pos;
    for (std::size_t r : rows) ((*labels)[r] > 0.5 ? pos : neg).push_back(r);
    groups = {std::move(neg), std::move(pos)};
  } else {
    groups = {rows};
  }
  std::vector<IndexSet> folds(k);
  std::size_t next = 0;
  for (auto& g : groups) {
    shuffle(g, rng);
    for (std::size_t r : g) {
      folds[next].push_back(r);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace detail

/// Nested fold plan, stratified by class for classification data.
/// Deterministic in `seed`.
inline FoldPlan make_folds(const Dataset& data, std::uint64_t seed,
                           std::size_t outer_folds = 5, std::size_t inner_folds = 4) {
  const std::size_t n = data.num_rows();
  if (outer_folds < 2 || inner_folds < 2) throw UsageError("need at least 2 folds");
  if (n < outer_folds)
    throw Error("too few samples: " + std::to_string(n) + " rows for " +
                std::to_string(outer_folds) + " folds");
  std::vector<double> labels;
  const bool stratify = data.task() == TaskKind::binary_classification;
  if (stratify) {
    labels.assign(data.target().begin(), data.target().end());
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1.0));
    const std::size_t minimum = 2 * outer_folds;
    if (positives < minimum || n - positives < minimum)
      throw Error("too few samples per class for stratified folds (need >= " +
                  std::to_string(minimum) + " of each class)");
  }
  FoldPlan plan;
  plan.seed = seed;
  std::mt19937_64 rng(seed);
  IndexSet all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  plan.outer = detail::deal(all, outer_folds, stratify ? &labels : nullptr, rng);
  for (std::size_t o = 0; o < outer_folds; ++o)
    plan.inner.push_back(
        detail::deal(plan.outer_train(o), inner_folds, stratify ? &labels : nullptr, rng));
  return plan;
}

enum class Objective { auc, rmse };

inline Objective default_objective(TaskKind task) {
  return task == TaskKind::binary_classification ? Objective::auc : Objective::rmse;
}

inline std::vector<double> default_lambda_grid() { return {1e-4, 1e-3, 1e-2, 1e-1}; }

struct TuneOptions {
  bool calibrate_threshold = false;
  bool standardize = false;
  unsigned threads = 0;
};

/// One point of the inner-CV tuning surface for one outer fold.
struct SurfacePoint {
  std::size_t outer = 0;
  double lambda = 0.0;
  std::size_t k = 0;
  double objective = 0.0;  // mean over inner folds
  double train_r2 = 0.0;   // mean training R^2 at this k
};

using MetricList = std::vector<std::pair<std::string, double>>;

struct FoldReport {
  std::size_t outer = 0;
  double lambda = 0.0;
  std::size_t k = 0;
  std::size_t m_lambda = 0;  // features selected by the refit
  std::size_t inner_max_k = 0;
  double objective = 0.0;    // inner-CV value of the chosen (lambda, k)
  std::optional<double> threshold;
  MetricList test;
};

struct MetricSummary {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
};

struct CvReport {
  TaskKind task = TaskKind::regression;
  Objective objective = Objective::rmse;
  std::uint64_t seed = 0;
  std::vector<double> lambda_grid;
  std::vector<FoldReport> folds;
  std::vector<MetricSummary> aggregate;
  std::vector<SurfacePoint> surface;
};

namespace detail {

// Test-set metrics of a model at level k.
inline MetricList evaluate(const S3DModel& model, std::size_t k,
                           std::optional<double> theta, const Dataset& test) {
  const PredictorView view(model, k, theta);
  const auto expected = predict_expected(view, test);
  const auto y = test.target();
  if (model.task == TaskKind::binary_classification) {
    std::vector<double> labels(expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
      labels[i] = expected[i] >= *view.theta() ? 1.0 : 0.0;
    return {{"accuracy", metrics::accuracy(y, labels)},
            {"f1", metrics::f1(y, labels)},
            {"auc", metrics::auc(y, expected)}};
  }
  return {{"rmse", metrics::rmse(y, expected)},
          {"mae_mean", metrics::mae_mean(y, expected)},
          {"mae_median", metrics::mae_median(y, expected)},
          {"r2", metrics::r_squared(y, expected)}};
}

inline double objective_value(Objective objective, std::span<const double> y,
                              std::span<const double> expected) {
  if (objective == Objective::auc) return metrics::auc(y, expected);
  return metrics::rmse(y, expected);
}

// Standardizes training and test features with training moments.
inline std::pair<Dataset, Dataset> standardized(const Dataset& train, const Dataset& test) {
  std::vector<double> mean(train.num_features()), scale(train.num_features());
  for (std::size_t j = 0; j < train.num_features(); ++j) {
    const auto col = train.column(j);
    double m = 0.0;
    for (double v : col) m += v;
    m /= static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) var += (v - m) * (v - m);
    var /= static_cast<double>(col.size());
    mean[j] = m;
    scale[j] = var > 0 ? std::sqrt(var) : 1.0;
  }
  auto apply = [&](std::size_t j, const std::vector<double>& col) {
    std::vector<double> out(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) out[i] = (col[i] - mean[j]) / scale[j];
    return out;
  };
  return {train.with_columns(apply), test.with_columns(apply)};
}

}  // namespace detail

/// Nested cross-validation over (lambda, k).
///
/// For each outer fold and each lambda, fits on every inner-train split and
/// scores each k on the inner validation fold; a split whose model has
/// fewer than k features is scored with all it has (the global mean when it
/// has none). The (lambda, k) with the best mean inner objective wins; ties
/// prefer smaller k, then larger lambda. The winner is refit on the whole
/// outer-train portion and evaluated on the outer test fold.
inline CvReport tune(const Dataset& data, std::vector<double> lambda_grid,
                     const FoldPlan& folds, Objective objective,
                     const TuneOptions& options = {}) {
  if (lambda_grid.empty()) throw UsageError("lambda grid is empty");
  for (double l : lambda_grid)
    if (!(l > 0.0)) throw UsageError("lambda grid values must be > 0");
  if (objective == Objective::auc && data.task() != TaskKind::binary_classification)
    throw UsageError("AUC objective requires a classification task");
  std::sort(lambda_grid.begin(), lambda_grid.end());
  lambda_grid.erase(std::unique(lambda_grid.begin(), lambda_grid.end()), lambda_grid.end());

  const unsigned threads = options.threads ? options.threads : default_thread_count();
  const bool maximize = objective == Objective::auc;

  CvReport report;
  report.task = data.task();
  report.objective = objective;
  report.seed = folds.seed;
  report.lambda_grid = lambda_grid;

  auto prepare = [&](const IndexSet& train_rows, const IndexSet& test_rows) {
    Dataset train = data.subset(train_rows);
    Dataset test = data.subset(test_rows);
    if (options.standardize) return detail::standardized(train, test);
    return std::pair<Dataset, Dataset>{std::move(train), std::move(test)};
  };
  auto fit_or_empty = [&](const Dataset& train, double lambda) -> std::optional<S3DModel> {
    TrainConfig config;
    config.lambda = lambda;
    config.threads = 1;
    try {
      return fit(train, config);
    } catch (const NoVarianceError&) {
      return std::nullopt;
    }
  };

  report.folds.resize(folds.outer.size());
  std::vector<std::vector<SurfacePoint>> surfaces(folds.outer.size());
  parallel_for(folds.outer.size(), threads, [&](std::size_t o) {
    const std::size_t num_inner = folds.inner[o].size();
    std::optional<SurfacePoint> best;
    std::size_t best_inner_max = 0;

    // lambda descending so that, among ties at equal k, the larger lambda is met first.
    std::vector<SurfacePoint> points;
    for (std::size_t li = lambda_grid.size(); li-- > 0;) {
      const double lambda = lambda_grid[li];
      std::vector<std::vector<double>> inner_objective(num_inner), inner_r2(num_inner);
      std::size_t max_k = 1;
      for (std::size_t v = 0; v < num_inner; ++v) {
        const auto [train, valid] = prepare(folds.inner_train(o, v), folds.inner[o][v]);
        const auto model = fit_or_empty(train, lambda);
        const std::size_t m = model ? model->num_selected() : 0;
        max_k = std::max(max_k, m);
        double train_mean = 0.0;
        for (double y : train.target()) train_mean += y;
        train_mean /= static_cast<double>(train.num_rows());
        for (std::size_t k = 1; k <= std::max<std::size_t>(m, 1); ++k) {
          const std::size_t level = std::min(k, m);
          const auto expected =
              model ? predict_expected(PredictorView(*model, level, std::nullopt), valid)
                    : std::vector<double>(valid.num_rows(), train_mean);
          inner_objective[v].push_back(detail::objective_value(objective, valid.target(), expected));
          inner_r2[v].push_back(level > 0 ? model->r2_trajectory[level - 1] : 0.0);
        }
      }
      for (std::size_t k = 1; k <= max_k; ++k) {
        SurfacePoint p{o, lambda, k, 0.0, 0.0};
        for (std::size_t v = 0; v < num_inner; ++v) {
          const std::size_t idx = std::min(k, inner_objective[v].size()) - 1;
          p.objective += inner_objective[v][idx];
          p.train_r2 += inner_r2[v][idx];
        }
        p.objective /= static_cast<double>(num_inner);
        p.train_r2 /= static_cast<double>(num_inner);
        points.push_back(p);
      }
    }
    // Parsimony order: k ascending, then lambda descending; first strict win stays.
    std::vector<SurfacePoint> ordered = points;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SurfacePoint& a, const SurfacePoint& b) {
                       if (a.k != b.k) return a.k < b.k;
                       return a.lambda > b.lambda;
                     });
    for (const auto& p : ordered) {
      const bool better = !best || (maximize ? p.objective > best->objective
                                             : p.objective < best->objective);
      if (better) best = p;
    }
    for (const auto& p : points)
      if (p.lambda == best->lambda) best_inner_max = std::max(best_inner_max, p.k);

    const auto [train, test] = prepare(folds.outer_train(o), folds.outer[o]);
    FoldReport fold;
    fold.outer = o;
    fold.lambda = best->lambda;
    fold.k = best->k;
    fold.inner_max_k = best_inner_max;
    fold.objective = best->objective;
    const auto model = fit_or_empty(train, best->lambda);
    if (!model) throw Error("outer training fold has a constant target");
    fold.m_lambda = model->num_selected();
    const std::size_t level = std::min(fold.k, fold.m_lambda);
    if (model->task == TaskKind::binary_classification)
      fold.threshold = options.calibrate_threshold ? choose_threshold(*model, level)
                                                   : kDefaultThreshold;
    fold.test = detail::evaluate(*model, level, fold.threshold, test);
    report.folds[o] = std::move(fold);
    std::sort(points.begin(), points.end(), [](const SurfacePoint& a, const SurfacePoint& b) {
      if (a.lambda != b.lambda) return a.lambda < b.lambda;
      return a.k < b.k;
    });
    surfaces[o] = std::move(points);
  });

  for (auto& s : surfaces) report.surface.insert(report.surface.end(), s.begin(), s.end());
  if (!report.folds.empty()) {
    for (std::size_t mi = 0; mi < report.folds[0].test.size(); ++mi) {
      MetricSummary summary{report.folds[0].test[mi].first, 0.0, 0.0};
      const double count = static_cast<double>(report.folds.size());
      for (const auto& f : report.folds) summary.mean += f.test[mi].second;
      summary.mean /= count;
      for (const auto& f : report.folds) {
        const double d = f.test[mi].second - summary.mean;
        summary.stddev += d * d;
      }
      summary.stddev = count > 1 ? std::sqrt(summary.stddev / (count - 1)) : 0.0;
      report.aggregate.push_back(summary);
    }
  }
  return report;
}

}  // namespace s3d
