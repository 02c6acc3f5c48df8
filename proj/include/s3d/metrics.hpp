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
#include <numeric>
#include <span>
#include <vector>

#include "s3d/error.hpp"

namespace s3d::metrics {

namespace detail {
inline void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("metric inputs differ in length");
  if (a.empty()) throw Error("metric inputs are empty");
}
}  // namespace detail

inline double accuracy(std::span<const double> y_true, std::span<const double> y_pred) {
  detail::check_lengths(y_true, y_pred);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += (y_true[i] == y_pred[i]);
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

/// F1 of the positive class; 0 when precision + recall = 0.
inline double f1(std::span<const double> y_true, std::span<const double> y_pred) {
  detail::check_lengths(y_true, y_pred);
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool truth = y_true[i] > 0.5, pred = y_pred[i] > 0.5;
    tp += truth && pred;
    fp += !truth && pred;
    fn += truth && !pred;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

/// Rank-sum (Mann-Whitney) AUC with average ranks for tied scores.
inline double auc(std::span<const double> y_true, std::span<const double> score) {
  detail::check_lengths(y_true, score);
  const std::size_t n = score.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  double rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && score[order[j]] == score[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (y_true[order[t]] > 0.5) {
        rank_sum += avg_rank;
        positives += 1;
      }
    i = j;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0 || negatives == 0)
    throw Error("AUC is undefined when only one class is present");
  return (rank_sum - positives * (positives + 1) / 2) / (positives * negatives);
}

inline double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
  detail::check_lengths(y_true, y_pred);
  double total = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_true[i] - y_pred[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(y_true.size()));
}

inline double mae_mean(std::span<const double> y_true, std::span<const double> y_pred) {
  detail::check_lengths(y_true, y_pred);
  double total = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) total += std::abs(y_true[i] - y_pred[i]);
  return total / static_cast<double>(y_true.size());
}

/// Median absolute error; the mean of the two middle values for even n.
inline double mae_median(std::span<const double> y_true, std::span<const double> y_pred) {
  detail::check_lengths(y_true, y_pred);
  std::vector<double> err(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) err[i] = std::abs(y_true[i] - y_pred[i]);
  const std::size_t mid = err.size() / 2;
  std::nth_element(err.begin(), err.begin() + static_cast<std::ptrdiff_t>(mid), err.end());
  const double upper = err[mid];
  if (err.size() % 2 == 1) return upper;
  const double lower = *std::max_element(err.begin(), err.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// Out-of-sample R^2 against the mean of `y_true`.
inline double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
  detail::check_lengths(y_true, y_pred);
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) /
                      static_cast<double>(y_true.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    sse += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    sst += (y_true[i] - mean) * (y_true[i] - mean);
  }
  return sst > 0 ? 1.0 - sse / sst : 0.0;
}

}  // namespace s3d::metrics
