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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "s3d/dataset.hpp"
#include "s3d/error.hpp"

namespace s3d::synthetic {

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double normal(std::mt19937_64& rng) {
  // Box-Muller; portable, unlike std::normal_distribution.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Uniform on {1/levels, 2/levels, ..., 1}.
inline double grid_value(std::mt19937_64& rng, int levels) {
  const auto i = static_cast<int>(rng() % static_cast<std::uint64_t>(levels));
  return static_cast<double>(i + 1) / levels;
}

inline std::vector<std::string> names(std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < count; ++j) out.push_back("x" + std::to_string(j + 1));
  return out;
}

}  // namespace detail

/// Cut values and block means of the noise-free step-function generator.
/// x1 takes values 1..6 with cuts at 2 and 4; x2 takes values 1..4 with a
/// cut at 2.
struct StepDesign {
  static constexpr double x1_cuts[2] = {2.0, 4.0};
  static constexpr double x2_cut = 2.0;
  static constexpr double means[3][2] = {{0.0, 1.0}, {2.0, 3.0}, {5.0, 4.0}};
};

/// Full factorial over (x1, x2) with `replicates` copies of each of the 24
/// cells, so every marginal is exactly balanced. Optional Gaussian target
/// noise and extra pure-noise features. Rows are shuffled by `seed`.
inline Dataset step_function(std::size_t replicates, std::uint64_t seed,
                             double noise_sd = 0.0, std::size_t noise_features = 0) {
  if (replicates == 0) throw UsageError("step_function needs replicates >= 1");
  std::mt19937_64 rng(seed);
  struct Row { double x1, x2; };
  std::vector<Row> rows;
  for (std::size_t r = 0; r < replicates; ++r)
    for (int a = 1; a <= 6; ++a)
      for (int b = 1; b <= 4; ++b) rows.push_back({double(a), double(b)});
  for (std::size_t i = rows.size(); i > 1; --i)
    std::swap(rows[i - 1], rows[rng() % i]);

  const std::size_t n = rows.size();
  std::vector<std::vector<double>> cols(2 + noise_features, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int b1 = rows[i].x1 <= StepDesign::x1_cuts[0] ? 0 : rows[i].x1 <= StepDesign::x1_cuts[1] ? 1 : 2;
    const int b2 = rows[i].x2 <= StepDesign::x2_cut ? 0 : 1;
    cols[0][i] = rows[i].x1;
    cols[1][i] = rows[i].x2;
    for (std::size_t j = 0; j < noise_features; ++j) cols[2 + j][i] = detail::grid_value(rng, 50);
    y[i] = StepDesign::means[b1][b2] + (noise_sd > 0 ? noise_sd * detail::normal(rng) : 0.0);
  }
  auto feature_names = detail::names(cols.size());
  return Dataset(std::move(feature_names), std::move(cols), std::move(y), TaskKind::regression);
}

/// Rare-positive classification. Values lie on a 0.001 grid in (0, 1]; the
/// top 5% of x1 holds about 60% of the positives, x2 is weakly informative
/// and the remaining features are noise.
inline Dataset unbalanced_classification(std::size_t n, std::uint64_t seed,
                                         double positive_rate = 0.0025,
                                         std::size_t noise_features = 3) {
  if (!(positive_rate > 0.0 && positive_rate < 1.0))
    throw UsageError("positive rate must be in (0, 1)");
  std::mt19937_64 rng(seed);
  const double high = std::min(1.0, 12.0 * positive_rate);
  const double low = std::max(0.0, (positive_rate - 0.05 * high) / 0.95);
  std::vector<std::vector<double>> cols(2 + noise_features, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : cols) c[i] = detail::grid_value(rng, 1000);
    double p = cols[0][i] > 0.95 ? high : low;
    p *= cols[1][i] > 0.5 ? 1.25 : 0.75;
    y[i] = detail::uniform01(rng) < p ? 1.0 : 0.0;
  }
  auto feature_names = detail::names(cols.size());
  return Dataset(std::move(feature_names), std::move(cols), std::move(y),
                 TaskKind::binary_classification);
}

/// Balanced classification prone to overfitting at large k: three
/// informative features of decreasing strength plus noise features, on a
/// 0.1 grid.
inline Dataset overfit_classification(std::size_t n, std::uint64_t seed,
                                      std::size_t noise_features = 6) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> cols(3 + noise_features, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : cols) c[i] = detail::grid_value(rng, 10);
    const double logit = 4.0 * (cols[0][i] - 0.5) + 3.0 * (cols[1][i] - 0.5) +
                         2.0 * (cols[2][i] - 0.5);
    y[i] = detail::uniform01(rng) < 1.0 / (1.0 + std::exp(-logit)) ? 1.0 : 0.0;
  }
  auto feature_names = detail::names(cols.size());
  return Dataset(std::move(feature_names), std::move(cols), std::move(y),
                 TaskKind::binary_classification);
}

}  // namespace s3d::synthetic
