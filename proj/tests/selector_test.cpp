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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "s3d/predictor.hpp"
#include "s3d/selector.hpp"
#include "s3d/synthetic.hpp"

namespace {

using s3d::Dataset;
using s3d::TaskKind;
using s3d::TrainConfig;

TrainConfig config(double lambda) {
  TrainConfig c;
  c.lambda = lambda;
  return c;
}

std::vector<oracle::Key> model_keys(const s3d::S3DModel& model, const Dataset& d, std::size_t k) {
  std::vector<oracle::Key> keys;
  for (const auto& key : s3d::assign_blocks(model, d, k))
    keys.emplace_back(key.bins.begin(), key.bins.end());
  return keys;
}

Dataset random_regression(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> cols(m, std::vector<double>(n));
  std::vector<double> y(n);
  const int levels = 3 + static_cast<int>(rng() % 40);
  for (auto& c : cols)
    for (double& v : c) v = static_cast<double>(rng() % levels) / levels - 0.5;
  for (std::size_t i = 0; i < n; ++i)
    y[i] = std::sin(4 * cols[0][i]) + (m > 1 ? cols[1][i] * cols[0][i] * 3 : 0) + 0.3 * g(rng);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < m; ++j) names.push_back("f" + std::to_string(j));
  return Dataset(names, std::move(cols), std::move(y), TaskKind::regression);
}

TEST(Fit, IdentityTargetSelectsThatFeatureAndStops) {
  std::mt19937_64 rng(4);
  std::vector<double> x1, noise, y;
  for (int rep = 0; rep < 5; ++rep)
    for (int v = 1; v <= 10; ++v) {
      x1.push_back(v);
      noise.push_back(static_cast<double>(rng() % 100));
      y.push_back(v);
    }
  const Dataset d({"x1", "noise"}, {x1, noise}, y, TaskKind::regression);
  const auto m = s3d::fit(d, config(1e-4));
  ASSERT_EQ(m.selected, (std::vector<std::size_t>{0}));
  EXPECT_GE(m.r2_trajectory[0], 0.999);
  EXPECT_EQ(m.partitions[0].thresholds.size(), 9u);
}

TEST(Fit, DuplicateFeatureTiesToLowerIndexAndExplainsNothingAfter) {
  const auto base = s3d::synthetic::step_function(4, 3);
  const auto x1 = base.column(0);
  const Dataset d({"x1", "x2"}, {{x1.begin(), x1.end()}, {x1.begin(), x1.end()}},
                  {base.target().begin(), base.target().end()}, TaskKind::regression);
  const auto m = s3d::fit(d, config(1e-4));
  ASSERT_EQ(m.selected.front(), 0u);
  EXPECT_EQ(m.step_scores[0][0], m.step_scores[0][1]);
  EXPECT_EQ(m.step_scores[1][1], 0.0);
  ASSERT_FALSE(m.redundancy_edges.empty());
  EXPECT_EQ(m.redundancy_edges[0].source, 1u);
  EXPECT_EQ(m.redundancy_edges[0].target, 0u);
  EXPECT_EQ(m.redundancy_edges[0].weight, m.step_scores[0][1]);
}

TEST(Fit, RecoversTwoFeatureStepFunction) {
  const auto d = s3d::synthetic::step_function(5, 17);
  const auto m = s3d::fit(d, config(1e-4));
  ASSERT_EQ(m.selected, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(m.partitions[0].thresholds, (std::vector<double>{2, 4}));
  EXPECT_EQ(m.partitions[1].thresholds, (std::vector<double>{2}));
  EXPECT_GE(m.r2_trajectory.back(), 0.999);
}

TEST(Fit, RespectsMaxFeaturesAndRecordsFollowingStep) {
  const auto d = s3d::synthetic::step_function(5, 17, 0.1, 2);
  auto c = config(1e-4);
  c.max_features = 1;
  const auto m = s3d::fit(d, c);
  EXPECT_EQ(m.num_selected(), 1u);
  EXPECT_EQ(m.step_scores.size(), 2u);
  EXPECT_GT(m.step_scores[1][1], 0.0);
}

TEST(Fit, Errors) {
  const Dataset constant({"a"}, {{1, 2, 3}}, {4, 4, 4}, TaskKind::regression);
  try {
    s3d::fit(constant, config(0.01));
    FAIL();
  } catch (const s3d::NoVarianceError& e) {
    EXPECT_NE(std::string(e.what()).find("no variance to explain"), std::string::npos);
  }
  const Dataset empty({}, {}, {1, 2, 3}, TaskKind::regression);
  EXPECT_THROW(s3d::fit(empty, config(0.01)), s3d::Error);
  const Dataset ok({"a"}, {{1, 2, 3}}, {1, 2, 3}, TaskKind::regression);
  EXPECT_THROW(s3d::fit(ok, config(0.0)), s3d::UsageError);
}

TEST(Redundancy, IndependentFeatureHasNearZeroWeight) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const std::size_t n = 2000;
    std::vector<double> x1(n), x3(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = static_cast<double>(rng() % 20);
      x3[i] = static_cast<double>(rng() % 20);
      y[i] = (x1[i] > 9 ? 1.0 : 0.0) + (x1[i] > 14 ? 1.0 : 0.0) + 0.5 * g(rng);
    }
    const Dataset d({"x1", "x3"}, {x1, x3}, y, TaskKind::regression);
    const auto m = s3d::fit(d, config(1e-2));
    ASSERT_EQ(m.selected.front(), 0u);
    for (const auto& e : m.redundancy_edges)
      if (e.source == 1 && e.target == 0) worst = std::max(worst, std::abs(e.weight));
  }
  EXPECT_LT(worst, 0.02);
}

TEST(Redundancy, InteractionGivesNegativeWeight) {
  // y = 2 b1 + (b1 xor b2) on a balanced factorial: b2 alone explains nothing.
  std::vector<double> x1, x2, y;
  for (int rep = 0; rep < 10; ++rep)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        x1.push_back(a);
        x2.push_back(b);
        const int b1 = a >= 2, b2 = b >= 2;
        y.push_back(2.0 * b1 + (b1 ^ b2));
      }
  const Dataset d({"x1", "x2"}, {x1, x2}, y, TaskKind::regression);
  const auto m = s3d::fit(d, config(1e-3));
  ASSERT_EQ(m.selected.front(), 0u);
  EXPECT_NEAR(m.step_scores[0][1], 0.0, 1e-12);
  ASSERT_EQ(m.redundancy_edges.size(), 1u);
  EXPECT_LT(m.redundancy_edges[0].weight, 0.0);
}

TEST(Redundancy, MatchesScoreDifferencesAndValidatesShape) {
  const std::vector<std::vector<double>> scores{{0.5, 0.3, 0.2}, {0.0, 0.1, 0.25}, {0.0, 0.0, 0.05}};
  const std::vector<std::size_t> selected{0, 1};
  const auto edges = s3d::redundancy_coefficients(scores, selected);
  ASSERT_EQ(edges.size(), 3u);
  EXPECT_EQ(edges[0], (s3d::RedundancyEdge{1, 0, 0.3 - 0.1}));
  EXPECT_EQ(edges[1], (s3d::RedundancyEdge{2, 0, 0.2 - 0.25}));
  EXPECT_EQ(edges[2], (s3d::RedundancyEdge{2, 1, 0.25 - 0.05}));
  EXPECT_THROW(s3d::redundancy_coefficients({{0.5, 0.3, 0.2}}, selected), s3d::Error);
  EXPECT_THROW(s3d::redundancy_coefficients({{0.5}, {0.1, 0.2}, {0, 0}}, selected), s3d::Error);
}

TEST(FitProperty, ModelInvariants) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = random_regression(rng, 50 + rng() % 400, 1 + rng() % 5);
    const auto m = s3d::fit(d, config(std::pow(10.0, -1.0 - static_cast<double>(rng() % 4))));
    double prev = 0.0;
    for (double r : m.r2_trajectory) {
      EXPECT_GE(r, prev);
      EXPECT_LE(r, 1.0 + 1e-9);
      prev = r;
    }
    auto sorted = m.selected;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    ASSERT_EQ(m.step_scores.size(), m.num_selected() + 1);
    for (std::size_t l = 0; l < m.num_selected(); ++l) {
      const auto& row = m.step_scores[l];
      EXPECT_EQ(*std::max_element(row.begin(), row.end()), row[m.selected[l]]);
      for (std::size_t later = l + 1; later < m.step_scores.size(); ++later)
        EXPECT_EQ(m.step_scores[later][m.selected[l]], 0.0);
    }
    // Level tables: totals, prefix consistency and R^2 from raw rows.
    for (std::size_t l = 0; l <= m.num_selected(); ++l) {
      EXPECT_EQ(m.levels[l].total_count(), d.num_rows());
      if (l > 0) {
        EXPECT_EQ(m.levels[l].marginalize(), m.levels[l - 1]);
      }
    }
    if (m.num_selected() > 0) {
      const auto dec = oracle::decompose(model_keys(m, d, m.num_selected()), d.target());
      EXPECT_NEAR(dec.explained / dec.total, m.r2_trajectory.back(), 1e-9);
      EXPECT_NEAR(s3d::r_squared(m.levels.back(), m.global_mean, m.sst), m.r2_trajectory.back(), 1e-9);
    }
    // An edge's source is still unselected when its target is chosen.
    for (const auto& e : m.redundancy_edges) {
      const auto target_pos = std::find(m.selected.begin(), m.selected.end(), e.target);
      const auto source_pos = std::find(m.selected.begin(), m.selected.end(), e.source);
      EXPECT_GT(source_pos, target_pos);
    }
  }
}

TEST(FitProperty, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = random_regression(rng, 300, 4);
    const auto m = s3d::fit(d, config(1e-3));
    const auto cubed = d.with_columns([](std::size_t, const std::vector<double>& c) {
      std::vector<double> out(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] * c[i] * c[i] + 2 * c[i];
      return out;
    });
    const auto mc = s3d::fit(cubed, config(1e-3));
    EXPECT_EQ(m.selected, mc.selected);
    EXPECT_EQ(m.r2_trajectory, mc.r2_trajectory);
    EXPECT_EQ(s3d::assign_blocks(m, d, m.num_selected()),
              s3d::assign_blocks(mc, cubed, mc.num_selected()));
  }
}

TEST(FitProperty, ThreadCountDoesNotChangeTheModel) {
  std::mt19937_64 rng(8);
  const auto d = random_regression(rng, 2000, 6);
  auto c = config(1e-3);
  c.threads = 1;
  const auto serial = s3d::fit(d, c);
  c.threads = 4;
  EXPECT_EQ(s3d::fit(d, c), serial);
}

}  // namespace
