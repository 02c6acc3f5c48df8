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

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "s3d/dataset.hpp"
#include "s3d/partition.hpp"

namespace {

using s3d::Dataset;
using s3d::TaskKind;

s3d::Dataset parse(const std::string& text, const std::string& target,
                   TaskKind task = TaskKind::regression) {
  std::istringstream in(text);
  return s3d::to_dataset(s3d::parse_csv(in), target, task);
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const s3d::Error& e) {
    return e.what();
  }
  return "";
}

TEST(IngestCsv, ParsesHeaderAndRemovesTarget) {
  const auto d = parse("a,b,y\n1,2,0\n3,4,1\n5,6,0\n7,8,1\n", "y");
  EXPECT_EQ(d.num_features(), 2u);
  EXPECT_EQ(d.num_rows(), 4u);
  EXPECT_EQ(d.feature_name(0), "a");
  EXPECT_EQ(d.feature_name(1), "b");
  EXPECT_EQ(d.column(1)[3], 8.0);
  EXPECT_EQ(d.target()[1], 1.0);
}

TEST(IngestCsv, TargetMayBeAnyColumnAndQuotedHeadersWork) {
  const auto d = parse("\"y\",\"a, b\"\r\n1,2.5\r\n0,-1e3\r\n", "y");
  EXPECT_EQ(d.feature_name(0), "a, b");
  EXPECT_EQ(d.column(0)[1], -1000.0);
}

TEST(IngestCsv, NonNumericCellNamesRowAndColumn) {
  const auto msg = error_of([] { parse("a,b,y\n1,2,3\n4,abc,6\n", "y"); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 'b'"), std::string::npos) << msg;
}

TEST(IngestCsv, RejectsNonBinaryClassificationTarget) {
  const auto msg = error_of(
      [] { parse("a,y\n1,0\n2,0.5\n", "y", TaskKind::binary_classification); });
  EXPECT_NE(msg.find("non-binary target"), std::string::npos) << msg;
}

TEST(IngestCsv, RejectsNanInfMissingTargetAndEmpty) {
  EXPECT_NE(error_of([] { parse("a,y\nnan,1\n", "y"); }).find("NaN or infinite"), std::string::npos);
  EXPECT_NE(error_of([] { parse("a,y\ninf,1\n", "y"); }).find("NaN or infinite"), std::string::npos);
  EXPECT_NE(error_of([] { parse("a,y\n1,2\n", "z"); }).find("not found"), std::string::npos);
  EXPECT_NE(error_of([] { parse("a,y\n", "y"); }).find("empty data"), std::string::npos);
  EXPECT_NE(error_of([] { parse("a,y\n1,\n", "y"); }).find("non-numeric"), std::string::npos);
  EXPECT_NE(error_of([] { parse("a,y\n1\n", "y"); }).find("fields"), std::string::npos);
}

TEST(IngestCsv, MissingFileIsAnError) {
  EXPECT_THROW(s3d::ingest_csv("/nonexistent/file.csv", "y", TaskKind::regression), s3d::Error);
}

TEST(IngestCsv, WriteThenReadPreservesValuesExactly) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> cols(3, std::vector<double>(50));
  std::vector<double> y(50);
  for (auto& c : cols) for (double& v : c) v = g(rng) * 1e3;
  for (double& v : y) v = g(rng);
  const Dataset d({"p", "q", "r"}, cols, y, TaskKind::regression);
  std::stringstream ss;
  s3d::write_csv(ss, d, "target");
  const auto back = s3d::to_dataset(s3d::parse_csv(ss), "target", TaskKind::regression);
  EXPECT_EQ(back.columns(), d.columns());
  EXPECT_TRUE(std::equal(back.target().begin(), back.target().end(), d.target().begin()));
}

TEST(DatasetInvariants, DuplicateNamesAndRaggedColumnsRejected) {
  EXPECT_THROW(Dataset({"a", "a"}, {{1}, {2}}, {0}, TaskKind::regression), s3d::Error);
  EXPECT_THROW(Dataset({"a", "b"}, {{1}, {2, 3}}, {0}, TaskKind::regression), s3d::Error);
}

TEST(Sst, MatchesHandValues) {
  const std::vector<double> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(s3d::sst(y), 1.0);
  const std::vector<double> c(7, 3.25);
  EXPECT_EQ(s3d::sst(c), 0.0);
  const std::vector<double> one{42.0};
  EXPECT_EQ(s3d::sst(one), 0.0);
}

TEST(Sst, TwoPassAgreesWithAccumulatorForm) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_real_distribution<double> u(-100, 100);
    const std::size_t n = 1 + rng() % 500;
    std::vector<double> y(n);
    double sum = 0, sum_sq = 0;
    for (double& v : y) {
      v = u(rng);
      sum += v;
      sum_sq += v * v;
    }
    const double acc = sum_sq - sum * sum / static_cast<double>(n);
    EXPECT_NEAR(s3d::sst(y), acc, 1e-9 * std::max(1.0, sum_sq));
  }
}

TEST(FeaturePartition, ClosedRightBinsClampOutOfRange) {
  s3d::FeaturePartition p{0, {2.0, 5.0, 9.0}};
  EXPECT_EQ(p.bin_of(2.0), 0);
  EXPECT_EQ(p.bin_of(2.0000001), 1);
  EXPECT_EQ(p.bin_of(5.0), 1);
  EXPECT_EQ(p.bin_of(9.0), 2);
  EXPECT_EQ(p.bin_of(9.5), 3);
  EXPECT_EQ(p.bin_of(-1e30), 0);
  EXPECT_EQ(p.bin_of(1e30), 3);
  s3d::FeaturePartition none{0, {}};
  EXPECT_EQ(none.bin_of(-7.0), 0);
  EXPECT_EQ(none.num_bins(), 1u);
}

TEST(FeaturePartition, BinIndexEqualsCountOfThresholdsBelow) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> t(rng() % 6);
    for (double& v : t) v = std::round(u(rng));
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    s3d::FeaturePartition p{0, t};
    const double v = std::round(u(rng) * 2) / 2;
    int below = 0;
    for (double s : t) below += s < v;
    EXPECT_EQ(p.bin_of(v), below);
  }
}

TEST(LevelTable, MarginalizationMatchesDirectTabulation) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    const std::size_t level = 1 + rng() % 4;
    std::vector<s3d::BlockKey> keys(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < level; ++l) keys[i].bins.push_back(static_cast<int>(rng() % 3));
      y[i] = static_cast<double>(rng() % 2);  // exact sums
    }
    const auto deep = s3d::tabulate(keys, y, level);
    EXPECT_EQ(deep.total_count(), n);
    EXPECT_EQ(deep.marginalize(), s3d::tabulate(keys, y, level - 1));
  }
}

}  // namespace
