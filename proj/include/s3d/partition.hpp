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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "s3d/error.hpp"

namespace s3d {

/// Ordered split thresholds of one feature. n thresholds define n + 1 bins,
/// closed on the right: bin 0 = (-inf, s_1], bin j = (s_j, s_{j+1}],
/// bin n = (s_n, +inf).
struct FeaturePartition {
  std::size_t feature_index = 0;
  std::vector<double> thresholds;

  std::size_t num_bins() const { return thresholds.size() + 1; }

  /// Number of thresholds strictly below `value`; total over the reals.
  int bin_of(double value) const {
    return static_cast<int>(
        std::lower_bound(thresholds.begin(), thresholds.end(), value) -
        thresholds.begin());
  }

  void check() const {
    for (std::size_t i = 1; i < thresholds.size(); ++i)
      if (!(thresholds[i - 1] < thresholds[i]))
        throw Error("partition thresholds must be strictly increasing");
  }

  friend bool operator==(const FeaturePartition&,
                         const FeaturePartition&) = default;
};

/// One cell of the product of selected-feature partitions: a bin index per
/// selected feature, in selection order.
struct BlockKey {
  std::vector<int> bins;

  std::size_t level() const { return bins.size(); }
  BlockKey prefix(std::size_t length) const {
    return BlockKey{{bins.begin(), bins.begin() + static_cast<std::ptrdiff_t>(
                                                      std::min(length, bins.size()))}};
  }
  std::string to_string(char sep = ':') const {
    std::string out;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (i) out.push_back(sep);
      out += std::to_string(bins[i]);
    }
    return out;
  }

  friend auto operator<=>(const BlockKey&, const BlockKey&) = default;
  friend bool operator==(const BlockKey&, const BlockKey&) = default;
};

/// Count and target sum of a block. Means are derived, never stored.
struct BlockStats {
  std::uint64_t count = 0;
  double target_sum = 0.0;

  bool empty() const { return count == 0; }
  double mean() const { return target_sum / static_cast<double>(count); }

  BlockStats& operator+=(const BlockStats& other) {
    count += other.count;
    target_sum += other.target_sum;
    return *this;
  }
  friend bool operator==(const BlockStats&, const BlockStats&) = default;
};

/// Block statistics at one selection level. Only occupied blocks are stored;
/// a missing key means an empty block.
struct LevelTable {
  std::size_t level = 0;
  std::map<BlockKey, BlockStats> entries;

  const BlockStats* find(const BlockKey& key) const {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  }

  std::uint64_t total_count() const {
    std::uint64_t n = 0;
    for (const auto& [key, stats] : entries) n += stats.count;
    return n;
  }

  /// Aggregation over the last bin index, giving the level - 1 table.
  LevelTable marginalize() const {
    if (level == 0) throw Error("cannot marginalize a level-0 table");
    LevelTable out;
    out.level = level - 1;
    for (const auto& [key, stats] : entries)
      out.entries[key.prefix(level - 1)] += stats;
    return out;
  }

  friend bool operator==(const LevelTable&, const LevelTable&) = default;
};

/// Explained sum of squares sum_p N_p (ybar_p - ybar)^2 of a block table.
inline double explained_ss(const LevelTable& table, double global_mean) {
  double total = 0.0;
  for (const auto& [key, stats] : table.entries) {
    if (stats.empty()) continue;
    const double d = stats.mean() - global_mean;
    total += static_cast<double>(stats.count) * d * d;
  }
  return total;
}

/// R^2 of the decomposition described by `table`.
inline double r_squared(const LevelTable& table, double global_mean,
                        double sst_total) {
  if (!(sst_total > 0.0)) throw Error("r_squared requires SST > 0");
  return explained_ss(table, global_mean) / sst_total;
}

/// Builds a level table directly from per-row keys and targets.
inline LevelTable tabulate(std::span<const BlockKey> keys,
                           std::span<const double> target, std::size_t level) {
  if (keys.size() != target.size())
    throw Error("key count does not match target length");
  LevelTable table;
  table.level = level;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto& s = table.entries[keys[i].prefix(level)];
    s.count += 1;
    s.target_sum += target[i];
  }
  return table;
}

}  // namespace s3d
