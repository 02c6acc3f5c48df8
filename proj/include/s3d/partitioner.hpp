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
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "s3d/dataset.hpp"
#include "s3d/error.hpp"
#include "s3d/partition.hpp"

namespace s3d {

/// Gains closer than this (in R^2 units) count as tied; the smaller
/// threshold wins.
inline constexpr double kGainTieTolerance = 1e-12;

/// One-time sort of a feature column: distinct values and the rank of each
/// row's value among them.
struct SortedFeature {
  std::size_t feature_index = 0;
  std::vector<double> unique_values;
  std::vector<std::uint32_t> value_rank;  // per row
  std::vector<std::uint32_t> order;       // rows by ascending value, stable

  static SortedFeature build(std::span<const double> column,
                             std::size_t feature_index) {
    SortedFeature sf;
    sf.feature_index = feature_index;
    if (!sf.build_by_hashing(column)) sf.build_by_sorting(column);
    return sf;
  }

 private:
  // Linear in the row count when the feature has few distinct values:
  // hash to provisional ids, sort only the distinct values, then counting
  // sort rows by rank. Gives up once distinct values exceed n / 8.
  bool build_by_hashing(std::span<const double> column) {
    const std::size_t n = column.size();
    const std::size_t limit = std::max<std::size_t>(64, n / 8);
    std::unordered_map<double, std::uint32_t> id;
    std::vector<std::uint32_t> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [it, inserted] =
          id.try_emplace(column[i], static_cast<std::uint32_t>(id.size()));
      if (inserted && id.size() > limit) return false;
      raw[i] = it->second;
    }
    std::vector<double> values(id.size());
    for (const auto& [v, k] : id) values[k] = v;
    std::vector<std::uint32_t> by_value(values.size());
    std::iota(by_value.begin(), by_value.end(), 0u);
    std::sort(by_value.begin(), by_value.end(),
              [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
    std::vector<std::uint32_t> rank_of(values.size());
    unique_values.resize(values.size());
    for (std::size_t r = 0; r < by_value.size(); ++r) {
      rank_of[by_value[r]] = static_cast<std::uint32_t>(r);
      unique_values[r] = values[by_value[r]];
    }
    value_rank.resize(n);
    std::vector<std::uint32_t> start(values.size() + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      value_rank[i] = rank_of[raw[i]];
      ++start[value_rank[i] + 1];
    }
    for (std::size_t u = 0; u < values.size(); ++u) start[u + 1] += start[u];
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      order[start[value_rank[i]]++] = static_cast<std::uint32_t>(i);
    return true;
  }

  void build_by_sorting(std::span<const double> column) {
    const std::size_t n = column.size();
    unique_values.clear();
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return column[a] < column[b];
                     });
    value_rank.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const double v = column[order[pos]];
      if (unique_values.empty() || unique_values.back() != v)
        unique_values.push_back(v);
      value_rank[order[pos]] = static_cast<std::uint32_t>(unique_values.size() - 1);
    }
  }
};

/// Per-row membership in the blocks of the current decomposition. Blocks
/// carry dense ids (first-appearance order) and their full BlockKey.
struct BlockAssignment {
  std::vector<std::uint32_t> row_block;
  std::vector<BlockKey> keys;

  /// Level 0: every row in the single empty-key block.
  static BlockAssignment single(std::size_t num_rows) {
    BlockAssignment a;
    a.row_block.assign(num_rows, 0);
    a.keys.push_back(BlockKey{});
    return a;
  }

  std::size_t num_rows() const { return row_block.size(); }
  std::size_t num_blocks() const { return keys.size(); }
  std::size_t level() const { return keys.empty() ? 0 : keys.front().level(); }

  BlockKey key_of_row(std::size_t row) const { return keys[row_block[row]]; }

  /// Appends the bin of `column` under `partition` to every row's key.
  BlockAssignment refine(const FeaturePartition& partition,
                         std::span<const double> column) const {
    if (column.size() != row_block.size())
      throw Error("column length does not match assignment");
    BlockAssignment out;
    out.row_block.resize(row_block.size());
    std::unordered_map<std::uint64_t, std::uint32_t> ids;
    const std::uint64_t stride = partition.num_bins();
    for (std::size_t i = 0; i < row_block.size(); ++i) {
      const int bin = partition.bin_of(column[i]);
      const std::uint64_t code =
          static_cast<std::uint64_t>(row_block[i]) * stride +
          static_cast<std::uint64_t>(bin);
      auto [it, inserted] =
          ids.try_emplace(code, static_cast<std::uint32_t>(out.keys.size()));
      if (inserted) {
        BlockKey key = keys[row_block[i]];
        key.bins.push_back(bin);
        out.keys.push_back(std::move(key));
      }
      out.row_block[i] = it->second;
    }
    return out;
  }

  std::vector<BlockStats> block_stats(std::span<const double> target) const {
    std::vector<BlockStats> stats(keys.size());
    for (std::size_t i = 0; i < row_block.size(); ++i) {
      stats[row_block[i]].count += 1;
      stats[row_block[i]].target_sum += target[i];
    }
    return stats;
  }

  LevelTable table(std::span<const double> target) const {
    const auto stats = block_stats(target);
    LevelTable t;
    t.level = level();
    for (std::size_t b = 0; b < keys.size(); ++b) t.entries[keys[b]] += stats[b];
    return t;
  }
};

/// Per-block cumulative statistics of one feature, precomputed in O(N) so
/// that split search depends only on the number of distinct values.
///
/// Storage is sparse: one cell per (distinct value, block) pair that occurs,
/// ordered by value. Each cell also carries the running totals of its block
/// up to and including its value, i.e. N_{p|X<=s} and sum y_{p|X<=s}.
struct SplitScan {
  struct Cell {
    std::uint32_t value = 0;  // rank into unique_values
    std::uint32_t block = 0;
    std::uint64_t count = 0;
    std::uint64_t cum_count = 0;
    double sum = 0.0;
    double cum_sum = 0.0;
  };

  std::size_t feature_index = 0;
  std::vector<double> unique_values;
  std::vector<Cell> cells;
  std::vector<std::size_t> value_start;  // cells of value v: [start[v], start[v+1])
  std::vector<BlockStats> block_totals;
  std::vector<std::size_t> block_start;  // cells of block p via block_cells
  std::vector<std::uint32_t> block_cells;

  std::size_t num_blocks() const { return block_totals.size(); }
  std::size_t num_candidates() const { return unique_values.size(); }

  /// Count and target sum of block `p` over rows with feature value <= v.
  BlockStats cumulative(std::size_t p, double v) const {
    const auto rank = static_cast<std::uint32_t>(
        std::upper_bound(unique_values.begin(), unique_values.end(), v) -
        unique_values.begin());
    const auto first = block_cells.begin() + static_cast<std::ptrdiff_t>(block_start[p]);
    const auto last = block_cells.begin() + static_cast<std::ptrdiff_t>(block_start[p + 1]);
    // Last cell of the block whose value rank is below `rank`.
    const auto it = std::partition_point(first, last, [&](std::uint32_t c) {
      return cells[c].value < rank;
    });
    if (it == first) return {};
    const Cell& cell = cells[*(it - 1)];
    return BlockStats{cell.cum_count, cell.cum_sum};
  }
};

inline SplitScan build_scan(const SortedFeature& feature,
                            std::span<const std::uint32_t> row_block,
                            std::size_t num_blocks,
                            std::span<const double> target) {
  const std::size_t n = feature.order.size();
  if (row_block.size() != n || target.size() != n)
    throw Error("build_scan: row count mismatch");
  SplitScan scan;
  scan.feature_index = feature.feature_index;
  scan.unique_values = feature.unique_values;
  const std::size_t u = feature.unique_values.size();
  scan.value_start.resize(u + 1);
  scan.cells.reserve(std::min(n, u * num_blocks));

  std::vector<std::int64_t> open_cell(num_blocks, -1);
  std::vector<BlockStats> running(num_blocks);
  std::size_t pos = 0;
  for (std::uint32_t v = 0; v < u; ++v) {
    const std::size_t group_begin = scan.cells.size();
    scan.value_start[v] = group_begin;
    for (; pos < n && feature.value_rank[feature.order[pos]] == v; ++pos) {
      const std::uint32_t row = feature.order[pos];
      const std::uint32_t p = row_block[row];
      if (p >= num_blocks) throw Error("build_scan: row assigned to unknown block");
      if (open_cell[p] < 0) {
        open_cell[p] = static_cast<std::int64_t>(scan.cells.size());
        scan.cells.push_back(SplitScan::Cell{v, p, 0, 0, 0.0, 0.0});
      }
      auto& cell = scan.cells[static_cast<std::size_t>(open_cell[p])];
      cell.count += 1;
      cell.sum += target[row];
    }
    for (std::size_t c = group_begin; c < scan.cells.size(); ++c) {
      auto& cell = scan.cells[c];
      running[cell.block].count += cell.count;
      running[cell.block].target_sum += cell.sum;
      cell.cum_count = running[cell.block].count;
      cell.cum_sum = running[cell.block].target_sum;
      open_cell[cell.block] = -1;
    }
  }
  scan.value_start[u] = scan.cells.size();
  scan.block_totals = std::move(running);

  // Counting sort of cell indices by block; value order is kept within a block.
  scan.block_start.assign(num_blocks + 1, 0);
  for (const auto& cell : scan.cells) ++scan.block_start[cell.block + 1];
  std::partial_sum(scan.block_start.begin(), scan.block_start.end(),
                   scan.block_start.begin());
  scan.block_cells.resize(scan.cells.size());
  std::vector<std::size_t> fill(scan.block_start.begin(), scan.block_start.end() - 1);
  for (std::size_t c = 0; c < scan.cells.size(); ++c)
    scan.block_cells[fill[scan.cells[c].block]++] = static_cast<std::uint32_t>(c);
  return scan;
}

inline SplitScan build_scan(const Dataset& data, std::size_t feature,
                            const BlockAssignment& blocks) {
  if (feature >= data.num_features())
    throw Error("feature index " + std::to_string(feature) + " out of range");
  if (blocks.num_rows() != data.num_rows())
    throw Error("build_scan: assignment does not cover the dataset");
  const auto sorted = SortedFeature::build(data.column(feature), feature);
  return build_scan(sorted, blocks.row_block, blocks.num_blocks(), data.target());
}

namespace detail {

inline double block_term(std::uint64_t count, double sum) {
  return count == 0 ? 0.0 : sum * sum / static_cast<double>(count);
}

inline double clamp_gain(double gain) { return gain > 0.0 ? gain : 0.0; }

}  // namespace detail

/// Delta R^2 of splitting at candidate `s` (predicate X <= s). `current` holds
/// thresholds already placed on this feature; only the bin containing `s` is
/// affected. Evaluated straight from the cumulative arrays.
inline double gain_at(const SplitScan& scan, double s, double sst_total,
                      std::span<const double> current = {}) {
  if (!(sst_total > 0.0)) throw Error("gain_at requires SST > 0");
  if (!std::binary_search(scan.unique_values.begin(), scan.unique_values.end(), s))
    throw UsageError("gain_at: threshold is not an observed value of the feature");
  const auto hi_it = std::lower_bound(current.begin(), current.end(), s);
  if (hi_it != current.end() && *hi_it == s) return 0.0;  // already a split
  const bool has_lo = hi_it != current.begin();
  const bool has_hi = hi_it != current.end();
  const double lo = has_lo ? *(hi_it - 1) : 0.0;
  const double hi = has_hi ? *hi_it : 0.0;

  double total = 0.0;
  for (std::size_t p = 0; p < scan.num_blocks(); ++p) {
    const BlockStats below_lo = has_lo ? scan.cumulative(p, lo) : BlockStats{};
    const BlockStats upto_hi = has_hi ? scan.cumulative(p, hi) : scan.block_totals[p];
    const BlockStats upto_s = scan.cumulative(p, s);
    const std::uint64_t n_bin = upto_hi.count - below_lo.count;
    if (n_bin == 0) continue;
    const double s_bin = upto_hi.target_sum - below_lo.target_sum;
    const std::uint64_t n_left = upto_s.count - below_lo.count;
    const double s_left = upto_s.target_sum - below_lo.target_sum;
    total += detail::block_term(n_left, s_left) +
             detail::block_term(n_bin - n_left, s_bin - s_left) -
             detail::block_term(n_bin, s_bin);
  }
  return detail::clamp_gain(total / sst_total);
}

struct SplitStep {
  double threshold = 0.0;
  double gain = 0.0;
};

struct PartitionResult {
  FeaturePartition partition;
  double delta_r2 = 0.0;
  std::vector<SplitStep> split_sequence;  // in the order the splits were made
};

namespace detail {

// Best split of the bin covering value ranks [first, last], found with one
// left-to-right sweep. Scratch vectors are sized to the block count and left
// zeroed on return.
class BinSearcher {
 public:
  explicit BinSearcher(const SplitScan& scan)
      : scan_(scan),
        total_(scan.num_blocks()),
        left_(scan.num_blocks()) {}

  struct Best {
    std::int64_t rank = -1;  // split after this value rank; -1: none
    double gain = 0.0;
  };

  Best search(std::uint32_t first, std::uint32_t last, double sst_total) {
    Best best;
    if (first >= last) return best;
    const auto& cells = scan_.cells;
    const std::size_t begin = scan_.value_start[first];
    const std::size_t end = scan_.value_start[last + 1];
    double base = 0.0;
    for (std::size_t c = begin; c < end; ++c) {
      auto& t = total_[cells[c].block];
      if (t.count == 0) touched_.push_back(cells[c].block);
      t.count += cells[c].count;
      t.target_sum += cells[c].sum;
    }
    for (std::uint32_t p : touched_) base += block_term(total_[p].count, total_[p].target_sum);

    // running = sum over blocks of term(left) + term(right); starts at base.
    double running = base;
    for (std::uint32_t v = first; v < last; ++v) {
      for (std::size_t c = scan_.value_start[v]; c < scan_.value_start[v + 1]; ++c) {
        const std::uint32_t p = cells[c].block;
        auto& l = left_[p];
        const auto& t = total_[p];
        running -= block_term(l.count, l.target_sum) +
                   block_term(t.count - l.count, t.target_sum - l.target_sum);
        l.count += cells[c].count;
        l.target_sum += cells[c].sum;
        running += block_term(l.count, l.target_sum) +
                   block_term(t.count - l.count, t.target_sum - l.target_sum);
      }
      const double gain = (running - base) / sst_total;
      if (best.rank < 0 || gain > best.gain + kGainTieTolerance) {
        best.rank = v;
        best.gain = gain;
      }
    }
    best.gain = exact_gain(first, static_cast<std::uint32_t>(best.rank), sst_total);
    reset();
    return best;
  }

 private:
  // Direct evaluation at one split, free of the sweep's accumulated rounding.
  double exact_gain(std::uint32_t first, std::uint32_t split, double sst_total) {
    for (std::uint32_t p : touched_) left_[p] = BlockStats{};
    const auto& cells = scan_.cells;
    for (std::size_t c = scan_.value_start[first]; c < scan_.value_start[split + 1]; ++c) {
      left_[cells[c].block].count += cells[c].count;
      left_[cells[c].block].target_sum += cells[c].sum;
    }
    double total = 0.0;
    for (std::uint32_t p : touched_) {
      const auto& l = left_[p];
      const auto& t = total_[p];
      total += block_term(l.count, l.target_sum) +
               block_term(t.count - l.count, t.target_sum - l.target_sum) -
               block_term(t.count, t.target_sum);
    }
    return clamp_gain(total / sst_total);
  }

  void reset() {
    for (std::uint32_t p : touched_) {
      total_[p] = BlockStats{};
      left_[p] = BlockStats{};
    }
    touched_.clear();
  }

  const SplitScan& scan_;
  std::vector<BlockStats> total_;
  std::vector<BlockStats> left_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace detail

/// Greedy partition of one feature conditioned on the blocks in `scan`.
///
/// Repeatedly places the split with the largest Delta R^2 over all current
/// bins while gain / (1 - r2_so_far) >= lambda. Thresholds are observed
/// values (predicate X <= s); ties go to the smaller threshold.
inline PartitionResult fit_partition(const SplitScan& scan, double lambda,
                                     double r2_so_far, double sst_total) {
  if (!(sst_total > 0.0)) throw Error("fit_partition requires SST > 0");
  if (!(lambda > 0.0)) throw Error("fit_partition requires lambda > 0");
  if (!(r2_so_far >= 0.0 && r2_so_far < 1.0))
    throw Error("fit_partition requires 0 <= r2_so_far < 1");

  PartitionResult result;
  result.partition.feature_index = scan.feature_index;
  const std::size_t u = scan.num_candidates();
  if (u < 2) return result;

  const double residual = 1.0 - r2_so_far;
  struct Bin {
    std::uint32_t first, last;
    detail::BinSearcher::Best best;
  };
  detail::BinSearcher searcher(scan);
  std::vector<Bin> bins;  // ascending value order
  bins.push_back({0, static_cast<std::uint32_t>(u - 1), {}});
  bins[0].best = searcher.search(0, bins[0].last, sst_total);

  while (true) {
    std::size_t pick = bins.size();
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (bins[b].best.rank < 0) continue;
      if (pick == bins.size() ||
          bins[b].best.gain > bins[pick].best.gain + kGainTieTolerance)
        pick = b;
    }
    if (pick == bins.size()) break;
    const auto best = bins[pick].best;
    if (best.gain / residual < lambda) break;

    const auto split = static_cast<std::uint32_t>(best.rank);
    result.split_sequence.push_back({scan.unique_values[split], best.gain});
    result.delta_r2 += best.gain;

    Bin right{split + 1, bins[pick].last, {}};
    bins[pick].last = split;
    bins[pick].best = searcher.search(bins[pick].first, split, sst_total);
    right.best = searcher.search(right.first, right.last, sst_total);
    bins.insert(bins.begin() + static_cast<std::ptrdiff_t>(pick) + 1, right);
  }

  for (const auto& step : result.split_sequence)
    result.partition.thresholds.push_back(step.threshold);
  std::sort(result.partition.thresholds.begin(), result.partition.thresholds.end());
  return result;
}

inline PartitionResult fit_partition(const Dataset& data, std::size_t feature,
                                     const BlockAssignment& blocks, double lambda,
                                     double r2_so_far, double sst_total) {
  return fit_partition(build_scan(data, feature, blocks), lambda, r2_so_far,
                       sst_total);
}

}  // namespace s3d
