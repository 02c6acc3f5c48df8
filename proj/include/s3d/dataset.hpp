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

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "s3d/error.hpp"

namespace s3d {

enum class TaskKind { binary_classification, regression };

inline std::string to_string(TaskKind task) {
  return task == TaskKind::binary_classification ? "binary_classification"
                                                 : "regression";
}

inline TaskKind task_from_string(std::string_view text) {
  if (text == "binary_classification" || text == "class" ||
      text == "classification")
    return TaskKind::binary_classification;
  if (text == "regression" || text == "reg") return TaskKind::regression;
  throw UsageError("unknown task kind '" + std::string(text) + "'");
}

/// Column-oriented numeric feature matrix with a target vector.
///
/// Immutable once constructed. The constructor enforces every invariant:
/// equal column lengths, N >= 1, finite values, unique feature names and a
/// {0, 1} target for classification.
class Dataset {
 public:
  Dataset(std::vector<std::string> feature_names,
          std::vector<std::vector<double>> columns, std::vector<double> target,
          TaskKind task)
      : feature_names_(std::move(feature_names)),
        columns_(std::move(columns)),
        target_(std::move(target)),
        task_(task) {
    validate();
  }

  std::size_t num_rows() const { return target_.size(); }
  std::size_t num_features() const { return columns_.size(); }
  TaskKind task() const { return task_; }

  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const std::string& feature_name(std::size_t j) const {
    return feature_names_.at(j);
  }
  std::span<const double> column(std::size_t j) const {
    return columns_.at(j);
  }
  const std::vector<std::vector<double>>& columns() const { return columns_; }
  std::span<const double> target() const { return target_; }

  /// Values of every feature for one row, in feature order.
  std::vector<double> row(std::size_t i) const {
    std::vector<double> out(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) out[j] = columns_[j][i];
    return out;
  }

  /// Rows selected by `indices`, in the given order.
  Dataset subset(std::span<const std::size_t> indices) const {
    std::vector<std::vector<double>> cols(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      cols[j].reserve(indices.size());
      for (std::size_t i : indices) cols[j].push_back(columns_[j].at(i));
    }
    std::vector<double> y;
    y.reserve(indices.size());
    for (std::size_t i : indices) y.push_back(target_.at(i));
    return Dataset(feature_names_, std::move(cols), std::move(y), task_);
  }

  /// Same rows with each feature column replaced by `transform(j, column)`.
  template <class Transform>
  Dataset with_columns(Transform&& transform) const {
    std::vector<std::vector<double>> cols(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j)
      cols[j] = transform(j, columns_[j]);
    return Dataset(feature_names_, std::move(cols), target_, task_);
  }

 private:
  void validate() const {
    const std::size_t n = target_.size();
    if (n == 0) throw Error("empty data: dataset has no rows");
    if (feature_names_.size() != columns_.size())
      throw Error("feature name count does not match column count");
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names_)
      if (!seen.insert(name).second)
        throw Error("duplicate feature name '" + name + "'");
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (columns_[j].size() != n)
        throw Error("column '" + feature_names_[j] + "' has " +
                    std::to_string(columns_[j].size()) + " values, expected " +
                    std::to_string(n));
      for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(columns_[j][i]))
          throw Error("non-finite value in column '" + feature_names_[j] +
                      "' at row " + std::to_string(i + 1));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(target_[i]))
        throw Error("non-finite target value at row " + std::to_string(i + 1));
      if (task_ == TaskKind::binary_classification && target_[i] != 0.0 &&
          target_[i] != 1.0)
        throw Error("non-binary target: value " + std::to_string(target_[i]) +
                    " at row " + std::to_string(i + 1));
    }
  }

  std::vector<std::string> feature_names_;
  std::vector<std::vector<double>> columns_;
  std::vector<double> target_;
  TaskKind task_;
};

/// Total sum of squares of the target, two-pass form.
inline double sst(std::span<const double> y) {
  if (y.empty()) return 0.0;
  const double mean =
      std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double total = 0.0;
  for (double v : y) total += (v - mean) * (v - mean);
  return total;
}

inline double sst(const Dataset& data) { return sst(data.target()); }

// ---------------------------------------------------------------------------
// CSV

/// Raw header + numeric columns, before a target is chosen.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::size_t num_rows = 0;

  std::ptrdiff_t find(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<std::ptrdiff_t>(j);
    return -1;
  }
};

namespace detail {

// Splits one record, honouring RFC-4180 double-quote escaping. Returns false
// when a quoted field continues past the end of `line`.
inline bool split_csv_record(std::string_view line,
                             std::vector<std::string>& fields) {
  fields.clear();
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return !quoted;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in, const std::string& source = "<csv>") {
  CsvTable table;
  std::string line;
  std::vector<std::string> fields;
  std::size_t line_no = 0;

  auto next_record = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    std::string record = line;
    while (!detail::split_csv_record(record, fields)) {
      if (!std::getline(in, line))
        throw Error(source + ": unterminated quoted field at line " +
                    std::to_string(line_no));
      ++line_no;
      record += '\n';
      record += line;
    }
    return true;
  };

  while (true) {
    if (!next_record()) throw Error(source + ": empty data: no header row");
    if (!detail::trim(line).empty()) break;
  }
  if (line_no == 1 && !fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0)
    fields[0].erase(0, 3);
  for (auto& f : fields) table.header.emplace_back(detail::trim(f));
  table.columns.resize(table.header.size());

  while (next_record()) {
    if (detail::trim(line).empty()) continue;
    if (fields.size() != table.header.size())
      throw Error(source + ": row " + std::to_string(table.num_rows + 1) +
                  " (line " + std::to_string(line_no) + ") has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(table.header.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string_view cell = detail::trim(fields[j]);
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (cell.empty() || ec != std::errc() || ptr != last)
        throw Error(source + ": non-numeric cell '" + std::string(cell) +
                    "' at row " + std::to_string(table.num_rows + 1) +
                    ", column '" + table.header[j] + "'");
      if (!std::isfinite(value))
        throw Error(source + ": NaN or infinite value at row " +
                    std::to_string(table.num_rows + 1) + ", column '" +
                    table.header[j] + "'");
      table.columns[j].push_back(value);
    }
    ++table.num_rows;
  }
  if (table.num_rows == 0) throw Error(source + ": empty data: no rows");
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open data file '" + path + "'");
  return parse_csv(in, path);
}

/// Turns a parsed table into a Dataset, removing the target column from the
/// features. Row order is preserved.
inline Dataset to_dataset(CsvTable table, std::string_view target_name,
                          TaskKind task) {
  const std::ptrdiff_t t = table.find(target_name);
  if (t < 0)
    throw Error("target column '" + std::string(target_name) + "' not found");
  std::vector<double> target = std::move(table.columns[t]);
  table.header.erase(table.header.begin() + t);
  table.columns.erase(table.columns.begin() + t);
  return Dataset(std::move(table.header), std::move(table.columns),
                 std::move(target), task);
}

inline Dataset ingest_csv(const std::string& path, std::string_view target_name,
                          TaskKind task) {
  return to_dataset(read_csv(path), target_name, task);
}

/// Writes a dataset as CSV with the target as the last column.
inline void write_csv(std::ostream& out, const Dataset& data,
                      std::string_view target_name = "y") {
  for (const auto& name : data.feature_names()) out << name << ',';
  out << target_name << '\n';
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
  };
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    for (std::size_t j = 0; j < data.num_features(); ++j) {
      put(data.column(j)[i]);
      out << ',';
    }
    put(data.target()[i]);
    out << '\n';
  }
}

}  // namespace s3d
