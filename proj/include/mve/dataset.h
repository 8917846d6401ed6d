// Copyright 2026 The mve Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mve/linalg.h"

namespace mve {

struct Dataset {
  std::string name;
  Matrix features;  // m x d
  Matrix labels;    // m x n
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  int label_dim() const { return static_cast<int>(labels.cols()); }

  /// Throws std::invalid_argument if row counts differ or any entry is non-finite.
  void validate() const;

  /// Rows picked by `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

// Columns addressed either by header name or by zero-based position.
struct ColumnSelector {
  std::vector<std::string> names;
  std::vector<std::size_t> indices;

  bool empty() const { return names.empty() && indices.empty(); }
  /// "Y1,Y2" selects by name; "8,9" (all integers) selects by position.
  static ColumnSelector parse(std::string_view list);
};

struct CsvOptions {
  char delimiter = ',';
  ColumnSelector labels;
  ColumnSelector ignored;  // dropped entirely (ids, timestamps)
};

struct CsvLoad {
  Dataset dataset;
  std::size_t dropped_rows = 0;
};

/// Parses a delimited file with a header row. Every non-label, non-ignored
/// column becomes a feature. Rows with a missing or non-numeric cell are
/// dropped and counted. Throws std::runtime_error for a missing file, unknown
/// columns, or zero usable rows.
CsvLoad load_csv(const std::filesystem::path& path, const CsvOptions& options);

/// Per-column (x - mean) / std, with std floored at 1e-12. Fitted on one set
/// of rows, applied to any other.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(Vector mean, Vector scale);

  static Standardizer fit(const Matrix& rows);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Vector& scale() const { return scale_; }

  Matrix apply(const Matrix& rows) const;
  RowMatrix apply_rows(const Matrix& rows) const;
  Vector apply(const Vector& x) const;

 private:
  Vector mean_;
  Vector scale_;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMinSplitRows = 12;

/// Seeded uniform permutation, then contiguous 81/9/10 assignment with
/// floor(0.81 m) train rows, floor(0.09 m) validation rows and the remainder
/// for test. Throws std::invalid_argument if m < 12.
Split split_dataset(std::size_t rows, std::uint64_t seed);
inline Split split_dataset(const Dataset& ds, std::uint64_t seed) {
  return split_dataset(ds.rows(), seed);
}

/// FNV-1a over the three index lists; identical splits hash identically.
std::uint64_t split_checksum(const Split& split);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = 14695981039346656037ULL);

// Columnar text cache; see docs/formats.md.
void save_dataset_cache(const Dataset& ds, const std::filesystem::path& path);
/// Throws std::runtime_error on a malformed file or checksum mismatch.
Dataset load_dataset_cache(const std::filesystem::path& path);

}  // namespace mve
