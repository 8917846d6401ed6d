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
#include <string>
#include <vector>

#include "mve/center_model.h"
#include "mve/dataset.h"
#include "mve/estimators.h"
#include "mve/gaussian.h"
#include "mve/lmve_fit.h"

namespace mve {

// Benchmark datasets with their expected (rows, features, labels).
struct RegisteredDataset {
  std::string name;
  std::string file;
  std::string labels;   // comma list for ColumnSelector::parse
  std::string ignored;  // columns dropped before loading
  std::size_t rows;
  int features;
  int outputs;
};

const std::vector<RegisteredDataset>& dataset_registry();
const RegisteredDataset* find_registered(std::string_view name);

struct ExperimentConfig {
  std::string dataset = "synthetic";  // registry name, CSV path, or "synthetic"
  std::string labels;                 // overrides the registry for CSV paths
  std::string ignored;
  char delimiter = ',';
  std::filesystem::path data_dir = "data";
  std::vector<ShapeKind> methods{ShapeKind::kGe, ShapeKind::kNle, ShapeKind::kLmve};
  double eta = 0.9;
  std::size_t repetitions = 50;
  std::uint64_t base_seed = 0;
  std::filesystem::path output;  // empty: no files written
  bool full = false;             // 100k + 100k LMVE steps instead of the desk 10k + 10k
  std::size_t jobs = 0;          // 0: hardware concurrency
  bool save_models = false;

  CenterKind center = CenterKind::kLinearRidge;
  double ridge_scale = 1e-3;
  std::size_t knn_k = 10;
  double nle_fraction = 0.05;
  double nle_mix = 0.95;
  TrainConfig train = TrainConfig::desk();

  // Synthetic jointly Gaussian data.
  int synthetic_d = 3;
  int synthetic_n = 2;
  std::size_t synthetic_m = 5000;
  std::uint64_t synthetic_seed = 7;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
  /// Flat key = value text, one line per field, in a fixed order.
  std::string to_text() const;
};

struct MethodRecord {
  std::string method;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double coverage = 0.0;
  double mean_volume = 0.0;
  double alpha_q = 0.0;
  std::optional<double> lambda;  // LMVE only
  std::size_t train_size = 0;
  std::size_t calib_size = 0;
  std::size_t test_size = 0;
  std::uint64_t split_checksum = 0;
  std::uint64_t center_checksum = 0;
  double wall_time = 0.0;  // seconds; excluded from the structured records
};

struct MethodAggregate {
  std::string method;
  std::size_t count = 0;
  std::size_t failures = 0;
  double coverage_mean = 0.0;
  double coverage_std = 0.0;
  double volume_mean = 0.0;
  double volume_std = 0.0;
  bool single_record = false;  // std reported as 0
};

struct ExperimentReport {
  std::string dataset;
  double eta = 0.9;
  std::vector<MethodRecord> records;  // seed-major, methods in config order
  std::vector<MethodAggregate> aggregates;
  // Present for synthetic data: V_n kappa^(n/2) det(C_{y|x})^(1/2).
  std::optional<double> optimal_volume;

  std::size_t failed_seeds() const;
};

/// Sample mean and sample standard deviation (denominator count - 1) of the
/// successful records per method, in first-appearance order. Throws
/// std::invalid_argument on empty input.
std::vector<MethodAggregate> aggregate_report(const std::vector<MethodRecord>& records);

/// Loads the configured dataset (plus the generating law for synthetic data).
struct LoadedData {
  Dataset dataset;
  std::optional<JointGaussianSpec> law;
};
LoadedData load_experiment_data(const ExperimentConfig& config);

/// Runs every repetition; failures are recorded, never thrown. When
/// config.output is set the report files are written there.
ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config, const LoadedData& data);

// Report files (see docs/formats.md):
//   records.jsonl     one JSON object per (seed, method), no timing fields
//   aggregates.jsonl  one JSON object per method
//   summary.txt       aligned table
//   timing.jsonl      wall time per record
std::string records_jsonl(const ExperimentReport& report);
std::string aggregates_jsonl(const ExperimentReport& report);
std::string render_table(const ExperimentReport& report);
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Reads records.jsonl and aggregates.jsonl back; throws std::runtime_error
/// when the stored aggregates disagree with ones recomputed from the records.
ExperimentReport read_report(const std::filesystem::path& dir);

}  // namespace mve
