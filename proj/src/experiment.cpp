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

#include "mve/experiment.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

namespace mve {
namespace {

std::string join_methods(const std::vector<ShapeKind>& methods) {
  std::string out;
  for (auto m : methods) {
    if (!out.empty()) out += ',';
    std::string name(shape_kind_name(m));
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out += name;
  }
  return out;
}

std::string format_real(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::vector<MethodRecord> run_seed(const ExperimentConfig& config, const LoadedData& data,
                                   std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  std::vector<MethodRecord> records;
  for (auto method : config.methods) {
    MethodRecord r;
    r.method = std::string(shape_kind_name(method));
    r.seed = seed;
    records.push_back(std::move(r));
  }
  auto fail_all = [&](const std::string& why) {
    for (auto& r : records) {
      r.ok = false;
      r.error = why;
    }
    return records;
  };

  const Dataset& ds = data.dataset;
  Split split;
  try {
    split = split_dataset(ds, seed);
  } catch (const std::exception& e) {
    return fail_all(e.what());
  }
  const Dataset train = ds.subset(split.train);
  const Dataset val = ds.subset(split.validation);
  const Dataset test = ds.subset(split.test);
  const std::uint64_t split_hash = split_checksum(split);

  std::shared_ptr<const CenterModel> center;
  std::optional<ConditionalGaussian> cond;
  if (data.law) cond = condition(*data.law);
  try {
    CenterConfig cc;
    cc.kind = config.center;
    cc.ridge_scale = config.ridge_scale;
    cc.knn_k = config.knn_k;
    cc.oracle = cond;
    center = std::make_shared<const CenterModel>(
        CenterModel::fit(train.features, train.labels, cc));
  } catch (const std::exception& e) {
    return fail_all(std::string("center model: ") + e.what());
  }
  const std::string center_text = center->to_json();
  const std::uint64_t center_hash = fnv1a(center_text);
  const Matrix residuals = center->residuals(train.features, train.labels);

  std::optional<ShapeModel> nle;
  auto get_nle = [&]() -> const ShapeModel& {
    if (!nle) nle = fit_nle(train.features, residuals, config.nle_fraction, config.nle_mix);
    return *nle;
  };

  if (config.save_models && !config.output.empty()) {
    const auto dir = config.output / "models";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / ("seed_" + std::to_string(seed) + "_center.json")) << center_text << '\n';
  }

  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    MethodRecord& r = records[i];
    r.train_size = split.train.size();
    r.calib_size = split.validation.size();
    r.test_size = split.test.size();
    r.split_checksum = split_hash;
    r.center_checksum = center_hash;
    const auto start = Clock::now();
    try {
      std::optional<ShapeModel> shape;
      switch (config.methods[i]) {
        case ShapeKind::kGe:
          shape = fit_ge(residuals);
          break;
        case ShapeKind::kNle:
          shape = get_nle();
          break;
        case ShapeKind::kOracle:
          if (!cond) throw std::invalid_argument("oracle method needs synthetic Gaussian data");
          shape = ShapeModel(OracleShape{cond->cond_cov});
          break;
        case ShapeKind::kLmve: {
          TrainConfig tc = config.train;
          tc.eta = config.eta;
          tc.seed = seed;
          if (config.full) {
            tc.iters_init = 100000;
            tc.iters_train = 100000;
          }
          LmveFit fit = fit_lmve(train.features, train.labels, center, get_nle(), tc);
          r.lambda = fit.lambda;
          if (config.save_models && !config.output.empty()) {
            save_checkpoint(std::get<LmveShape>(fit.shape.state()),
                            config.output / "models" / ("seed_" + std::to_string(seed) + "_lmve.ckpt"));
          }
          shape = std::move(fit.shape);
          break;
        }
      }
      const CalibratedModel calibrated =
          conformal_calibrate(std::move(*shape), center, val.features, val.labels, config.eta);
      const Evaluation ev = evaluate(calibrated, test.features, test.labels);
      r.ok = true;
      r.coverage = ev.coverage;
      r.mean_volume = ev.mean_volume;
      r.alpha_q = calibrated.alpha_q;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    r.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  }
  return records;
}

}  // namespace

const std::vector<RegisteredDataset>& dataset_registry() {
  static const std::vector<RegisteredDataset> kRegistry{
      {"ble_rssi", "ble_rssi.csv", "x,y", "", 1420, 13, 2},
      {"enb", "enb.csv", "Y1,Y2", "", 768, 8, 2},
      {"indoor_localization", "indoor_localization.csv", "LONGITUDE,LATITUDE", "", 19937, 519, 2},
      {"residential_building", "residential_building.csv", "V9,V10", "", 372, 103, 2},
  };
  return kRegistry;
}

const RegisteredDataset* find_registered(std::string_view name) {
  for (const auto& entry : dataset_registry()) {
    if (entry.name == name) return &entry;
  }
  return nullptr;
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (!(eta > 0.0) || !(eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
  if (methods.empty()) throw std::invalid_argument("no methods selected");
  if (!(nle_fraction > 0.0) || !(nle_fraction <= 1.0)) {
    throw std::invalid_argument("nle_fraction must lie in (0, 1]");
  }
  if (!(nle_mix >= 0.0) || !(nle_mix <= 1.0)) throw std::invalid_argument("nle_mix must lie in [0, 1]");
  if (dataset == "synthetic" && (synthetic_d < 1 || synthetic_n < 1 || synthetic_m < kMinSplitRows)) {
    throw std::invalid_argument("synthetic dataset needs d, n >= 1 and m >= 12");
  }
  train.validate();
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out << "dataset = " << dataset << '\n';
  out << "labels = " << labels << '\n';
  out << "methods = " << join_methods(methods) << '\n';
  out << "eta = " << format_real(eta) << '\n';
  out << "reps = " << repetitions << '\n';
  out << "seed = " << base_seed << '\n';
  out << "full = " << (full ? "true" : "false") << '\n';
  out << "center = " << center_kind_name(center) << '\n';
  out << "ridge-scale = " << format_real(ridge_scale) << '\n';
  out << "knn-k = " << knn_k << '\n';
  out << "nle-fraction = " << format_real(nle_fraction) << '\n';
  out << "nle-mix = " << format_real(nle_mix) << '\n';
  out << "epsilon = " << format_real(train.epsilon) << '\n';
  out << "lambda = " << (train.lambda ? format_real(*train.lambda) : std::string("auto")) << '\n';
  out << "lambda-exponent = " << (train.lambda_exponent == LambdaExponent::kDet ? "det" : "sqrt-det")
      << '\n';
  out << "dropout = " << format_real(train.dropout_rate) << '\n';
  out << "iters-init = " << (full ? 100000 : train.iters_init) << '\n';
  out << "iters-train = " << (full ? 100000 : train.iters_train) << '\n';
  out << "lr-init = " << format_real(train.lr_init) << '\n';
  out << "lr-train = " << format_real(train.lr_train) << '\n';
  out << "batch-size = " << train.batch_size << '\n';
  if (dataset == "synthetic") {
    out << "synthetic-d = " << synthetic_d << '\n';
    out << "synthetic-n = " << synthetic_n << '\n';
    out << "synthetic-m = " << synthetic_m << '\n';
    out << "synthetic-seed = " << synthetic_seed << '\n';
  }
  return out.str();
}

std::size_t ExperimentReport::failed_seeds() const {
  std::vector<std::uint64_t> failed;
  for (const auto& r : records) {
    if (!r.ok && std::find(failed.begin(), failed.end(), r.seed) == failed.end()) {
      failed.push_back(r.seed);
    }
  }
  return failed.size();
}

std::vector<MethodAggregate> aggregate_report(const std::vector<MethodRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("aggregate_report: no records");
  }
  std::vector<MethodAggregate> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const MethodAggregate& a) { return a.method == r.method; });
    if (it == out.end()) {
      out.push_back(MethodAggregate{r.method});
    }
  }
  for (auto& agg : out) {
    std::vector<double> coverage;
    std::vector<double> volume;
    for (const auto& r : records) {
      if (r.method != agg.method) continue;
      if (!r.ok) {
        ++agg.failures;
        continue;
      }
      coverage.push_back(r.coverage);
      volume.push_back(r.mean_volume);
    }
    agg.count = coverage.size();
    if (agg.count == 0) continue;
    const auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
      double sum = 0.0;
      for (double x : v) sum += x;
      mean = sum / static_cast<double>(v.size());
      if (v.size() < 2) {
        sd = 0.0;
        return;
      }
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    mean_std(coverage, agg.coverage_mean, agg.coverage_std);
    mean_std(volume, agg.volume_mean, agg.volume_std);
    agg.single_record = agg.count == 1;
  }
  return out;
}

LoadedData load_experiment_data(const ExperimentConfig& config) {
  LoadedData data;
  if (config.dataset == "synthetic") {
    data.law = random_joint_gaussian(config.synthetic_d, config.synthetic_n, config.synthetic_seed);
    data.dataset = sample_joint(*data.law, config.synthetic_m, config.synthetic_seed + 1);
    data.dataset.name = "synthetic";
    return data;
  }
  CsvOptions options;
  options.delimiter = config.delimiter;
  std::filesystem::path path = config.dataset;
  const RegisteredDataset* entry = find_registered(config.dataset);
  if (entry != nullptr) {
    path = config.data_dir / entry->file;
    options.labels = ColumnSelector::parse(config.labels.empty() ? entry->labels : config.labels);
    options.ignored = ColumnSelector::parse(config.ignored.empty() ? entry->ignored : config.ignored);
  } else {
    if (config.labels.empty()) {
      throw std::invalid_argument("--labels is required for dataset " + config.dataset);
    }
    options.labels = ColumnSelector::parse(config.labels);
    options.ignored = ColumnSelector::parse(config.ignored);
  }
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("dataset file not found: " + path.string() +
                             " (see docs/datasets.md for preparation)");
  }
  data.dataset = load_csv(path, options).dataset;
  if (entry != nullptr) {
    data.dataset.name = entry->name;
    const auto& ds = data.dataset;
    if (ds.rows() != entry->rows || ds.feature_dim() != entry->features ||
        ds.label_dim() != entry->outputs) {
      std::clog << "warning: " << entry->name << " has shape (" << ds.rows() << ", "
                << ds.feature_dim() << ", " << ds.label_dim() << "), expected (" << entry->rows
                << ", " << entry->features << ", " << entry->outputs << ")\n";
    }
  }
  return data;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, load_experiment_data(config));
}

ExperimentReport run_experiment(const ExperimentConfig& config, const LoadedData& data) {
  config.validate();
  data.dataset.validate();
  const std::size_t reps = config.repetitions;
  std::vector<std::vector<MethodRecord>> per_seed(reps);
  std::size_t jobs = config.jobs != 0 ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, reps);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reps; i = next++) {
      per_seed[i] = run_seed(config, data, config.base_seed + i);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  ExperimentReport report;
  report.dataset = data.dataset.name;
  report.eta = config.eta;
  for (auto& seed_records : per_seed) {
    for (auto& r : seed_records) report.records.push_back(std::move(r));
  }
  report.aggregates = aggregate_report(report.records);
  if (data.law) {
    report.optimal_volume = optimal_gaussian_volume(condition(*data.law).cond_cov, config.eta);
  }
  if (!config.output.empty()) {
    write_report(report, config.output);
    std::ofstream(config.output / "config.txt") << config.to_text();
  }
  return report;
}

}  // namespace mve
