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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "mve/experiment.h"

namespace mve {
namespace {

using Json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(v));
  return buffer;
}

std::uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

Json record_json(const std::string& dataset, double eta, const MethodRecord& r) {
  Json j;
  j["dataset"] = dataset;
  j["eta"] = eta;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) j["error"] = r.error;
  j["coverage"] = r.coverage;
  j["mean_volume"] = r.mean_volume;
  j["alpha_q"] = r.alpha_q;
  if (r.lambda) j["lambda"] = *r.lambda;
  j["train_size"] = r.train_size;
  j["calib_size"] = r.calib_size;
  j["test_size"] = r.test_size;
  j["split_checksum"] = hex64(r.split_checksum);
  j["center_checksum"] = hex64(r.center_checksum);
  return j;
}

MethodRecord record_from_json(const Json& j) {
  MethodRecord r;
  r.method = j.at("method").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("status").get<std::string>() == "ok";
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  r.coverage = j.at("coverage").get<double>();
  r.mean_volume = j.at("mean_volume").get<double>();
  r.alpha_q = j.at("alpha_q").get<double>();
  if (j.contains("lambda")) r.lambda = j.at("lambda").get<double>();
  r.train_size = j.at("train_size").get<std::size_t>();
  r.calib_size = j.at("calib_size").get<std::size_t>();
  r.test_size = j.at("test_size").get<std::size_t>();
  r.split_checksum = parse_hex64(j.at("split_checksum").get<std::string>());
  r.center_checksum = parse_hex64(j.at("center_checksum").get<std::string>());
  return r;
}

Json aggregate_json(const MethodAggregate& a) {
  Json j;
  j["method"] = a.method;
  j["count"] = a.count;
  j["failures"] = a.failures;
  j["coverage_mean"] = a.coverage_mean;
  j["coverage_std"] = a.coverage_std;
  j["volume_mean"] = a.volume_mean;
  j["volume_std"] = a.volume_std;
  j["single_record"] = a.single_record;
  return j;
}

MethodAggregate aggregate_from_json(const Json& j) {
  MethodAggregate a;
  a.method = j.at("method").get<std::string>();
  a.count = j.at("count").get<std::size_t>();
  a.failures = j.at("failures").get<std::size_t>();
  a.coverage_mean = j.at("coverage_mean").get<double>();
  a.coverage_std = j.at("coverage_std").get<double>();
  a.volume_mean = j.at("volume_mean").get<double>();
  a.volume_std = j.at("volume_std").get<double>();
  a.single_record = j.at("single_record").get<bool>();
  return a;
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string pm(double mean, double sd, bool percent) {
  char buffer[64];
  if (percent) {
    std::snprintf(buffer, sizeof(buffer), "%.1f (+/- %.1f)", 100.0 * mean, 100.0 * sd);
  } else {
    std::snprintf(buffer, sizeof(buffer), "%.4g (+/- %.3g)", mean, sd);
  }
  return buffer;
}

}  // namespace

std::string records_jsonl(const ExperimentReport& report) {
  std::string out;
  for (const auto& r : report.records) {
    out += record_json(report.dataset, report.eta, r).dump();
    out += '\n';
  }
  return out;
}

std::string aggregates_jsonl(const ExperimentReport& report) {
  std::string out;
  for (const auto& a : report.aggregates) {
    out += aggregate_json(a).dump();
    out += '\n';
  }
  return out;
}

std::string render_table(const ExperimentReport& report) {
  std::ostringstream out;
  std::size_t seeds = 0;
  for (const auto& a : report.aggregates) seeds = std::max(seeds, a.count + a.failures);
  char head[160];
  std::snprintf(head, sizeof(head), "dataset %s  eta %.2f  repetitions %zu\n",
                report.dataset.c_str(), report.eta, seeds);
  out << head;
  std::snprintf(head, sizeof(head), "%-8s %-22s %-26s %s\n", "method", "coverage (%)",
                "mean volume", "failed");
  out << head;
  for (const auto& a : report.aggregates) {
    char row[200];
    if (a.count == 0) {
      std::snprintf(row, sizeof(row), "%-8s %-22s %-26s %zu\n", a.method.c_str(), "-", "-",
                    a.failures);
    } else {
      std::snprintf(row, sizeof(row), "%-8s %-22s %-26s %zu%s\n", a.method.c_str(),
                    pm(a.coverage_mean, a.coverage_std, true).c_str(),
                    pm(a.volume_mean, a.volume_std, false).c_str(), a.failures,
                    a.single_record ? "  (single run, std 0)" : "");
    }
    out << row;
  }
  if (report.optimal_volume) {
    char row[120];
    std::snprintf(row, sizeof(row), "optimal volume %.6g\n", *report.optimal_volume);
    out << row;
  }
  return out.str();
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json meta;
  meta["dataset"] = report.dataset;
  meta["eta"] = report.eta;
  if (report.optimal_volume) meta["optimal_volume"] = *report.optimal_volume;
  std::string timing;
  for (const auto& r : report.records) {
    Json t;
    t["method"] = r.method;
    t["seed"] = r.seed;
    t["wall_time"] = r.wall_time;
    timing += t.dump();
    timing += '\n';
  }
  write_atomic(dir / "records.jsonl", records_jsonl(report));
  write_atomic(dir / "aggregates.jsonl", aggregates_jsonl(report));
  write_atomic(dir / "meta.json", meta.dump() + "\n");
  write_atomic(dir / "summary.txt", render_table(report));
  write_atomic(dir / "timing.jsonl", timing);
}

ExperimentReport read_report(const std::filesystem::path& dir) {
  ExperimentReport report;
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw std::runtime_error("cannot open " + (dir / "meta.json").string());
  const Json meta = Json::parse(meta_in);
  report.dataset = meta.at("dataset").get<std::string>();
  report.eta = meta.at("eta").get<double>();
  if (meta.contains("optimal_volume")) report.optimal_volume = meta.at("optimal_volume").get<double>();

  for (const auto& j : read_jsonl(dir / "records.jsonl")) {
    report.records.push_back(record_from_json(j));
  }
  for (const auto& j : read_jsonl(dir / "aggregates.jsonl")) {
    report.aggregates.push_back(aggregate_from_json(j));
  }
  const auto recomputed = aggregate_report(report.records);
  bool same = recomputed.size() == report.aggregates.size();
  for (std::size_t i = 0; same && i < recomputed.size(); ++i) {
    const auto& a = recomputed[i];
    const auto& b = report.aggregates[i];
    same = a.method == b.method && a.count == b.count && a.failures == b.failures &&
           a.coverage_mean == b.coverage_mean && a.coverage_std == b.coverage_std &&
           a.volume_mean == b.volume_mean && a.volume_std == b.volume_std &&
           a.single_record == b.single_record;
  }
  if (!same) {
    throw std::runtime_error("aggregates.jsonl does not match the records in " + dir.string());
  }
  return report;
}

}  // namespace mve
