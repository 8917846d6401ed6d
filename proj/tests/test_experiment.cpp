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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mve/experiment.h"

using namespace mve;
namespace fs = std::filesystem;

namespace {

MethodRecord rec(const std::string& method, std::uint64_t seed, double coverage, double volume,
                 bool ok = true) {
  MethodRecord r;
  r.method = method;
  r.seed = seed;
  r.ok = ok;
  r.coverage = coverage;
  r.mean_volume = volume;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mve_test_experiment" / name;
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_synthetic() {
  ExperimentConfig c;
  c.dataset = "synthetic";
  c.synthetic_m = 400;
  c.repetitions = 3;
  c.jobs = 2;
  c.methods = {ShapeKind::kGe, ShapeKind::kNle};
  return c;
}

}  // namespace

TEST_CASE("aggregation examples") {
  auto a = aggregate_report({rec("GE", 0, 0.9, 1.0), rec("GE", 1, 0.9, 2.0), rec("GE", 2, 0.9, 3.0)});
  REQUIRE(a.size() == 1);
  CHECK(a[0].coverage_mean == doctest::Approx(0.9));
  CHECK(a[0].coverage_std == doctest::Approx(0.0));
  CHECK(a[0].volume_mean == doctest::Approx(2.0));
  CHECK(a[0].volume_std == doctest::Approx(1.0));
  CHECK(a[0].count == 3);
  CHECK_FALSE(a[0].single_record);

  a = aggregate_report({rec("NLE", 0, 0.8, 5.0), rec("GE", 0, 0.9, 1.0), rec("NLE", 1, 0.0, 0.0, false)});
  REQUIRE(a.size() == 2);
  CHECK(a[0].method == "NLE");
  CHECK(a[0].count == 1);
  CHECK(a[0].failures == 1);
  CHECK(a[0].single_record);
  CHECK(a[0].volume_std == 0.0);
  CHECK(a[1].method == "GE");
  CHECK_THROWS_AS(aggregate_report({}), std::invalid_argument);
}

TEST_CASE("registry") {
  const RegisteredDataset* enb = find_registered("enb");
  REQUIRE(enb != nullptr);
  CHECK(enb->rows == 768);
  CHECK(enb->features == 8);
  CHECK(enb->outputs == 2);
  CHECK(find_registered("indoor_localization")->features == 519);
  CHECK(find_registered("residential_building")->rows == 372);
  CHECK(find_registered("ble_rssi")->rows == 1420);
  CHECK(find_registered("nope") == nullptr);
}

TEST_CASE("plumbing on a toy CSV") {
  const fs::path dir = scratch("toy");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "toy.csv");
    out << "a,b,y1,y2\n";
    for (int i = 0; i < 120; ++i) {
      const double a = std::sin(i * 0.7), b = std::cos(i * 1.3);
      out << a << ',' << b << ',' << 2 * a + 0.1 * std::sin(i * 2.1) << ',' << b - a + 0.2 * std::cos(i * 0.9) << '\n';
    }
  }
  ExperimentConfig c;
  c.dataset = (dir / "toy.csv").string();
  c.labels = "y1,y2";
  c.methods = {ShapeKind::kGe};
  c.repetitions = 2;
  const ExperimentReport r = run_experiment(c);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].ok);
  CHECK(r.records[0].train_size == 97);
  CHECK(r.records[0].calib_size == 10);
  CHECK(r.records[0].test_size == 13);
  REQUIRE(r.aggregates.size() == 1);
  CHECK(r.aggregates[0].count == 2);
  CHECK(r.failed_seeds() == 0);

  c.labels.clear();
  CHECK_THROWS_AS(run_experiment(c), std::invalid_argument);
  c.dataset = (dir / "missing.csv").string();
  c.labels = "y1";
  CHECK_THROWS_AS(run_experiment(c), std::runtime_error);
  c.dataset = "enb";
  c.data_dir = dir;
  CHECK_THROWS_AS(run_experiment(c), std::runtime_error);
}

TEST_CASE("failures are recorded, not thrown") {
  const fs::path dir = scratch("fail");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "toy.csv");
    out << "a,y1,y2\n";
    for (int i = 0; i < 120; ++i) out << i % 7 << ',' << std::sin(i) << ',' << std::cos(i * 3) << '\n';
  }
  ExperimentConfig c;
  c.dataset = (dir / "toy.csv").string();
  c.labels = "y1,y2";
  c.methods = {ShapeKind::kOracle, ShapeKind::kGe};
  c.repetitions = 2;
  const ExperimentReport r = run_experiment(c);
  REQUIRE(r.records.size() == 4);
  CHECK_FALSE(r.records[0].ok);
  CHECK(r.records[0].error.find("synthetic") != std::string::npos);
  CHECK(r.records[1].ok);
  CHECK(r.failed_seeds() == 2);
  CHECK(r.aggregates[0].failures == 2);
  CHECK(r.aggregates[0].count == 0);
  CHECK(render_table(r).find("oracle") != std::string::npos);
}

TEST_CASE("methods in a seed share split and center") {
  ExperimentConfig c = small_synthetic();
  c.methods = {ShapeKind::kGe, ShapeKind::kNle, ShapeKind::kOracle};
  const ExperimentReport r = run_experiment(c);
  REQUIRE(r.records.size() == 9);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& first = r.records[3 * s];
    CHECK(first.seed == s);
    for (std::size_t k = 1; k < 3; ++k) {
      CHECK(r.records[3 * s + k].seed == s);
      CHECK(r.records[3 * s + k].split_checksum == first.split_checksum);
      CHECK(r.records[3 * s + k].center_checksum == first.center_checksum);
    }
  }
  CHECK(r.records[0].split_checksum != r.records[3].split_checksum);
  REQUIRE(r.optimal_volume.has_value());
}

TEST_CASE("oracle shape on synthetic data covers at the target rate") {
  ExperimentConfig c;
  c.methods = {ShapeKind::kOracle};
  c.repetitions = 20;
  c.jobs = 1;
  const ExperimentReport r = run_experiment(c);
  REQUIRE(r.aggregates.size() == 1);
  CHECK(r.aggregates[0].count == 20);
  CHECK(r.aggregates[0].coverage_mean >= 0.87);
  CHECK(r.aggregates[0].coverage_mean <= 0.93);
}

TEST_CASE("reports are byte-identical across runs and round-trip") {
  ExperimentConfig c = small_synthetic();
  c.methods = {ShapeKind::kGe, ShapeKind::kLmve};
  c.train.iters_init = 200;
  c.train.iters_train = 200;
  const fs::path dir_a = scratch("rep_a");
  c.output = dir_a;
  const ExperimentReport a = run_experiment(c);
  c.output = scratch("rep_b");
  c.jobs = 1;
  const ExperimentReport b = run_experiment(c);
  for (const char* f : {"records.jsonl", "aggregates.jsonl", "summary.txt", "meta.json", "config.txt"}) {
    CHECK(slurp(dir_a / f) == slurp(c.output / f));
  }
  CHECK(fs::exists(c.output / "timing.jsonl"));
  CHECK(records_jsonl(a) == records_jsonl(b));
  CHECK(slurp(c.output / "records.jsonl").find("wall_time") == std::string::npos);
  REQUIRE(a.records[1].lambda.has_value());
  CHECK(*a.records[1].lambda == *b.records[1].lambda);
  CHECK(*a.records[1].lambda > 0.0);

  const ExperimentReport back = read_report(c.output);
  CHECK(back.dataset == "synthetic");
  CHECK(records_jsonl(back) == records_jsonl(b));
  CHECK(aggregates_jsonl(back) == aggregates_jsonl(b));
  CHECK(render_table(back) == render_table(b));

  std::string agg = slurp(c.output / "aggregates.jsonl");
  agg.replace(agg.find("\"count\":3"), 9, "\"count\":4");
  std::ofstream(c.output / "aggregates.jsonl") << agg;
  CHECK_THROWS_AS(read_report(c.output), std::runtime_error);
}

TEST_CASE("saved models") {
  ExperimentConfig c = small_synthetic();
  c.repetitions = 1;
  c.methods = {ShapeKind::kLmve};
  c.train.iters_init = 50;
  c.train.iters_train = 50;
  c.save_models = true;
  c.output = scratch("models");
  const ExperimentReport r = run_experiment(c);
  CHECK(r.records[0].ok);
  CHECK(fs::exists(c.output / "models" / "seed_0_center.json"));
  const LmveShape m = load_checkpoint(c.output / "models" / "seed_0_lmve.ckpt");
  CHECK(m.params.input_dim() == 3);
}

TEST_CASE("config text and validation") {
  ExperimentConfig c;
  const std::string text = c.to_text();
  CHECK(text.find("methods = ge,nle,lmve") != std::string::npos);
  CHECK(text.find("iters-init = 10000") != std::string::npos);
  c.full = true;
  CHECK(c.to_text().find("iters-train = 100000") != std::string::npos);
  c.eta = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExperimentConfig{};
  c.repetitions = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExperimentConfig{};
  c.methods.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
