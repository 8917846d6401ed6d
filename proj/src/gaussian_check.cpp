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

#include "mve/gaussian_check.h"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "mve/experiment.h"
#include "mve/gaussian.h"

namespace mve {
namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), pattern, a, b, c);
  return buffer;
}

}  // namespace

std::vector<CheckLine> chi2_inverse_check() {
  double worst = 0.0;
  for (int n = 1; n <= 10; ++n) {
    for (int i = 1; i <= 99; ++i) {
      const double p = i / 100.0;
      const double x = chi2_inv_cdf(p, n);
      worst = std::max(worst, std::abs(regularized_gamma_p(n / 2.0, x / 2.0) - p));
    }
  }
  std::vector<CheckLine> out;
  out.push_back({"chi2 inverse round trip", worst <= 1e-10, fmt("max |P - p| = %.3g", worst)});
  double closed = 0.0;
  for (int i = 1; i <= 99; ++i) {
    const double p = i / 100.0;
    closed = std::max(closed, std::abs(chi2_inv_cdf(p, 2) + 2.0 * std::log1p(-p)));
  }
  const double x90 = chi2_inv_cdf(0.9, 2);
  out.push_back({"chi2 inverse n = 2 closed form", closed <= 1e-9,
                 fmt("x(0.9) = %.10f, max error %.3g", x90, closed)});
  return out;
}

CheckLine single_gaussian_coverage_check(int n, double eta, std::size_t draws, std::uint64_t seed,
                                         double tolerance) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, n);
  Vector mean(n);
  for (int i = 0; i < n; ++i) {
    mean(i) = normal(rng);
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  }
  const Matrix sigma = a * a.transpose() + 0.1 * Matrix::Identity(n, n);
  const Ellipsoid region = optimal_single_ellipsoid(mean, sigma, eta);
  const Matrix lower = SpdFactor::compute(sigma).lower();
  Vector z(n);
  std::size_t inside = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    for (int i = 0; i < n; ++i) z(i) = normal(rng);
    if (contains(region, mean + lower * z)) ++inside;
  }
  const double coverage = static_cast<double>(inside) / static_cast<double>(draws);
  char name[80];
  std::snprintf(name, sizeof(name), "single Gaussian coverage eta = %.2f", eta);
  return {name, std::abs(coverage - eta) <= tolerance,
          fmt("coverage %.5f over %.0f draws", coverage, static_cast<double>(draws))};
}

std::vector<CheckLine> gaussian_end_to_end_check(const EndToEndConfig& config) {
  ExperimentConfig ec;
  ec.dataset = "synthetic";
  ec.synthetic_d = config.d;
  ec.synthetic_n = config.n;
  ec.synthetic_m = config.m;
  ec.synthetic_seed = config.law_seed;
  ec.eta = config.eta;
  ec.repetitions = 1;
  ec.jobs = 1;
  ec.train = config.train;
  ec.methods = {ShapeKind::kOracle};
  if (config.lmve) ec.methods.push_back(ShapeKind::kLmve);

  // One fresh sample of size m from the fixed law per repetition.
  LoadedData data = load_experiment_data(ec);
  std::vector<std::vector<MethodRecord>> per_rep(config.repetitions);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.repetitions; i = next++) {
      LoadedData local;
      local.law = data.law;
      local.dataset = sample_joint(*data.law, config.m, config.law_seed + 1000 + i);
      local.dataset.name = "synthetic";
      ExperimentConfig rc = ec;
      rc.base_seed = config.base_seed + i;
      per_rep[i] = run_experiment(rc, local).records;
    }
  };
  std::size_t jobs = config.jobs != 0 ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, config.repetitions);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  ExperimentReport report;
  for (auto& records : per_rep) {
    for (auto& r : records) report.records.push_back(std::move(r));
  }
  report.aggregates = aggregate_report(report.records);
  const double optimum = optimal_gaussian_volume(condition(*data.law).cond_cov, config.eta);

  std::vector<CheckLine> out;
  const auto judge = [&](const MethodAggregate& a, double lo, double hi, double vol_tol) {
    const double rel = std::abs(a.volume_mean - optimum) / optimum;
    const bool ok = a.failures == 0 && a.count > 0 && a.coverage_mean >= lo &&
                    a.coverage_mean <= hi && rel <= vol_tol;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "coverage %.4f in [%.2f, %.2f], volume %.5g vs optimum %.5g (%.1f%%, limit %.0f%%), "
                  "%zu runs, %zu failed",
                  a.coverage_mean, lo, hi, a.volume_mean, optimum, 100.0 * rel, 100.0 * vol_tol,
                  a.count, a.failures);
    out.push_back({a.method + " end to end", ok, detail, rel});
  };
  for (const auto& a : report.aggregates) {
    if (a.method == "oracle") judge(a, 0.87, 0.93, 0.05);
    if (a.method == "LMVE") judge(a, 0.86, 0.94, 0.15);
  }
  return out;
}

}  // namespace mve
