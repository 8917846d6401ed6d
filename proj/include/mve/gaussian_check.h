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
#include <string>
#include <vector>

#include "mve/lmve_fit.h"

namespace mve {

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
  double value = 0.0;  // the measured quantity (relative volume error for end-to-end lines)
};

/// |P(n/2, x/2) - p| <= 1e-10 over p = 0.01..0.99, n = 1..10, plus the n = 2
/// closed form -2 ln(1 - p).
std::vector<CheckLine> chi2_inverse_check();

/// Coverage of (mu, kappa * Sigma) on fresh N(mu, Sigma) draws for a random
/// SPD Sigma; passes within eta +/- tolerance.
CheckLine single_gaussian_coverage_check(int n, double eta, std::size_t draws, std::uint64_t seed,
                                         double tolerance = 1e-3);

struct EndToEndConfig {
  int d = 3;
  int n = 2;
  double eta = 0.9;
  std::size_t m = 5000;
  std::uint64_t law_seed = 7;
  std::size_t repetitions = 20;  // fresh sample and split per repetition; results averaged
  std::uint64_t base_seed = 0;
  std::size_t jobs = 0;
  bool lmve = true;
  TrainConfig train = TrainConfig::desk();
};

/// Oracle shape and LMVE on jointly Gaussian data against the analytic
/// optimum V_n kappa^(n/2) det(C_{y|x})^(1/2).
std::vector<CheckLine> gaussian_end_to_end_check(const EndToEndConfig& config);

}  // namespace mve
