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

#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "doctest.h"
#include "mve/simd/kernels.h"

using namespace mve::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Accumulation order differs between variants; compare against the scale of
// the terms, not the (possibly cancelling) result.
void check_close(double a, double b, double scale) {
  CHECK(std::abs(a - b) <= 1e-13 * (scale + 1.0));
}

std::vector<Isa> variants() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kAvx2, Isa::kNeon}) {
    if (isa_available(isa)) out.push_back(isa);
  }
  return out;
}

}  // namespace

TEST_CASE("generic kernels match naive loops") {
  const auto& k = generic::table();
  std::mt19937_64 rng(1);
  auto a = random_vector(37, rng);
  auto b = random_vector(37, rng);
  double dot = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    l2 += (a[i] - b[i]) * (a[i] - b[i]);
  }
  CHECK(k.dot(a.data(), b.data(), a.size()) == doctest::Approx(dot).epsilon(1e-14));
  CHECK(k.squared_l2(a.data(), b.data(), a.size()) == doctest::Approx(l2).epsilon(1e-14));
  CHECK(k.dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("vector variants agree with the scalar reference") {
  const auto& ref = generic::table();
  std::mt19937_64 rng(2);
  for (Isa isa : variants()) {
    INFO(isa_name(isa));
    const auto& k = kernels_for(isa);
    for (std::size_t n = 1; n <= 1025; ++n) {
      auto a = random_vector(n, rng);
      auto b = random_vector(n, rng);
      double scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
      check_close(k.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), scale);
      const double l2 = ref.squared_l2(a.data(), b.data(), n);
      check_close(k.squared_l2(a.data(), b.data(), n), l2, l2);

      auto y1 = b;
      auto y2 = b;
      k.axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) check_close(y1[i], y2[i], 4.0);
    }
  }
}

TEST_CASE("gemv and row distances agree across variants") {
  const auto& ref = generic::table();
  std::mt19937_64 rng(3);
  for (Isa isa : variants()) {
    const auto& k = kernels_for(isa);
    for (std::size_t rows : {1u, 2u, 3u, 4u, 5u, 12u, 17u, 64u}) {
      for (std::size_t cols : {1u, 3u, 4u, 7u, 8u, 9u, 33u, 519u}) {
        auto a = random_vector(rows * cols, rng);
        auto x = random_vector(cols, rng);
        auto bias = random_vector(rows, rng);
        std::vector<double> o1(rows), o2(rows), o3(rows), o4(rows);
        k.gemv(a.data(), rows, cols, x.data(), bias.data(), o1.data());
        ref.gemv(a.data(), rows, cols, x.data(), bias.data(), o2.data());
        k.gemv(a.data(), rows, cols, x.data(), nullptr, o3.data());
        ref.gemv(a.data(), rows, cols, x.data(), nullptr, o4.data());
        for (std::size_t r = 0; r < rows; ++r) {
          check_close(o1[r], o2[r], 4.0 * cols);
          check_close(o3[r], o4[r], 4.0 * cols);
          check_close(o2[r] - bias[r], o4[r], 4.0 * cols);
        }
        auto d1 = std::vector<double>(rows);
        auto d2 = std::vector<double>(rows);
        k.squared_l2_rows(x.data(), a.data(), rows, cols, d1.data());
        ref.squared_l2_rows(x.data(), a.data(), rows, cols, d2.data());
        for (std::size_t r = 0; r < rows; ++r) {
          check_close(d1[r], d2[r], d2[r]);
          CHECK(d2[r] == ref.squared_l2(x.data(), a.data() + r * cols, cols));
        }
      }
    }
  }
}

TEST_CASE("dispatch") {
  CHECK(isa_available(Isa::kGeneric));
  CHECK(&kernels_for(Isa::kGeneric) == &generic::table());
  if (!isa_available(Isa::kNeon)) CHECK_THROWS_AS(kernels_for(Isa::kNeon), std::invalid_argument);
  const char* forced = std::getenv("MVE_SIMD");
  if (forced != nullptr && std::string_view(forced) == "generic") {
    CHECK(active_isa() == Isa::kGeneric);
  }
  std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(dot(a, b) == 32.0);
  CHECK(squared_l2(a, b) == 27.0);
  axpy(2.0, a, b);
  CHECK(b == std::vector<double>{6, 9, 12});
}
