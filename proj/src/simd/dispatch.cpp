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

#include <cassert>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mve/simd/kernels.h"

namespace mve::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kGeneric:
      return "generic";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kGeneric:
      return true;
    case Isa::kAvx2:
#if defined(MVE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(MVE_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(MVE_HAVE_AVX2)
    case Isa::kAvx2:
      return avx2::table();
#endif
#if defined(MVE_HAVE_NEON)
    case Isa::kNeon:
      return neon::table();
#endif
    default:
      return generic::table();
  }
}

namespace {

Isa select_isa() {
  if (const char* forced = std::getenv("MVE_SIMD")) {
    const std::string_view name(forced);
    for (Isa isa : {Isa::kGeneric, Isa::kAvx2, Isa::kNeon}) {
      if (name == isa_name(isa) && isa_available(isa)) {
        return isa;
      }
    }
  }
  if (isa_available(Isa::kAvx2)) {
    return Isa::kAvx2;
  }
  if (isa_available(Isa::kNeon)) {
    return Isa::kNeon;
  }
  return Isa::kGeneric;
}

}  // namespace

Isa active_isa() {
  static const Isa kIsa = select_isa();
  return kIsa;
}

const KernelTable& kernels() {
  static const KernelTable& kTable = kernels_for(active_isa());
  return kTable;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return kernels().dot(a.data(), b.data(), a.size());
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return kernels().squared_l2(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace mve::simd
