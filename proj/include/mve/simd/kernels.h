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
#include <span>
#include <string_view>

// Data-parallel inner loops used by the neighbour scans and the shape network.
// Every kernel has a portable scalar reference in `generic`; vectorised
// variants are compiled per ISA and one table is selected at startup.
namespace mve::simd {

enum class Isa { kGeneric, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_l2)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[r] = bias[r] + sum_c a[r * cols + c] * x[c]; bias may be null.
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* out);
  // out[r] = squared_l2(query, rows + r * dim) for r < count.
  void (*squared_l2_rows)(const double* query, const double* rows, std::size_t count,
                          std::size_t dim, double* out);
};

namespace generic {
const KernelTable& table();
}
#if defined(MVE_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif
#if defined(MVE_HAVE_NEON)
namespace neon {
const KernelTable& table();
}
#endif

// True when the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

// Table for a specific variant; throws std::invalid_argument if unavailable.
const KernelTable& kernels_for(Isa isa);

// Best available variant, or the one named by MVE_SIMD=generic|avx2|neon.
Isa active_isa();
const KernelTable& kernels();

// Thin span wrappers over the active table.
double dot(std::span<const double> a, std::span<const double> b);
double squared_l2(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace mve::simd
