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

#include "mve/simd/kernels.h"

namespace mve::simd::generic {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

double squared_l2(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x,
          const double* bias, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double acc = dot(a + r * cols, x, cols);
    out[r] = bias != nullptr ? bias[r] + acc : acc;
  }
}

void squared_l2_rows(const double* query, const double* rows, std::size_t count,
                     std::size_t dim, double* out) {
  for (std::size_t r = 0; r < count; ++r) {
    out[r] = squared_l2(query, rows + r * dim, dim);
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable kTable{&dot, &squared_l2, &axpy, &gemv, &squared_l2_rows};
  return kTable;
}

}  // namespace mve::simd::generic
