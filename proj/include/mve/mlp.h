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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "mve/dataset.h"
#include "mve/linalg.h"

namespace mve {

/// Weights of the shape network
///   R(x) = L3 * s(L2 * s(L1 * x + b1) + b2) + b3,   C(x) = R^T R + eps * I,
/// where s is ReLU followed by dropout while training. L1 is 4d x d, L2 is
/// d x 4d and L3 is n^2 x d; R is read row-major from the n^2 outputs.
struct MlpParams {
  RowMatrix l1;
  Vector b1;
  RowMatrix l2;
  Vector b2;
  RowMatrix l3;
  Vector b3;

  static MlpParams zeros(int d, int n);

  int input_dim() const { return static_cast<int>(l1.cols()); }
  int hidden_dim() const { return static_cast<int>(l1.rows()); }
  /// n, the side of the shape matrix (L3 has n^2 rows).
  int output_dim() const;

  /// Throws std::invalid_argument on inconsistent layer sizes or non-finite entries.
  void validate() const;
  bool all_finite() const;
  std::size_t parameter_count() const;
  double squared_norm() const;

  std::array<std::span<double>, 6> arrays();
  std::array<std::span<const double>, 6> arrays() const;
};

/// Inverted-dropout mask source: each unit is kept with probability
/// 1 - rate and scaled by 1 / (1 - rate).
class DropoutMasks {
 public:
  DropoutMasks(double rate, std::uint64_t seed);

  double rate() const { return rate_; }
  void draw(std::span<double> mask);

 private:
  double rate_;
  std::mt19937_64 rng_;
};

struct ShapeOutput {
  Matrix r;  // n x n
  Matrix c;  // R^T R + eps * I
};

/// Dropout is applied only when `dropout` is non-null.
ShapeOutput forward_shape(const MlpParams& params, std::span<const double> x, double epsilon,
                          DropoutMasks* dropout = nullptr);
ShapeOutput forward_shape(const MlpParams& params, const Vector& x, double epsilon,
                          DropoutMasks* dropout = nullptr);

// Training rows: standardized inputs and residuals y - mu(x) from the frozen
// center model. An empty `rows` span means every row.
struct ShapeBatch {
  const RowMatrix& features;
  const RowMatrix& residuals;
  std::span<const std::size_t> rows;
};

struct LossGradient {
  double loss = 0.0;
  MlpParams grad;
};

/// Batch mean of M(x, y) + lambda * det(C(x))^(1/2), with M the squared
/// Mahalanobis distance of the residual under C(x).
double lmve_loss(const MlpParams& params, const ShapeBatch& batch, double lambda, double epsilon,
                 DropoutMasks* dropout = nullptr);

/// Loss together with its reverse-mode gradient. Per sample, with
/// G = -C^{-1} r r^T C^{-1} + (lambda / 2) det(C)^(1/2) C^{-1}, the head
/// receives dl/dR = R (G + G^T) and the rest is ordinary backprop.
LossGradient lmve_loss_grad(const MlpParams& params, const ShapeBatch& batch, double lambda,
                            double epsilon, DropoutMasks* dropout = nullptr);

/// Batch mean of ||C(x_i) - K_i||_F^2 against fixed target shapes K_i
/// (one per row of `features`).
LossGradient imitation_loss_grad(const MlpParams& params, const RowMatrix& features,
                                 std::span<const Matrix> targets,
                                 std::span<const std::size_t> rows, double epsilon,
                                 DropoutMasks* dropout = nullptr);

class Adam {
 public:
  Adam(const MlpParams& like, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(MlpParams& params, const MlpParams& grad, double lr);
  long steps() const { return t_; }

 private:
  MlpParams m_;
  MlpParams v_;
  long t_ = 0;
  double beta1_;
  double beta2_;
  double eps_;
};

/// A trained network together with the feature transform and label scale
/// it was fitted under: shape(x) = label_scale * C(standardize(x)).
struct LmveShape {
  Standardizer standardizer;
  MlpParams params;
  double epsilon = 1e-4;
  double label_scale = 1.0;

  Matrix shape_at(const Vector& x) const;
};

// Text checkpoint; layout in docs/formats.md.
inline constexpr int kCheckpointVersion = 1;
void save_checkpoint(const LmveShape& model, const std::filesystem::path& path);
/// Throws std::runtime_error on malformed input or unsupported version.
LmveShape load_checkpoint(const std::filesystem::path& path);

}  // namespace mve
