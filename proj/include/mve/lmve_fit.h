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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mve/center_model.h"
#include "mve/estimators.h"
#include "mve/mlp.h"

namespace mve {

// Which power of det(C_B) sits in the denominator of the automatic lambda.
enum class LambdaExponent { kDet, kSqrtDet };

struct TrainConfig {
  double eta = 0.9;
  // Relative to trace(GE) / n; the network works on labels scaled to unit
  // average residual variance.
  double epsilon = 1e-4;
  std::optional<double> lambda;  // nullopt: pick from the calibrated baseline
  LambdaExponent lambda_exponent = LambdaExponent::kDet;
  double dropout_rate = 0.1;
  std::size_t iters_init = 100000;
  std::size_t iters_train = 100000;
  double lr_init = 1e-3;
  double lr_train = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 128;  // 0: full batch
  std::uint64_t seed = 0;

  /// 10k imitation + 10k training steps.
  static TrainConfig desk();

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t iteration, double loss, double grad_norm);
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Ratio of the training-set mean of M_B(x, y) to the mean of det(C_B(x))
/// (or det^(1/2)) under a calibrated baseline.
double select_lambda(const CalibratedModel& baseline, const Matrix& train_features,
                     const Matrix& train_labels,
                     LambdaExponent exponent = LambdaExponent::kDet);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases except
/// b3 = vec(S) with S the symmetric square root of `global_shape`.
MlpParams initial_params(int d, int n, const Matrix& global_shape, std::uint64_t seed);

struct PhaseResult {
  MlpParams params;
  std::vector<double> loss_history;  // one minibatch loss per step
};

/// Adam on the imitation loss ||C(x) - K(x)||_F^2 for config.iters_init steps.
PhaseResult init_phase(MlpParams params, const RowMatrix& features,
                       std::span<const Matrix> targets, double epsilon,
                       const TrainConfig& config);

/// Adam on the penalized loss M + lambda * det^(1/2) for config.iters_train
/// steps. Throws TrainingDiverged on a non-finite loss or gradient.
PhaseResult train_phase(MlpParams params, const RowMatrix& features, const RowMatrix& residuals,
                        double lambda, double epsilon, const TrainConfig& config);

struct LmveFit {
  ShapeModel shape;
  double lambda = 0.0;         // in label units
  double label_scale = 1.0;    // trace(GE) / n
  double baseline_alpha = 0.0; // calibration scale of the baseline on the training set
  std::vector<double> init_losses;
  std::vector<double> train_losses;
};

/// Full fit on the training split: baseline calibrated on the training rows,
/// lambda, initialization, imitation of the baseline shapes, then training.
/// The center model is only read.
LmveFit fit_lmve(const Matrix& train_features, const Matrix& train_labels,
                 const std::shared_ptr<const CenterModel>& center, const ShapeModel& baseline,
                 const TrainConfig& config);

}  // namespace mve
