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

#include "mve/lmve_fit.h"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace mve {
namespace {

// Epoch-shuffled minibatches; a batch size of zero or >= m yields full batches.
class BatchSampler {
 public:
  BatchSampler(std::size_t rows, std::size_t batch_size, std::uint64_t seed)
      : order_(rows), batch_(batch_size == 0 || batch_size >= rows ? rows : batch_size), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    cursor_ = rows;
  }

  std::span<const std::size_t> next() {
    if (batch_ == order_.size()) {
      return order_;
    }
    if (cursor_ + batch_ > order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    std::span<const std::size_t> out(order_.data() + cursor_, batch_);
    cursor_ += batch_;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
};

template <typename Objective>
PhaseResult run_adam(MlpParams params, std::size_t rows, std::size_t iterations, double lr,
                     const TrainConfig& config, std::uint64_t stream, Objective&& objective) {
  PhaseResult result;
  result.loss_history.reserve(iterations);
  if (iterations == 0) {
    result.params = std::move(params);
    return result;
  }
  Adam adam(params, config.adam_beta1, config.adam_beta2, config.adam_eps);
  BatchSampler sampler(rows, config.batch_size, config.seed * 4 + stream);
  DropoutMasks dropout(config.dropout_rate, config.seed * 4 + stream + 2);
  DropoutMasks* masks = config.dropout_rate > 0.0 ? &dropout : nullptr;
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto batch = sampler.next();
    LossGradient lg = objective(params, batch, masks);
    const double grad_norm = std::sqrt(lg.grad.squared_norm());
    if (!std::isfinite(lg.loss) || !std::isfinite(grad_norm)) {
      throw TrainingDiverged(it, lg.loss, grad_norm);
    }
    result.loss_history.push_back(lg.loss);
    adam.step(params, lg.grad, lr);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace

TrainConfig TrainConfig::desk() {
  TrainConfig config;
  config.iters_init = 10000;
  config.iters_train = 10000;
  return config;
}

void TrainConfig::validate() const {
  if (!(eta > 0.0) || !(eta < 1.0)) throw std::invalid_argument("TrainConfig: eta must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be positive");
  if (lambda && !(*lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
  if (!(dropout_rate >= 0.0) || !(dropout_rate < 1.0)) {
    throw std::invalid_argument("TrainConfig: dropout_rate must lie in [0, 1)");
  }
  if (!(lr_init > 0.0) || !(lr_train > 0.0)) {
    throw std::invalid_argument("TrainConfig: learning rates must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
      !(adam_eps > 0.0)) {
    throw std::invalid_argument("TrainConfig: invalid Adam constants");
  }
}

TrainingDiverged::TrainingDiverged(std::size_t iteration, double loss, double grad_norm)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "training diverged at iteration " << iteration << ": loss " << loss
            << ", gradient norm " << grad_norm;
        return msg.str();
      }()),
      iteration_(iteration) {}

double select_lambda(const CalibratedModel& baseline, const Matrix& train_features,
                     const Matrix& train_labels, LambdaExponent exponent) {
  if (train_features.rows() == 0 || train_features.rows() != train_labels.rows()) {
    throw std::invalid_argument("select_lambda: need matching non-empty training rows");
  }
  double mahalanobis_sum = 0.0;
  double det_sum = 0.0;
  for (Eigen::Index i = 0; i < train_features.rows(); ++i) {
    const Ellipsoid e = baseline.ellipsoid_at(train_features.row(i).transpose());
    mahalanobis_sum += mahalanobis(e, train_labels.row(i).transpose());
    const double log_det = e.factor().log_det();
    det_sum += std::exp(exponent == LambdaExponent::kDet ? log_det : 0.5 * log_det);
  }
  if (!(det_sum > 0.0) || !std::isfinite(det_sum)) {
    throw std::domain_error("select_lambda: baseline determinant average is zero or not finite");
  }
  return mahalanobis_sum / det_sum;
}

MlpParams initial_params(int d, int n, const Matrix& global_shape, std::uint64_t seed) {
  MlpParams p = MlpParams::zeros(d, n);
  std::mt19937_64 rng(seed);
  const auto fill = [&](RowMatrix& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng);
  };
  fill(p.l1);
  fill(p.l2);
  fill(p.l3);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(global_shape));
  const Matrix root = eig.eigenvectors() *
                      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                      eig.eigenvectors().transpose();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) p.b3(i * n + j) = root(i, j);
  }
  return p;
}

PhaseResult init_phase(MlpParams params, const RowMatrix& features,
                       std::span<const Matrix> targets, double epsilon,
                       const TrainConfig& config) {
  config.validate();
  params.validate();
  return run_adam(std::move(params), static_cast<std::size_t>(features.rows()), config.iters_init,
                  config.lr_init, config, 0,
                  [&](const MlpParams& p, std::span<const std::size_t> rows, DropoutMasks* masks) {
                    return imitation_loss_grad(p, features, targets, rows, epsilon, masks);
                  });
}

PhaseResult train_phase(MlpParams params, const RowMatrix& features, const RowMatrix& residuals,
                        double lambda, double epsilon, const TrainConfig& config) {
  config.validate();
  params.validate();
  return run_adam(std::move(params), static_cast<std::size_t>(features.rows()),
                  config.iters_train, config.lr_train, config, 1,
                  [&](const MlpParams& p, std::span<const std::size_t> rows, DropoutMasks* masks) {
                    return lmve_loss_grad(p, ShapeBatch{features, residuals, rows}, lambda,
                                          epsilon, masks);
                  });
}

LmveFit fit_lmve(const Matrix& train_features, const Matrix& train_labels,
                 const std::shared_ptr<const CenterModel>& center, const ShapeModel& baseline,
                 const TrainConfig& config) {
  config.validate();
  if (!center) {
    throw std::invalid_argument("fit_lmve: missing center model");
  }
  const int d = static_cast<int>(train_features.cols());
  const int n = static_cast<int>(train_labels.cols());
  const Matrix residuals = center->residuals(train_features, train_labels);

  // Work in label units where the global residual covariance has unit
  // average variance; C = s * C_net keeps the objective unchanged.
  const Matrix ge = std::get<GeShape>(fit_ge(residuals).state()).cov;
  const double label_scale = ge.trace() / n;
  if (!(label_scale > 0.0) || !std::isfinite(label_scale)) {
    throw std::domain_error("fit_lmve: degenerate residual scale");
  }

  LmveFit fit{ShapeModel(GeShape{ge}), 0.0, label_scale, 0.0, {}, {}};
  if (config.lambda) {
    fit.lambda = *config.lambda;
  } else {
    const CalibratedModel calibrated =
        conformal_calibrate(baseline, center, train_features, train_labels, config.eta);
    fit.baseline_alpha = calibrated.alpha_q;
    fit.lambda = select_lambda(calibrated, train_features, train_labels, config.lambda_exponent);
  }
  // det(s C_net)^(1/2) = s^(n/2) det(C_net)^(1/2)
  const double net_lambda = fit.lambda * std::pow(label_scale, 0.5 * n);

  const Standardizer standardizer = Standardizer::fit(train_features);
  const RowMatrix z = standardizer.apply_rows(train_features);
  const RowMatrix scaled_residuals = residuals / std::sqrt(label_scale);
  std::vector<Matrix> targets;
  targets.reserve(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < train_features.rows(); ++i) {
    targets.push_back(baseline.shape_at(train_features.row(i).transpose()) / label_scale);
  }

  MlpParams params = initial_params(d, n, ge / label_scale, config.seed);
  PhaseResult init = init_phase(std::move(params), z, targets, config.epsilon, config);
  PhaseResult trained =
      train_phase(std::move(init.params), z, scaled_residuals, net_lambda, config.epsilon, config);

  fit.shape = ShapeModel(LmveShape{standardizer, std::move(trained.params), config.epsilon,
                                   label_scale});
  fit.init_losses = std::move(init.loss_history);
  fit.train_losses = std::move(trained.loss_history);
  return fit;
}

}  // namespace mve
