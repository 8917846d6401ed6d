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
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mve/center_model.h"
#include "mve/dataset.h"
#include "mve/ellipsoid.h"
#include "mve/linalg.h"
#include "mve/mlp.h"

namespace mve {

// Global residual second moment (1/T) sum r_i r_i^T.
struct GeShape {
  Matrix cov;
};

// Local second moment of the residuals of the nearest training points (no
// re-centering), shrunk toward the global estimate:
//   mix * (1/|N(x)|) sum_{i in N(x)} r_i r_i^T + (1 - mix) * GE.
struct NleShape {
  Standardizer standardizer;
  RowMatrix features;   // standardized training inputs
  RowMatrix residuals;  // one row per training point
  std::size_t neighbors = 1;
  double mix = 0.95;
  Matrix ge;

  Matrix shape_at(const Vector& x) const;
};

// Conditional covariance of a known joint Gaussian; independent of x.
struct OracleShape {
  Matrix cond_cov;
};

enum class ShapeKind { kGe, kNle, kLmve, kOracle };

std::string_view shape_kind_name(ShapeKind kind);
/// Accepts "ge", "nle", "lmve", "oracle" (case-insensitive).
ShapeKind parse_shape_kind(std::string_view name);

/// Any of the shape estimators behind one value type.
class ShapeModel {
 public:
  using State = std::variant<GeShape, NleShape, LmveShape, OracleShape>;

  explicit ShapeModel(State state) : state_(std::move(state)) {}

  ShapeKind kind() const;
  const State& state() const { return state_; }

  /// Symmetric positive-definite n x n shape at x.
  Matrix shape_at(const Vector& x) const;

 private:
  State state_;
};

/// Throws std::invalid_argument on empty residuals. If the second moment is
/// singular, adds eps * I with eps = 1e-8 * trace / n.
ShapeModel fit_ge(const Matrix& residuals);

/// |N(x)| = max(1, ceil(fraction * m_t)); distances are Euclidean on features
/// standardized with the training statistics.
ShapeModel fit_nle(const Matrix& train_features, const Matrix& residuals, double fraction = 0.05,
                   double mix = 0.95);

/// Indices of the k nearest rows of `rows` to `query` by squared distance,
/// ties broken by index, returned in ascending index order.
std::vector<std::size_t> nearest_rows(const RowMatrix& rows, std::span<const double> query,
                                      std::size_t k);

class CalibrationSetTooSmall : public std::invalid_argument {
 public:
  CalibrationSetTooSmall(std::size_t have, std::size_t required, double eta);
  std::size_t required() const { return required_; }

 private:
  std::size_t required_;
};

/// ceil((m_c + 1) * eta), the rank of the calibration score.
std::size_t conformal_rank(std::size_t calib_size, double eta);
/// Smallest m_c with conformal_rank(m_c, eta) <= m_c.
std::size_t min_calibration_size(double eta);
/// The conformal_rank-th smallest score. Throws CalibrationSetTooSmall.
double conformal_quantile(std::span<const double> scores, double eta);

/// A shape model, its center model and the conformal scale alpha_q; the
/// region at x is the ellipsoid (mu(x), alpha_q * shape_at(x)).
struct CalibratedModel {
  ShapeModel shape;
  std::shared_ptr<const CenterModel> center;
  double alpha_q = 1.0;
  double eta = 0.9;
  std::size_t calib_size = 0;

  Ellipsoid ellipsoid_at(const Vector& x) const;
};

/// Nonconformity scores M(x_i, y_i) under the uncalibrated shape.
std::vector<double> conformity_scores(const ShapeModel& shape, const CenterModel& center,
                                      const Matrix& features, const Matrix& labels);

/// Split-conformal calibration on held-out rows.
CalibratedModel conformal_calibrate(ShapeModel shape, std::shared_ptr<const CenterModel> center,
                                    const Matrix& features, const Matrix& labels, double eta);

struct Evaluation {
  double coverage = 0.0;
  double mean_volume = 0.0;
  std::vector<double> volumes;
};

/// Empirical coverage and mean volume on a test set.
Evaluation evaluate(const CalibratedModel& model, const Matrix& features, const Matrix& labels);

}  // namespace mve
