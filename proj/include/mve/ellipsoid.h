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

#include <stdexcept>
#include <string>

#include "mve/linalg.h"

namespace mve {

// Raised when a shape matrix has no Cholesky factor.
class NotPositiveDefinite : public std::domain_error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : std::domain_error(what) {}
};

/// Cholesky factor C = L * L^T of a symmetric positive-definite matrix,
/// shared by every quadratic form and determinant taken on that matrix.
class SpdFactor {
 public:
  /// Symmetrizes `matrix` as (C + C^T) / 2 before factoring.
  /// Throws NotPositiveDefinite if the factorization fails or if `matrix`
  /// is visibly non-symmetric (beyond 1e-6 of its largest entry).
  static SpdFactor compute(const Matrix& matrix);

  int dim() const { return static_cast<int>(lower_.rows()); }
  const Matrix& lower() const { return lower_; }
  double log_det() const { return log_det_; }

  /// v^T C^{-1} v through a single triangular solve.
  double quadratic_form(const Vector& v) const;
  /// C^{-1} b.
  Vector solve(const Vector& b) const;
  Matrix inverse() const;
  Matrix reconstruct() const { return lower_ * lower_.transpose(); }

  /// Factor of alpha * C without refactoring.
  SpdFactor scaled(double alpha) const;

 private:
  SpdFactor(Matrix lower, double log_det) : lower_(std::move(lower)), log_det_(log_det) {}

  Matrix lower_;
  double log_det_ = 0.0;
};

/// The set { y : (y - center)^T shape^{-1} (y - center) <= 1 }.
class Ellipsoid {
 public:
  /// Throws std::invalid_argument on size mismatch or empty center, and
  /// NotPositiveDefinite if `shape` is not SPD.
  Ellipsoid(Vector center, const Matrix& shape);

  int dim() const { return static_cast<int>(center_.size()); }
  const Vector& center() const { return center_; }
  const Matrix& shape() const { return shape_; }
  const SpdFactor& factor() const { return factor_; }

 private:
  friend Ellipsoid scale_shape(const Ellipsoid& e, double alpha);
  Ellipsoid(Vector center, Matrix shape, SpdFactor factor)
      : center_(std::move(center)), shape_(std::move(shape)), factor_(std::move(factor)) {}

  Vector center_;
  Matrix shape_;
  SpdFactor factor_;
};

/// Volume of the unit ball in R^n, pi^(n/2) / Gamma(n/2 + 1).
double unit_ball_volume(int n);

/// Volume of an ellipsoid in R^n whose shape has log-determinant `log_det`.
double ellipsoid_volume(int n, double log_det);

/// Squared Mahalanobis distance (y - center)^T C^{-1} (y - center).
double mahalanobis(const Ellipsoid& e, const Vector& y);

double volume(const Ellipsoid& e);

/// Boundary points count as covered.
bool contains(const Ellipsoid& e, const Vector& y);

/// Same center, shape alpha * C. Throws std::invalid_argument unless alpha > 0.
Ellipsoid scale_shape(const Ellipsoid& e, double alpha);

}  // namespace mve
