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

#include "mve/ellipsoid.h"

#include <cmath>
#include <numbers>

namespace mve {

SpdFactor SpdFactor::compute(const Matrix& matrix) {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("SpdFactor: matrix must be square and non-empty");
  }
  if (!matrix.allFinite()) {
    throw NotPositiveDefinite("SpdFactor: matrix has non-finite entries");
  }
  const double scale = matrix.cwiseAbs().maxCoeff();
  const double asymmetry = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > 1e-6 * scale) {
    throw NotPositiveDefinite("SpdFactor: matrix is not symmetric");
  }
  Eigen::LLT<Matrix> llt(symmetrized(matrix));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("SpdFactor: matrix is not positive definite");
  }
  Matrix lower = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double pivot = lower(i, i);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw NotPositiveDefinite("SpdFactor: non-positive pivot");
    }
    log_det += 2.0 * std::log(pivot);
  }
  return SpdFactor(std::move(lower), log_det);
}

double SpdFactor::quadratic_form(const Vector& v) const {
  if (v.size() != lower_.rows()) {
    throw std::invalid_argument("SpdFactor::quadratic_form: dimension mismatch");
  }
  const Vector w = lower_.triangularView<Eigen::Lower>().solve(v);
  return w.squaredNorm();
}

Vector SpdFactor::solve(const Vector& b) const {
  if (b.size() != lower_.rows()) {
    throw std::invalid_argument("SpdFactor::solve: dimension mismatch");
  }
  const Vector w = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(w);
}

Matrix SpdFactor::inverse() const {
  const Matrix identity = Matrix::Identity(lower_.rows(), lower_.cols());
  const Matrix w = lower_.triangularView<Eigen::Lower>().solve(identity);
  return w.transpose() * w;
}

SpdFactor SpdFactor::scaled(double alpha) const {
  return SpdFactor(std::sqrt(alpha) * lower_, log_det_ + lower_.rows() * std::log(alpha));
}

Ellipsoid::Ellipsoid(Vector center, const Matrix& shape)
    : center_(std::move(center)), shape_(), factor_(SpdFactor::compute(shape)) {
  if (center_.size() == 0) {
    throw std::invalid_argument("Ellipsoid: empty center");
  }
  if (shape.rows() != center_.size()) {
    throw std::invalid_argument("Ellipsoid: center and shape dimensions differ");
  }
  shape_ = symmetrized(shape);
}

double unit_ball_volume(int n) {
  const double half = 0.5 * n;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0));
}

double ellipsoid_volume(int n, double log_det) {
  const double half = 0.5 * n;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0) + 0.5 * log_det);
}

double mahalanobis(const Ellipsoid& e, const Vector& y) {
  if (y.size() != e.dim()) {
    throw std::invalid_argument("mahalanobis: dimension mismatch");
  }
  return e.factor().quadratic_form(y - e.center());
}

double volume(const Ellipsoid& e) { return ellipsoid_volume(e.dim(), e.factor().log_det()); }

bool contains(const Ellipsoid& e, const Vector& y) { return mahalanobis(e, y) <= 1.0; }

Ellipsoid scale_shape(const Ellipsoid& e, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("scale_shape: alpha must be positive and finite");
  }
  return Ellipsoid(e.center_, alpha * e.shape_, e.factor_.scaled(alpha));
}

}  // namespace mve
