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
#include <functional>

#include "mve/dataset.h"
#include "mve/ellipsoid.h"
#include "mve/linalg.h"

namespace mve {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
/// Series expansion below x = a + 1, Lentz continued fraction above.
double regularized_gamma_p(double a, double x);

/// CDF of the chi-square distribution with `dof` degrees of freedom.
double chi2_cdf(double x, int dof);

/// Inverse chi-square CDF. Requires 0 <= p < 1 and dof >= 1, otherwise
/// throws std::invalid_argument. Bracketing bisection on chi2_cdf, so the
/// result is monotone in p.
double chi2_inv_cdf(double p, int dof);

/// Minimum-volume region holding probability `eta` of N(mean, cov):
/// the ellipsoid (mean, chi2_inv_cdf(eta, n) * cov). eta must lie in (0, 1);
/// eta = 0 would give a degenerate zero shape and is rejected.
Ellipsoid optimal_single_ellipsoid(const Vector& mean, const Matrix& cov, double eta);

/// Volume of optimal_single_ellipsoid: V_n * kappa^(n/2) * det(cov)^(1/2).
double optimal_gaussian_volume(const Matrix& cov, double eta);

/// Joint law of (x, y) with x in R^d first, then y in R^n.
struct JointGaussianSpec {
  Vector mean;  // d + n
  Matrix cov;   // (d + n) x (d + n)
  int d = 0;
  int n = 0;

  /// Throws std::invalid_argument on inconsistent sizes, NotPositiveDefinite
  /// if cov is not SPD.
  void validate() const;

  Vector mean_x() const { return mean.head(d); }
  Vector mean_y() const { return mean.tail(n); }
  Matrix cov_xx() const { return cov.topLeftCorner(d, d); }
  Matrix cov_xy() const { return cov.topRightCorner(d, n); }
  Matrix cov_yx() const { return cov.bottomLeftCorner(n, d); }
  Matrix cov_yy() const { return cov.bottomRightCorner(n, n); }
};

/// Random well-conditioned joint law where y depends linearly on x.
JointGaussianSpec random_joint_gaussian(int d, int n, std::uint64_t seed);

/// y | x ~ N(offset + gain * x, cond_cov); cond_cov does not depend on x.
struct ConditionalGaussian {
  Matrix gain;      // n x d
  Vector offset;    // n
  Matrix cond_cov;  // n x n
};

struct GaussianPrediction {
  Vector mean;
  Matrix cov;
};

/// Schur-complement conditioning. Throws NotPositiveDefinite if cov_xx is singular.
ConditionalGaussian condition(const JointGaussianSpec& law);

GaussianPrediction predict(const ConditionalGaussian& cond, const Vector& x);

/// m i.i.d. draws as L z + mean, L the Cholesky factor of cov; deterministic in seed.
Dataset sample_joint(const JointGaussianSpec& law, std::size_t m, std::uint64_t seed);

using RegionFn = std::function<Ellipsoid(const Vector& x)>;

/// Fraction of `draws` fresh joint samples whose y lies in region(x).
double mc_coverage(const RegionFn& region, const JointGaussianSpec& law, std::size_t draws,
                   std::uint64_t seed);

}  // namespace mve
