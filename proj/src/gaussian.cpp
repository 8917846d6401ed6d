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

#include "mve/gaussian.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace mve {
namespace {

constexpr int kMaxIterations = 1000;
constexpr double kEpsilon = 1e-17;

double gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < kMaxIterations; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEpsilon) {
      break;
    }
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail Q(a, x) by the modified Lentz method.
double gamma_continued_fraction(double a, double x) {
  constexpr double kTiny = std::numeric_limits<double>::min() / kEpsilon;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) {
      break;
    }
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw std::invalid_argument("regularized_gamma_p: need a > 0 and x >= 0");
  }
  if (x == 0.0) {
    return 0.0;
  }
  if (std::isinf(x)) {
    return 1.0;
  }
  if (x < a + 1.0) {
    return gamma_series(a, x);
  }
  return 1.0 - gamma_continued_fraction(a, x);
}

double chi2_cdf(double x, int dof) {
  if (dof < 1) {
    throw std::invalid_argument("chi2_cdf: dof must be >= 1");
  }
  if (x <= 0.0) {
    return 0.0;
  }
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_inv_cdf(double p, int dof) {
  if (dof < 1) {
    throw std::invalid_argument("chi2_inv_cdf: dof must be >= 1");
  }
  if (!(p >= 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("chi2_inv_cdf: p must lie in [0, 1)");
  }
  if (p == 0.0) {
    return 0.0;
  }
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  while (chi2_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
  }
  // Stop once the bracket no longer shrinks in floating point.
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    if (chi2_cdf(mid, dof) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double f_lo = chi2_cdf(lo, dof);
  const double f_hi = chi2_cdf(hi, dof);
  return (p - f_lo) <= (f_hi - p) ? lo : hi;
}

Ellipsoid optimal_single_ellipsoid(const Vector& mean, const Matrix& cov, double eta) {
  if (!(eta > 0.0) || !(eta < 1.0)) {
    throw std::invalid_argument("optimal_single_ellipsoid: eta must lie in (0, 1)");
  }
  const double kappa = chi2_inv_cdf(eta, static_cast<int>(mean.size()));
  return Ellipsoid(mean, kappa * cov);
}

double optimal_gaussian_volume(const Matrix& cov, double eta) {
  if (!(eta > 0.0) || !(eta < 1.0)) {
    throw std::invalid_argument("optimal_gaussian_volume: eta must lie in (0, 1)");
  }
  const int n = static_cast<int>(cov.rows());
  const double kappa = chi2_inv_cdf(eta, n);
  const SpdFactor factor = SpdFactor::compute(cov);
  return ellipsoid_volume(n, factor.log_det() + n * std::log(kappa));
}

void JointGaussianSpec::validate() const {
  if (d < 1 || n < 1) {
    throw std::invalid_argument("JointGaussianSpec: d and n must be >= 1");
  }
  if (mean.size() != d + n || cov.rows() != d + n || cov.cols() != d + n) {
    throw std::invalid_argument("JointGaussianSpec: block sizes inconsistent with d + n");
  }
  SpdFactor::compute(cov);
}

JointGaussianSpec random_joint_gaussian(int d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k = d + n;
  Matrix a(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      a(i, j) = normal(rng);
    }
  }
  JointGaussianSpec law;
  law.d = d;
  law.n = n;
  law.cov = symmetrized(a * a.transpose() / k + 0.5 * Matrix::Identity(k, k));
  law.mean = Vector(k);
  for (int i = 0; i < k; ++i) {
    law.mean(i) = normal(rng);
  }
  return law;
}

ConditionalGaussian condition(const JointGaussianSpec& law) {
  law.validate();
  const Eigen::LLT<Matrix> xx(law.cov_xx());
  if (xx.info() != Eigen::Success) {
    throw NotPositiveDefinite("condition: singular feature covariance");
  }
  ConditionalGaussian cond;
  // gain = S_yx S_xx^{-1}, i.e. S_xx gain^T = S_xy.
  cond.gain = xx.solve(law.cov_xy()).transpose();
  cond.offset = law.mean_y() - cond.gain * law.mean_x();
  cond.cond_cov = symmetrized(law.cov_yy() - cond.gain * law.cov_xy());
  return cond;
}

GaussianPrediction predict(const ConditionalGaussian& cond, const Vector& x) {
  if (x.size() != cond.gain.cols()) {
    throw std::invalid_argument("predict: feature dimension mismatch");
  }
  return {cond.offset + cond.gain * x, cond.cond_cov};
}

Dataset sample_joint(const JointGaussianSpec& law, std::size_t m, std::uint64_t seed) {
  law.validate();
  if (m < 1) {
    throw std::invalid_argument("sample_joint: m must be >= 1");
  }
  const Matrix lower = SpdFactor::compute(law.cov).lower();
  const int k = law.d + law.n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.name = "gaussian";
  ds.features.resize(static_cast<Eigen::Index>(m), law.d);
  ds.labels.resize(static_cast<Eigen::Index>(m), law.n);
  Vector z(k);
  for (std::size_t i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) {
      z(j) = normal(rng);
    }
    const Vector draw = law.mean + lower * z;
    ds.features.row(static_cast<Eigen::Index>(i)) = draw.head(law.d).transpose();
    ds.labels.row(static_cast<Eigen::Index>(i)) = draw.tail(law.n).transpose();
  }
  for (int j = 0; j < law.d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  for (int j = 0; j < law.n; ++j) ds.label_names.push_back("y" + std::to_string(j));
  return ds;
}

double mc_coverage(const RegionFn& region, const JointGaussianSpec& law, std::size_t draws,
                   std::uint64_t seed) {
  law.validate();
  if (draws < 1) {
    throw std::invalid_argument("mc_coverage: need at least one draw");
  }
  const Matrix lower = SpdFactor::compute(law.cov).lower();
  const int k = law.d + law.n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(k);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    for (int j = 0; j < k; ++j) {
      z(j) = normal(rng);
    }
    const Vector draw = law.mean + lower * z;
    if (contains(region(draw.head(law.d)), draw.tail(law.n))) {
      ++inside;
    }
  }
  return static_cast<double>(inside) / static_cast<double>(draws);
}

}  // namespace mve
