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

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mve/ellipsoid.h"

using namespace mve;

namespace {

Matrix random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + 0.2 * Matrix::Identity(n, n);
}

Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector v2(double a, double b) { return Vector{{a, b}}; }

}  // namespace

TEST_CASE("mahalanobis examples") {
  CHECK(mahalanobis(Ellipsoid(Vector::Zero(2), Matrix::Identity(2, 2)), v2(1, 0)) ==
        doctest::Approx(1.0));
  CHECK(mahalanobis(Ellipsoid(Vector::Zero(2), m2(4, 0, 0, 1)), v2(2, 0)) == doctest::Approx(1.0));
  // inverse of [[2,1],[1,2]] is [[2,-1],[-1,2]] / 3
  CHECK(mahalanobis(Ellipsoid(Vector::Zero(2), m2(2, 1, 1, 2)), v2(1, 1)) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("volume examples") {
  const double pi = std::numbers::pi;
  CHECK(volume(Ellipsoid(Vector::Zero(2), Matrix::Identity(2, 2))) == doctest::Approx(pi));
  CHECK(volume(Ellipsoid(Vector::Zero(2), m2(4, 0, 0, 9))) == doctest::Approx(6 * pi));
  CHECK(volume(Ellipsoid(Vector::Zero(3), Matrix::Identity(3, 3))) == doctest::Approx(4 * pi / 3));
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(4) == doctest::Approx(pi * pi / 2));
}

TEST_CASE("contains examples") {
  const Ellipsoid e(Vector::Zero(2), Matrix::Identity(2, 2));
  CHECK(contains(e, v2(0, 0)));
  CHECK(contains(e, v2(1, 0)));
  CHECK_FALSE(contains(e, v2(1.001, 0)));
}

TEST_CASE("scale_shape examples") {
  const Ellipsoid e(Vector::Zero(2), Matrix::Identity(2, 2));
  CHECK(mahalanobis(e, v2(2, 0)) == doctest::Approx(4.0));
  const Ellipsoid s = scale_shape(e, 4.0);
  CHECK(mahalanobis(s, v2(2, 0)) == doctest::Approx(1.0));
  CHECK(volume(s) == doctest::Approx(4.0 * volume(e)));
  const Ellipsoid same = scale_shape(e, 1.0);
  CHECK(same.shape() == e.shape());
  CHECK(same.center() == e.center());
  CHECK_THROWS_AS(scale_shape(e, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(scale_shape(e, -1.0), std::invalid_argument);
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(Ellipsoid(Vector::Zero(2), m2(1, 2, 2, 1)), NotPositiveDefinite);
  CHECK_THROWS_AS(Ellipsoid(Vector::Zero(2), m2(1, 0.5, 0, 1)), NotPositiveDefinite);
  CHECK_THROWS_AS(Ellipsoid(Vector::Zero(3), Matrix::Identity(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(Ellipsoid(Vector(0), Matrix(0, 0)), std::invalid_argument);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(Ellipsoid(Vector::Zero(2), bad), NotPositiveDefinite);
  // Round-off asymmetry is tolerated and symmetrized away.
  const Ellipsoid ok(Vector::Zero(2), m2(2, 1 + 1e-12, 1, 2));
  CHECK(ok.shape()(0, 1) == ok.shape()(1, 0));
}

TEST_CASE("factor invariants") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix c = random_spd(n, rng);
    const SpdFactor f = SpdFactor::compute(c);
    for (int i = 0; i < n; ++i) CHECK(f.lower()(i, i) > 0.0);
    CHECK((f.reconstruct() - c).cwiseAbs().maxCoeff() <= 1e-8 * c.cwiseAbs().maxCoeff());
    CHECK(f.log_det() == doctest::Approx(std::log(c.determinant())).epsilon(1e-10));
    const Vector b = random_vector(n, rng);
    CHECK((c * f.solve(b) - b).norm() <= 1e-9 * (1 + b.norm()));
    CHECK(f.quadratic_form(b) == doctest::Approx(b.dot(c.ldlt().solve(b))).epsilon(1e-10));
  }
}

TEST_CASE("scaling and positivity properties") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> alpha_dist(0.01, 100.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 5;
    const Ellipsoid e(random_vector(n, rng), random_spd(n, rng));
    const double alpha = alpha_dist(rng);
    const Ellipsoid s = scale_shape(e, alpha);
    const Vector y = random_vector(n, rng);
    CHECK(mahalanobis(s, y) * alpha == doctest::Approx(mahalanobis(e, y)).epsilon(1e-10));
    CHECK(volume(s) == doctest::Approx(std::pow(alpha, 0.5 * n) * volume(e)).epsilon(1e-10));
    CHECK(mahalanobis(e, y) >= 0.0);
    CHECK(mahalanobis(e, e.center()) == 0.0);
  }
}

TEST_CASE("affine covariance of containment") {
  std::mt19937_64 rng(7);
  int agreements = 0;
  int total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const Ellipsoid e(random_vector(n, rng), random_spd(n, rng));
    Matrix a(n, n);
    do {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = std::normal_distribution<double>()(rng);
    } while (std::abs(a.determinant()) < 0.1);
    const Ellipsoid t(a * e.center(), a * e.shape() * a.transpose());
    for (int k = 0; k < 50; ++k) {
      const Vector y = e.center() + 1.5 * random_vector(n, rng);
      const double m = mahalanobis(e, y);
      if (std::abs(m - 1.0) < 1e-9) continue;  // boundary round-off
      ++total;
      agreements += contains(e, y) == contains(t, a * y);
      CHECK(mahalanobis(t, a * y) == doctest::Approx(m).epsilon(1e-8));
    }
  }
  CHECK(agreements == total);
}
