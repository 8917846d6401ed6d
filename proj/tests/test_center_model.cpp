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

#include <random>

#include "doctest.h"
#include "mve/center_model.h"
#include "mve/estimators.h"

using namespace mve;

namespace {

Matrix gaussian_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

}  // namespace

TEST_CASE("noiseless linear data is recovered") {
  std::mt19937_64 rng(1);
  const Matrix a = gaussian_matrix(2, 4, rng);
  const Matrix x = gaussian_matrix(300, 4, rng, 3.0);
  const Matrix y = x * a.transpose();
  CenterConfig cfg;
  cfg.ridge_scale = 1e-10;
  const CenterModel m = CenterModel::fit(x, y, cfg);
  CHECK((m.weights() - a).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(m.bias().cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(m.residuals(x, y).cwiseAbs().maxCoeff() <= 1e-5);
  // at the training feature mean (standardized zero) the prediction is the bias term of the
  // standardized model, i.e. the label mean
  const Vector xm = x.colwise().mean().transpose();
  const Vector ym = y.colwise().mean().transpose();
  CHECK((m.predict(xm) - ym).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("constant target") {
  std::mt19937_64 rng(2);
  const Matrix x = gaussian_matrix(50, 3, rng);
  Matrix y(50, 2);
  y.col(0).setConstant(4.5);
  y.col(1).setConstant(-1.25);
  const CenterModel m = CenterModel::fit(x, y, CenterConfig{});
  for (int i = 0; i < 5; ++i) {
    const Vector p = m.predict(Vector(gaussian_matrix(1, 3, rng, 10.0).row(0).transpose()));
    CHECK(p(0) == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(p(1) == doctest::Approx(-1.25).epsilon(1e-12));
  }
}

TEST_CASE("knn mean with k = m is the label mean") {
  std::mt19937_64 rng(3);
  const Matrix x = gaussian_matrix(40, 3, rng);
  const Matrix y = gaussian_matrix(40, 2, rng);
  CenterConfig cfg;
  cfg.kind = CenterKind::kKnnMean;
  cfg.knn_k = 40;
  const CenterModel m = CenterModel::fit(x, y, cfg);
  const Vector mean = y.colwise().mean().transpose();
  for (int i = 0; i < 5; ++i) {
    const Vector p = m.predict(Vector(gaussian_matrix(1, 3, rng).row(0).transpose()));
    CHECK((p - mean).cwiseAbs().maxCoeff() <= 1e-12);
  }
  cfg.knn_k = 1;
  const CenterModel one = CenterModel::fit(x, y, cfg);
  CHECK((one.predict(Vector(x.row(7).transpose())) - Vector(y.row(7).transpose())).norm() == 0.0);
}

TEST_CASE("oracle center delegates to the conditional law") {
  const JointGaussianSpec s = random_joint_gaussian(3, 2, 4);
  const ConditionalGaussian c = condition(s);
  CenterConfig cfg;
  cfg.kind = CenterKind::kOracleGaussian;
  CHECK_THROWS_AS(CenterModel::fit(Matrix::Zero(5, 3), Matrix::Zero(5, 2), cfg), std::invalid_argument);
  cfg.oracle = c;
  const Dataset ds = sample_joint(s, 20, 1);
  const CenterModel m = CenterModel::fit(ds.features, ds.labels, cfg);
  const Vector x{{0.3, -1.0, 2.0}};
  CHECK((m.predict(x) - predict(c, x).mean).norm() <= 1e-12);
  CHECK((CenterModel::oracle(c).predict(x) - predict(c, x).mean).norm() <= 1e-12);
}

TEST_CASE("ridge prediction is affine") {
  std::mt19937_64 rng(5);
  const Matrix x = gaussian_matrix(100, 5, rng);
  const Matrix y = gaussian_matrix(100, 2, rng);
  const CenterModel m = CenterModel::fit(x, y, CenterConfig{});
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    const Vector x1 = gaussian_matrix(1, 5, rng, 4.0).row(0).transpose();
    const Vector x2 = gaussian_matrix(1, 5, rng, 4.0).row(0).transpose();
    const double a = u(rng);
    const Vector lhs = m.predict(a * x1 + (1 - a) * x2);
    const Vector rhs = a * m.predict(x1) + (1 - a) * m.predict(x2);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * (1 + rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("batch and single predictions agree; errors") {
  std::mt19937_64 rng(6);
  const Matrix x = gaussian_matrix(30, 2, rng);
  const Matrix y = gaussian_matrix(30, 3, rng);
  for (auto kind : {CenterKind::kLinearRidge, CenterKind::kKnnMean}) {
    CenterConfig cfg;
    cfg.kind = kind;
    cfg.knn_k = 4;
    const CenterModel m = CenterModel::fit(x, y, cfg);
    const Matrix p = m.predict_rows(x);
    for (int i = 0; i < 30; ++i) {
      CHECK((p.row(i).transpose() - m.predict(Vector(x.row(i).transpose()))).norm() == 0.0);
    }
    CHECK_THROWS_AS(m.predict(Vector::Zero(3)), std::invalid_argument);
  }
  CHECK_THROWS_AS(CenterModel::fit(Matrix(0, 2), Matrix(0, 3), CenterConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(CenterModel::fit(x, gaussian_matrix(29, 3, rng), CenterConfig{}),
                  std::invalid_argument);
  CHECK(parse_center_kind("knn") == CenterKind::kKnnMean);
  CHECK(center_kind_name(CenterKind::kLinearRidge) == "linear-ridge");
  CHECK_THROWS_AS(parse_center_kind("svr"), std::invalid_argument);
}

TEST_CASE("json round trip predicts bit-identically") {
  std::mt19937_64 rng(7);
  const Matrix x = gaussian_matrix(60, 3, rng);
  const Matrix y = gaussian_matrix(60, 2, rng);
  for (auto kind : {CenterKind::kLinearRidge, CenterKind::kKnnMean}) {
    CenterConfig cfg;
    cfg.kind = kind;
    const CenterModel m = CenterModel::fit(x, y, cfg);
    const CenterModel back = CenterModel::from_json(m.to_json());
    CHECK(back.predict_rows(x) == m.predict_rows(x));
    CHECK(back.to_json() == m.to_json());
  }
}

TEST_CASE("fitting shape models leaves the center untouched") {
  const JointGaussianSpec s = random_joint_gaussian(3, 2, 8);
  const Dataset ds = sample_joint(s, 400, 2);
  const CenterModel m = CenterModel::fit(ds.features, ds.labels, CenterConfig{});
  const Matrix before = m.residuals(ds.features, ds.labels);
  const std::string json_before = m.to_json();
  const ShapeModel ge = fit_ge(before);
  const ShapeModel nle = fit_nle(ds.features, before);
  (void)ge.shape_at(Vector::Zero(3));
  (void)nle.shape_at(Vector::Zero(3));
  CHECK(m.residuals(ds.features, ds.labels) == before);
  CHECK(m.to_json() == json_before);
}
