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

#include "mve/estimators.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "mve/simd/kernels.h"

namespace mve {
namespace {

// Adds a small ridge until the matrix factors.
Matrix ensure_positive_definite(Matrix m) {
  m = symmetrized(m);
  if (Eigen::LLT<Matrix>(m).info() == Eigen::Success) {
    return m;
  }
  const double n = static_cast<double>(m.rows());
  double eps = 1e-8 * std::max(m.trace() / n, std::numeric_limits<double>::min() * 1e10);
  for (int attempt = 0; attempt < 40; ++attempt) {
    Matrix ridged = m;
    ridged.diagonal().array() += eps;
    if (Eigen::LLT<Matrix>(ridged).info() == Eigen::Success) {
      return ridged;
    }
    eps *= 10.0;
  }
  throw NotPositiveDefinite("shape estimate cannot be made positive definite");
}

Matrix second_moment(const RowMatrix& residuals, std::span<const std::size_t> rows) {
  const auto n = residuals.cols();
  Matrix sum = Matrix::Zero(n, n);
  for (std::size_t row : rows) {
    const Vector r = residuals.row(static_cast<Eigen::Index>(row)).transpose();
    sum.noalias() += r * r.transpose();
  }
  return sum / static_cast<double>(rows.size());
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view shape_kind_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kGe:
      return "GE";
    case ShapeKind::kNle:
      return "NLE";
    case ShapeKind::kLmve:
      return "LMVE";
    case ShapeKind::kOracle:
      return "oracle";
  }
  return "unknown";
}

ShapeKind parse_shape_kind(std::string_view name) {
  const std::string lower = lowercase(name);
  if (lower == "ge") return ShapeKind::kGe;
  if (lower == "nle") return ShapeKind::kNle;
  if (lower == "lmve") return ShapeKind::kLmve;
  if (lower == "oracle") return ShapeKind::kOracle;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

ShapeKind ShapeModel::kind() const {
  return std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GeShape>) return ShapeKind::kGe;
        if constexpr (std::is_same_v<T, NleShape>) return ShapeKind::kNle;
        if constexpr (std::is_same_v<T, LmveShape>) return ShapeKind::kLmve;
        if constexpr (std::is_same_v<T, OracleShape>) return ShapeKind::kOracle;
      },
      state_);
}

Matrix ShapeModel::shape_at(const Vector& x) const {
  return std::visit(
      [&](const auto& s) -> Matrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GeShape>) return s.cov;
        if constexpr (std::is_same_v<T, OracleShape>) return s.cond_cov;
        if constexpr (std::is_same_v<T, NleShape> || std::is_same_v<T, LmveShape>) {
          return s.shape_at(x);
        }
      },
      state_);
}

ShapeModel fit_ge(const Matrix& residuals) {
  if (residuals.rows() == 0 || residuals.cols() == 0) {
    throw std::invalid_argument("fit_ge: empty residuals");
  }
  const Matrix raw = residuals.transpose() * residuals / static_cast<double>(residuals.rows());
  return ShapeModel(GeShape{ensure_positive_definite(raw)});
}

std::vector<std::size_t> nearest_rows(const RowMatrix& rows, std::span<const double> query,
                                      std::size_t k) {
  const auto m = static_cast<std::size_t>(rows.rows());
  if (query.size() != static_cast<std::size_t>(rows.cols())) {
    throw std::invalid_argument("nearest_rows: dimension mismatch");
  }
  k = std::min(k, m);
  std::vector<double> dist(m);
  simd::kernels().squared_l2_rows(query.data(), rows.data(), m, query.size(), dist.data());
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (k < m) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                     });
    order.resize(k);
  }
  std::sort(order.begin(), order.end());
  return order;
}

ShapeModel fit_nle(const Matrix& train_features, const Matrix& residuals, double fraction,
                   double mix) {
  if (train_features.rows() == 0 || residuals.rows() == 0) {
    throw std::invalid_argument("fit_nle: empty training set");
  }
  if (train_features.rows() != residuals.rows()) {
    throw std::invalid_argument("fit_nle: row counts differ");
  }
  if (!(fraction > 0.0) || !(fraction <= 1.0)) {
    throw std::invalid_argument("fit_nle: fraction must lie in (0, 1]");
  }
  if (!(mix >= 0.0) || !(mix <= 1.0)) {
    throw std::invalid_argument("fit_nle: mix must lie in [0, 1]");
  }
  NleShape nle;
  nle.standardizer = Standardizer::fit(train_features);
  nle.features = nle.standardizer.apply_rows(train_features);
  nle.residuals = residuals;
  const auto m = static_cast<double>(train_features.rows());
  // Guard against products like 0.05 * 20 landing a hair above an integer.
  const double wanted = std::ceil(fraction * m * (1.0 - 1e-12));
  nle.neighbors = static_cast<std::size_t>(std::max(1.0, wanted));
  nle.mix = mix;
  nle.ge = std::get<GeShape>(fit_ge(residuals).state()).cov;
  return ShapeModel(std::move(nle));
}

Matrix NleShape::shape_at(const Vector& x) const {
  const Vector z = standardizer.apply(x);
  const auto neighbours =
      nearest_rows(features, {z.data(), static_cast<std::size_t>(z.size())}, this->neighbors);
  const Matrix local = second_moment(residuals, neighbours);
  return ensure_positive_definite(mix * local + (1.0 - mix) * ge);
}

CalibrationSetTooSmall::CalibrationSetTooSmall(std::size_t have, std::size_t required, double eta)
    : std::invalid_argument("calibration set of " + std::to_string(have) +
                            " points is too small for coverage " + std::to_string(eta) +
                            "; need at least " + std::to_string(required)),
      required_(required) {}

std::size_t conformal_rank(std::size_t calib_size, double eta) {
  if (!(eta > 0.0) || !(eta < 1.0)) {
    throw std::invalid_argument("conformal_rank: eta must lie in (0, 1)");
  }
  const double target = static_cast<double>(calib_size + 1) * eta;
  // (m_c + 1) * eta is often an integer in exact arithmetic; undo the
  // representation error of eta before taking the ceiling.
  return static_cast<std::size_t>(std::ceil(target - 1e-9 * target));
}

std::size_t min_calibration_size(double eta) {
  std::size_t m = 1;
  while (conformal_rank(m, eta) > m) ++m;
  return m;
}

double conformal_quantile(std::span<const double> scores, double eta) {
  const std::size_t m = scores.size();
  const std::size_t k = conformal_rank(m, eta);
  if (m == 0 || k > m) {
    throw CalibrationSetTooSmall(m, min_calibration_size(eta), eta);
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end());
  return sorted[std::max<std::size_t>(k, 1) - 1];
}

Ellipsoid CalibratedModel::ellipsoid_at(const Vector& x) const {
  return Ellipsoid(center->predict(x), alpha_q * shape.shape_at(x));
}

std::vector<double> conformity_scores(const ShapeModel& shape, const CenterModel& center,
                                      const Matrix& features, const Matrix& labels) {
  if (features.rows() != labels.rows()) {
    throw std::invalid_argument("conformity_scores: row counts differ");
  }
  std::vector<double> scores(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Vector x = features.row(i).transpose();
    const Ellipsoid e(center.predict(x), shape.shape_at(x));
    scores[static_cast<std::size_t>(i)] = mahalanobis(e, labels.row(i).transpose());
  }
  return scores;
}

CalibratedModel conformal_calibrate(ShapeModel shape, std::shared_ptr<const CenterModel> center,
                                    const Matrix& features, const Matrix& labels, double eta) {
  if (!center) {
    throw std::invalid_argument("conformal_calibrate: missing center model");
  }
  const auto m = static_cast<std::size_t>(features.rows());
  if (m == 0 || conformal_rank(m, eta) > m) {
    throw CalibrationSetTooSmall(m, min_calibration_size(eta), eta);
  }
  const auto scores = conformity_scores(shape, *center, features, labels);
  const double alpha = conformal_quantile(scores, eta);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::domain_error("conformal_calibrate: calibration scale is not positive");
  }
  return CalibratedModel{std::move(shape), std::move(center), alpha, eta, m};
}

Evaluation evaluate(const CalibratedModel& model, const Matrix& features, const Matrix& labels) {
  if (features.rows() == 0 || features.rows() != labels.rows()) {
    throw std::invalid_argument("evaluate: need a non-empty test set with matching rows");
  }
  Evaluation ev;
  ev.volumes.reserve(static_cast<std::size_t>(features.rows()));
  std::size_t inside = 0;
  double volume_sum = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Ellipsoid e = model.ellipsoid_at(features.row(i).transpose());
    if (contains(e, labels.row(i).transpose())) ++inside;
    const double v = volume(e);
    ev.volumes.push_back(v);
    volume_sum += v;
  }
  const auto m = static_cast<double>(features.rows());
  ev.coverage = static_cast<double>(inside) / m;
  ev.mean_volume = volume_sum / m;
  return ev;
}

}  // namespace mve
