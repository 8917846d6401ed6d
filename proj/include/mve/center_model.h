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
#include <optional>
#include <string>
#include <string_view>

#include "mve/dataset.h"
#include "mve/gaussian.h"
#include "mve/linalg.h"

namespace mve {

enum class CenterKind { kLinearRidge, kKnnMean, kOracleGaussian };

std::string_view center_kind_name(CenterKind kind);
/// Accepts "ridge"/"linear-ridge", "knn"/"knn-mean", "oracle"/"oracle-gaussian".
CenterKind parse_center_kind(std::string_view name);

struct CenterConfig {
  CenterKind kind = CenterKind::kLinearRidge;
  // rho = ridge_scale * trace(Z^T Z) / d on standardized features Z.
  double ridge_scale = 1e-3;
  std::size_t knn_k = 10;
  std::optional<ConditionalGaussian> oracle;  // required for kOracleGaussian
};

/// Predictor of ellipsoid centers mu(x). Fitted once on the training split
/// and immutable afterwards; every shape model reads it through const access.
class CenterModel {
 public:
  /// Throws std::invalid_argument on empty or non-finite data, or a missing
  /// oracle for kOracleGaussian.
  static CenterModel fit(const Matrix& features, const Matrix& labels, const CenterConfig& config);
  static CenterModel oracle(ConditionalGaussian cond);

  CenterKind kind() const { return kind_; }
  int feature_dim() const { return feature_dim_; }
  int label_dim() const { return label_dim_; }
  const Standardizer& standardizer() const { return standardizer_; }

  Vector predict(const Vector& x) const;
  Matrix predict_rows(const Matrix& features) const;
  /// labels - predict_rows(features)
  Matrix residuals(const Matrix& features, const Matrix& labels) const;

  /// Linear-ridge coefficients mapped back to raw feature units:
  /// predict(x) = weights() * x + bias().
  Matrix weights() const;
  Vector bias() const;

  /// JSON text; from_json(to_json()) predicts bit-identically.
  std::string to_json() const;
  static CenterModel from_json(std::string_view text);

 private:
  CenterKind kind_ = CenterKind::kLinearRidge;
  int feature_dim_ = 0;
  int label_dim_ = 0;
  Standardizer standardizer_;
  Matrix coef_;       // ridge: n x d on standardized features
  Vector intercept_;  // ridge: label means
  RowMatrix train_z_;  // knn: standardized training features
  Matrix train_y_;     // knn: training labels
  std::size_t k_ = 0;
  ConditionalGaussian cond_;
};

}  // namespace mve
