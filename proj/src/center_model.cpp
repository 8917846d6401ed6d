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

#include "mve/center_model.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "mve/simd/kernels.h"

namespace mve {
namespace {

using json = nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = data.at(i).at(k).get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string_view center_kind_name(CenterKind kind) {
  switch (kind) {
    case CenterKind::kLinearRidge:
      return "linear-ridge";
    case CenterKind::kKnnMean:
      return "knn-mean";
    case CenterKind::kOracleGaussian:
      return "oracle-gaussian";
  }
  return "unknown";
}

CenterKind parse_center_kind(std::string_view name) {
  if (name == "ridge" || name == "linear-ridge") return CenterKind::kLinearRidge;
  if (name == "knn" || name == "knn-mean") return CenterKind::kKnnMean;
  if (name == "oracle" || name == "oracle-gaussian") return CenterKind::kOracleGaussian;
  throw std::invalid_argument("unknown center model: " + std::string(name));
}

CenterModel CenterModel::fit(const Matrix& features, const Matrix& labels,
                             const CenterConfig& config) {
  if (config.kind == CenterKind::kOracleGaussian) {
    if (!config.oracle) {
      throw std::invalid_argument("CenterModel::fit: oracle center needs a conditional Gaussian");
    }
    return oracle(*config.oracle);
  }
  if (features.rows() == 0 || labels.rows() == 0) {
    throw std::invalid_argument("CenterModel::fit: empty training data");
  }
  if (features.rows() != labels.rows()) {
    throw std::invalid_argument("CenterModel::fit: row counts differ");
  }
  if (!features.allFinite() || !labels.allFinite()) {
    throw std::invalid_argument("CenterModel::fit: non-finite inputs");
  }

  CenterModel model;
  model.kind_ = config.kind;
  model.feature_dim_ = static_cast<int>(features.cols());
  model.label_dim_ = static_cast<int>(labels.cols());
  model.standardizer_ = Standardizer::fit(features);
  const Matrix z = model.standardizer_.apply(features);

  if (config.kind == CenterKind::kLinearRidge) {
    if (!(config.ridge_scale > 0.0)) {
      throw std::invalid_argument("CenterModel::fit: ridge_scale must be positive");
    }
    const Vector label_mean = labels.colwise().mean().transpose();
    const Matrix centered = labels.rowwise() - label_mean.transpose();
    Matrix gram = z.transpose() * z;
    const double d = static_cast<double>(std::max<Eigen::Index>(1, z.cols()));
    // Constant columns standardize to zero; keep the system solvable anyway.
    const double rho = config.ridge_scale * std::max(gram.trace() / d, 1.0);
    gram.diagonal().array() += rho;
    const Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("CenterModel::fit: ridge system not solvable");
    }
    model.coef_ = llt.solve(z.transpose() * centered).transpose();
    model.intercept_ = label_mean;
    if (!model.coef_.allFinite()) {
      throw std::runtime_error("CenterModel::fit: non-finite ridge weights");
    }
  } else {
    if (config.knn_k < 1) {
      throw std::invalid_argument("CenterModel::fit: knn_k must be >= 1");
    }
    model.train_z_ = z;
    model.train_y_ = labels;
    model.k_ = std::min<std::size_t>(config.knn_k, static_cast<std::size_t>(features.rows()));
  }
  return model;
}

CenterModel CenterModel::oracle(ConditionalGaussian cond) {
  CenterModel model;
  model.kind_ = CenterKind::kOracleGaussian;
  model.feature_dim_ = static_cast<int>(cond.gain.cols());
  model.label_dim_ = static_cast<int>(cond.gain.rows());
  model.cond_ = std::move(cond);
  return model;
}

Vector CenterModel::predict(const Vector& x) const {
  if (x.size() != feature_dim_) {
    throw std::invalid_argument("CenterModel::predict: feature dimension mismatch");
  }
  switch (kind_) {
    case CenterKind::kLinearRidge:
      return intercept_ + coef_ * standardizer_.apply(x);
    case CenterKind::kKnnMean: {
      const Vector z = standardizer_.apply(x);
      const auto m = static_cast<std::size_t>(train_z_.rows());
      std::vector<double> dist(m);
      simd::kernels().squared_l2_rows(z.data(), train_z_.data(), m,
                                      static_cast<std::size_t>(train_z_.cols()), dist.data());
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      const auto by_distance = [&](std::size_t a, std::size_t b) {
        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
      };
      std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_ - 1),
                       order.end(), by_distance);
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_));
      Vector sum = Vector::Zero(label_dim_);
      for (std::size_t i = 0; i < k_; ++i) {
        sum += train_y_.row(static_cast<Eigen::Index>(order[i])).transpose();
      }
      return sum / static_cast<double>(k_);
    }
    case CenterKind::kOracleGaussian:
      return mve::predict(cond_, x).mean;
  }
  throw std::logic_error("CenterModel::predict: unknown kind");
}

Matrix CenterModel::predict_rows(const Matrix& features) const {
  Matrix out(features.rows(), label_dim_);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.row(i) = predict(features.row(i).transpose()).transpose();
  }
  return out;
}

Matrix CenterModel::residuals(const Matrix& features, const Matrix& labels) const {
  if (labels.cols() != label_dim_ || labels.rows() != features.rows()) {
    throw std::invalid_argument("CenterModel::residuals: shape mismatch");
  }
  return labels - predict_rows(features);
}

Matrix CenterModel::weights() const {
  switch (kind_) {
    case CenterKind::kLinearRidge:
      return coef_ * standardizer_.scale().cwiseInverse().asDiagonal();
    case CenterKind::kOracleGaussian:
      return cond_.gain;
    default:
      throw std::logic_error("CenterModel::weights: model is not linear");
  }
}

Vector CenterModel::bias() const {
  switch (kind_) {
    case CenterKind::kLinearRidge:
      return intercept_ - weights() * standardizer_.mean();
    case CenterKind::kOracleGaussian:
      return cond_.offset;
    default:
      throw std::logic_error("CenterModel::bias: model is not linear");
  }
}

std::string CenterModel::to_json() const {
  json j;
  j["format"] = "mve-center";
  j["version"] = 1;
  j["kind"] = std::string(center_kind_name(kind_));
  j["feature_dim"] = feature_dim_;
  j["label_dim"] = label_dim_;
  if (kind_ != CenterKind::kOracleGaussian) {
    j["standardizer"] = {{"mean", vector_to_json(standardizer_.mean())},
                         {"scale", vector_to_json(standardizer_.scale())}};
  }
  switch (kind_) {
    case CenterKind::kLinearRidge:
      j["coef"] = matrix_to_json(coef_);
      j["intercept"] = vector_to_json(intercept_);
      break;
    case CenterKind::kKnnMean:
      j["k"] = k_;
      j["train_z"] = matrix_to_json(train_z_);
      j["train_y"] = matrix_to_json(train_y_);
      break;
    case CenterKind::kOracleGaussian:
      j["gain"] = matrix_to_json(cond_.gain);
      j["offset"] = vector_to_json(cond_.offset);
      j["cond_cov"] = matrix_to_json(cond_.cond_cov);
      break;
  }
  return j.dump();
}

CenterModel CenterModel::from_json(std::string_view text) {
  const json j = json::parse(text);
  if (j.at("format") != "mve-center" || j.at("version") != 1) {
    throw std::runtime_error("CenterModel::from_json: unsupported format");
  }
  CenterModel model;
  model.kind_ = parse_center_kind(j.at("kind").get<std::string>());
  model.feature_dim_ = j.at("feature_dim").get<int>();
  model.label_dim_ = j.at("label_dim").get<int>();
  if (j.contains("standardizer")) {
    model.standardizer_ = Standardizer(vector_from_json(j["standardizer"].at("mean")),
                                       vector_from_json(j["standardizer"].at("scale")));
  }
  switch (model.kind_) {
    case CenterKind::kLinearRidge:
      model.coef_ = matrix_from_json(j.at("coef"));
      model.intercept_ = vector_from_json(j.at("intercept"));
      break;
    case CenterKind::kKnnMean:
      model.k_ = j.at("k").get<std::size_t>();
      model.train_z_ = matrix_from_json(j.at("train_z"));
      model.train_y_ = matrix_from_json(j.at("train_y"));
      break;
    case CenterKind::kOracleGaussian:
      model.cond_.gain = matrix_from_json(j.at("gain"));
      model.cond_.offset = vector_from_json(j.at("offset"));
      model.cond_.cond_cov = matrix_from_json(j.at("cond_cov"));
      break;
  }
  return model;
}

}  // namespace mve
