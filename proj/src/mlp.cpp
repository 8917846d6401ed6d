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

#include "mve/mlp.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mve/ellipsoid.h"
#include "mve/simd/kernels.h"

namespace mve {
namespace {

struct ForwardState {
  Vector a1, h1, mask1;
  Vector a2, h2, mask2;
  Vector out;
};

void run_forward(const MlpParams& p, const double* x, DropoutMasks* dropout, ForwardState& s) {
  const auto& k = simd::kernels();
  const auto d = static_cast<std::size_t>(p.l1.cols());
  const auto hidden = static_cast<std::size_t>(p.l1.rows());
  const auto mid = static_cast<std::size_t>(p.l2.rows());
  const auto outputs = static_cast<std::size_t>(p.l3.rows());
  s.a1.resize(static_cast<Eigen::Index>(hidden));
  s.a2.resize(static_cast<Eigen::Index>(mid));
  s.out.resize(static_cast<Eigen::Index>(outputs));
  s.mask1.setOnes(static_cast<Eigen::Index>(hidden));
  s.mask2.setOnes(static_cast<Eigen::Index>(mid));

  k.gemv(p.l1.data(), hidden, d, x, p.b1.data(), s.a1.data());
  if (dropout != nullptr) dropout->draw({s.mask1.data(), hidden});
  s.h1 = s.a1.cwiseMax(0.0).cwiseProduct(s.mask1);

  k.gemv(p.l2.data(), mid, hidden, s.h1.data(), p.b2.data(), s.a2.data());
  if (dropout != nullptr) dropout->draw({s.mask2.data(), mid});
  s.h2 = s.a2.cwiseMax(0.0).cwiseProduct(s.mask2);

  k.gemv(p.l3.data(), outputs, mid, s.h2.data(), p.b3.data(), s.out.data());
}

// Accumulates the parameter gradient for one sample given dloss/d(outputs).
void run_backward(const MlpParams& p, const double* x, const ForwardState& s,
                  const Vector& g_out, MlpParams& grad) {
  const auto& k = simd::kernels();
  const auto d = static_cast<std::size_t>(p.l1.cols());
  const auto hidden = static_cast<std::size_t>(p.l1.rows());
  const auto mid = static_cast<std::size_t>(p.l2.rows());
  const auto outputs = static_cast<std::size_t>(p.l3.rows());

  Vector g_h2 = Vector::Zero(static_cast<Eigen::Index>(mid));
  for (std::size_t i = 0; i < outputs; ++i) {
    const double g = g_out(static_cast<Eigen::Index>(i));
    if (g == 0.0) continue;
    k.axpy(g, s.h2.data(), grad.l3.data() + i * mid, mid);
    k.axpy(g, p.l3.data() + i * mid, g_h2.data(), mid);
  }
  grad.b3 += g_out;

  Vector g_a2 = g_h2.cwiseProduct(s.mask2);
  for (Eigen::Index i = 0; i < g_a2.size(); ++i) {
    if (!(s.a2(i) > 0.0)) g_a2(i) = 0.0;
  }
  Vector g_h1 = Vector::Zero(static_cast<Eigen::Index>(hidden));
  for (std::size_t i = 0; i < mid; ++i) {
    const double g = g_a2(static_cast<Eigen::Index>(i));
    if (g == 0.0) continue;
    k.axpy(g, s.h1.data(), grad.l2.data() + i * hidden, hidden);
    k.axpy(g, p.l2.data() + i * hidden, g_h1.data(), hidden);
  }
  grad.b2 += g_a2;

  Vector g_a1 = g_h1.cwiseProduct(s.mask1);
  for (Eigen::Index i = 0; i < g_a1.size(); ++i) {
    if (!(s.a1(i) > 0.0)) g_a1(i) = 0.0;
  }
  for (std::size_t i = 0; i < hidden; ++i) {
    const double g = g_a1(static_cast<Eigen::Index>(i));
    if (g == 0.0) continue;
    k.axpy(g, x, grad.l1.data() + i * d, d);
  }
  grad.b1 += g_a1;
}

Matrix head_matrix(const Vector& out, int n) {
  Matrix r(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) r(i, j) = out(i * n + j);
  }
  return r;
}

Vector flatten_head(const Matrix& g) {
  const auto n = g.rows();
  Vector out(n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out(i * n + j) = g(i, j);
  }
  return out;
}

Matrix shape_from_head(const Matrix& r, double epsilon) {
  Matrix c = r.transpose() * r;
  c = symmetrized(c);
  c.diagonal().array() += epsilon;
  return c;
}

template <typename Fn>
void for_rows(std::span<const std::size_t> rows, Eigen::Index total, Fn&& fn) {
  if (rows.empty()) {
    for (Eigen::Index i = 0; i < total; ++i) fn(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i : rows) fn(i);
  }
}

void check_input(const MlpParams& p, Eigen::Index cols) {
  if (cols != p.input_dim()) {
    throw std::invalid_argument("shape network: feature dimension mismatch");
  }
}

LossGradient lmve_objective(const MlpParams& params, const ShapeBatch& batch, double lambda,
                            double epsilon, DropoutMasks* dropout, bool with_grad) {
  check_input(params, batch.features.cols());
  const int n = params.output_dim();
  if (batch.residuals.cols() != n || batch.residuals.rows() != batch.features.rows()) {
    throw std::invalid_argument("lmve_loss: residual shape mismatch");
  }
  if (!(lambda >= 0.0)) {
    throw std::invalid_argument("lmve_loss: lambda must be >= 0");
  }
  const std::size_t count =
      batch.rows.empty() ? static_cast<std::size_t>(batch.features.rows()) : batch.rows.size();
  if (count == 0) {
    throw std::invalid_argument("lmve_loss: empty batch");
  }
  const double weight = 1.0 / static_cast<double>(count);

  LossGradient result;
  if (with_grad) result.grad = MlpParams::zeros(params.input_dim(), n);
  ForwardState state;
  for_rows(batch.rows, batch.features.rows(), [&](std::size_t row) {
    const double* x = batch.features.data() + row * static_cast<std::size_t>(batch.features.cols());
    run_forward(params, x, dropout, state);
    const Matrix r_head = head_matrix(state.out, n);
    const SpdFactor factor = SpdFactor::compute(shape_from_head(r_head, epsilon));
    const Vector resid = batch.residuals.row(static_cast<Eigen::Index>(row)).transpose();
    const Vector u = factor.solve(resid);
    const double sqrt_det = std::exp(0.5 * factor.log_det());
    result.loss += weight * (resid.dot(u) + lambda * sqrt_det);
    if (with_grad) {
      Matrix g = -u * u.transpose() + (0.5 * lambda * sqrt_det) * factor.inverse();
      const Matrix g_r = r_head * (g + g.transpose());
      run_backward(params, x, state, weight * flatten_head(g_r), result.grad);
    }
  });
  return result;
}

void write_array(std::ostream& out, const char* name, const double* data, Eigen::Index rows,
                 Eigen::Index cols) {
  out << name << ' ' << rows << ' ' << cols << '\n';
  char buffer[40];
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", data[i * cols + j]);
      out << (j == 0 ? "" : " ") << buffer;
    }
    out << '\n';
  }
}

void read_array(std::istream& in, const char* name, double* data, Eigen::Index rows,
                Eigen::Index cols) {
  std::string tag;
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  if (!(in >> tag >> r >> c) || tag != name || r != rows || c != cols) {
    throw std::runtime_error(std::string("checkpoint: bad header for ") + name);
  }
  for (Eigen::Index i = 0; i < rows * cols; ++i) {
    if (!(in >> data[i]) || !std::isfinite(data[i])) {
      throw std::runtime_error(std::string("checkpoint: bad value in ") + name);
    }
  }
}

}  // namespace

MlpParams MlpParams::zeros(int d, int n) {
  if (d < 1 || n < 1) {
    throw std::invalid_argument("MlpParams: d and n must be >= 1");
  }
  MlpParams p;
  p.l1 = RowMatrix::Zero(4 * d, d);
  p.b1 = Vector::Zero(4 * d);
  p.l2 = RowMatrix::Zero(d, 4 * d);
  p.b2 = Vector::Zero(d);
  p.l3 = RowMatrix::Zero(n * n, d);
  p.b3 = Vector::Zero(n * n);
  return p;
}

int MlpParams::output_dim() const {
  const auto outputs = static_cast<int>(l3.rows());
  int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(outputs))));
  return n;
}

void MlpParams::validate() const {
  const auto d = l1.cols();
  const int n = output_dim();
  const bool ok = d >= 1 && n >= 1 && l1.rows() == 4 * d && b1.size() == 4 * d &&
                  l2.rows() == d && l2.cols() == 4 * d && b2.size() == d &&
                  l3.rows() == n * n && l3.cols() == d && b3.size() == n * n;
  if (!ok) {
    throw std::invalid_argument("MlpParams: inconsistent layer sizes");
  }
  if (!all_finite()) {
    throw std::invalid_argument("MlpParams: non-finite entries");
  }
}

bool MlpParams::all_finite() const {
  return l1.allFinite() && b1.allFinite() && l2.allFinite() && b2.allFinite() &&
         l3.allFinite() && b3.allFinite();
}

std::size_t MlpParams::parameter_count() const {
  std::size_t total = 0;
  for (auto a : arrays()) total += a.size();
  return total;
}

double MlpParams::squared_norm() const {
  double total = 0.0;
  for (auto a : arrays()) {
    for (double v : a) total += v * v;
  }
  return total;
}

std::array<std::span<double>, 6> MlpParams::arrays() {
  return {std::span<double>(l1.data(), static_cast<std::size_t>(l1.size())),
          std::span<double>(b1.data(), static_cast<std::size_t>(b1.size())),
          std::span<double>(l2.data(), static_cast<std::size_t>(l2.size())),
          std::span<double>(b2.data(), static_cast<std::size_t>(b2.size())),
          std::span<double>(l3.data(), static_cast<std::size_t>(l3.size())),
          std::span<double>(b3.data(), static_cast<std::size_t>(b3.size()))};
}

std::array<std::span<const double>, 6> MlpParams::arrays() const {
  return {std::span<const double>(l1.data(), static_cast<std::size_t>(l1.size())),
          std::span<const double>(b1.data(), static_cast<std::size_t>(b1.size())),
          std::span<const double>(l2.data(), static_cast<std::size_t>(l2.size())),
          std::span<const double>(b2.data(), static_cast<std::size_t>(b2.size())),
          std::span<const double>(l3.data(), static_cast<std::size_t>(l3.size())),
          std::span<const double>(b3.data(), static_cast<std::size_t>(b3.size()))};
}

DropoutMasks::DropoutMasks(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (!(rate >= 0.0) || !(rate < 1.0)) {
    throw std::invalid_argument("DropoutMasks: rate must lie in [0, 1)");
  }
}

void DropoutMasks::draw(std::span<double> mask) {
  const double keep_scale = 1.0 / (1.0 - rate_);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (double& m : mask) {
    m = uniform(rng_) < rate_ ? 0.0 : keep_scale;
  }
}

ShapeOutput forward_shape(const MlpParams& params, std::span<const double> x, double epsilon,
                          DropoutMasks* dropout) {
  if (x.size() != static_cast<std::size_t>(params.input_dim())) {
    throw std::invalid_argument("forward_shape: feature dimension mismatch");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("forward_shape: epsilon must be positive");
  }
  ForwardState state;
  run_forward(params, x.data(), dropout, state);
  ShapeOutput result;
  result.r = head_matrix(state.out, params.output_dim());
  result.c = shape_from_head(result.r, epsilon);
  return result;
}

ShapeOutput forward_shape(const MlpParams& params, const Vector& x, double epsilon,
                          DropoutMasks* dropout) {
  return forward_shape(params, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                       epsilon, dropout);
}

double lmve_loss(const MlpParams& params, const ShapeBatch& batch, double lambda, double epsilon,
                 DropoutMasks* dropout) {
  return lmve_objective(params, batch, lambda, epsilon, dropout, false).loss;
}

LossGradient lmve_loss_grad(const MlpParams& params, const ShapeBatch& batch, double lambda,
                            double epsilon, DropoutMasks* dropout) {
  return lmve_objective(params, batch, lambda, epsilon, dropout, true);
}

LossGradient imitation_loss_grad(const MlpParams& params, const RowMatrix& features,
                                 std::span<const Matrix> targets,
                                 std::span<const std::size_t> rows, double epsilon,
                                 DropoutMasks* dropout) {
  check_input(params, features.cols());
  if (targets.size() != static_cast<std::size_t>(features.rows())) {
    throw std::invalid_argument("imitation_loss_grad: one target shape per row required");
  }
  const int n = params.output_dim();
  const std::size_t count = rows.empty() ? targets.size() : rows.size();
  if (count == 0) {
    throw std::invalid_argument("imitation_loss_grad: empty batch");
  }
  const double weight = 1.0 / static_cast<double>(count);
  LossGradient result;
  result.grad = MlpParams::zeros(params.input_dim(), n);
  ForwardState state;
  for_rows(rows, features.rows(), [&](std::size_t row) {
    const double* x = features.data() + row * static_cast<std::size_t>(features.cols());
    run_forward(params, x, dropout, state);
    const Matrix r_head = head_matrix(state.out, n);
    const Matrix diff = shape_from_head(r_head, epsilon) - targets[row];
    result.loss += weight * diff.squaredNorm();
    const Matrix g = 2.0 * diff;
    const Matrix g_r = r_head * (g + g.transpose());
    run_backward(params, x, state, weight * flatten_head(g_r), result.grad);
  });
  return result;
}

Adam::Adam(const MlpParams& like, double beta1, double beta2, double eps)
    : m_(MlpParams::zeros(like.input_dim(), like.output_dim())),
      v_(MlpParams::zeros(like.input_dim(), like.output_dim())),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step(MlpParams& params, const MlpParams& grad, double lr) {
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = params.arrays();
  auto g = grad.arrays();
  auto m = m_.arrays();
  auto v = v_.arrays();
  for (std::size_t a = 0; a < p.size(); ++a) {
    for (std::size_t i = 0; i < p[a].size(); ++i) {
      m[a][i] = beta1_ * m[a][i] + (1.0 - beta1_) * g[a][i];
      v[a][i] = beta2_ * v[a][i] + (1.0 - beta2_) * g[a][i] * g[a][i];
      const double m_hat = m[a][i] / correction1;
      const double v_hat = v[a][i] / correction2;
      p[a][i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

Matrix LmveShape::shape_at(const Vector& x) const {
  return label_scale * forward_shape(params, standardizer.apply(x), epsilon).c;
}

void save_checkpoint(const LmveShape& model, const std::filesystem::path& path) {
  model.params.validate();
  const MlpParams& p = model.params;
  std::ostringstream out;
  char buffer[64];
  out << "mve-lmve-checkpoint " << kCheckpointVersion << '\n';
  out << "d " << p.input_dim() << " n " << p.output_dim() << '\n';
  std::snprintf(buffer, sizeof(buffer), "%.17g", model.epsilon);
  out << "epsilon " << buffer << '\n';
  std::snprintf(buffer, sizeof(buffer), "%.17g", model.label_scale);
  out << "label_scale " << buffer << '\n';
  Vector mean = model.standardizer.dim() == p.input_dim() ? model.standardizer.mean()
                                                          : Vector::Zero(p.input_dim());
  Vector scale = model.standardizer.dim() == p.input_dim() ? model.standardizer.scale()
                                                           : Vector::Ones(p.input_dim());
  write_array(out, "feature_mean", mean.data(), 1, mean.size());
  write_array(out, "feature_scale", scale.data(), 1, scale.size());
  write_array(out, "L1", p.l1.data(), p.l1.rows(), p.l1.cols());
  write_array(out, "b1", p.b1.data(), 1, p.b1.size());
  write_array(out, "L2", p.l2.data(), p.l2.rows(), p.l2.cols());
  write_array(out, "b2", p.b2.data(), 1, p.b2.size());
  write_array(out, "L3", p.l3.data(), p.l3.rows(), p.l3.cols());
  write_array(out, "b3", p.b3.data(), 1, p.b3.size());
  out << "end\n";

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream file(tmp, std::ios::binary);
    if (!file) {
      throw std::runtime_error("save_checkpoint: cannot write " + tmp.string());
    }
    file << out.str();
  }
  std::filesystem::rename(tmp, path);
}

LmveShape load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  }
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "mve-lmve-checkpoint") {
    throw std::runtime_error("load_checkpoint: not a checkpoint file");
  }
  if (version != kCheckpointVersion) {
    throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));
  }
  int d = 0;
  int n = 0;
  std::string d_tag;
  std::string n_tag;
  if (!(in >> d_tag >> d >> n_tag >> n) || d_tag != "d" || n_tag != "n" || d < 1 || n < 1) {
    throw std::runtime_error("load_checkpoint: bad dimension line");
  }
  LmveShape model;
  if (!(in >> tag >> model.epsilon) || tag != "epsilon" || !(model.epsilon > 0.0)) {
    throw std::runtime_error("load_checkpoint: bad epsilon");
  }
  if (!(in >> tag >> model.label_scale) || tag != "label_scale" || !(model.label_scale > 0.0)) {
    throw std::runtime_error("load_checkpoint: bad label_scale");
  }
  Vector mean(d);
  Vector scale(d);
  read_array(in, "feature_mean", mean.data(), 1, d);
  read_array(in, "feature_scale", scale.data(), 1, d);
  model.standardizer = Standardizer(mean, scale);
  model.params = MlpParams::zeros(d, n);
  MlpParams& p = model.params;
  read_array(in, "L1", p.l1.data(), p.l1.rows(), p.l1.cols());
  read_array(in, "b1", p.b1.data(), 1, p.b1.size());
  read_array(in, "L2", p.l2.data(), p.l2.rows(), p.l2.cols());
  read_array(in, "b2", p.b2.data(), 1, p.b2.size());
  read_array(in, "L3", p.l3.data(), p.l3.rows(), p.l3.cols());
  read_array(in, "b3", p.b3.data(), 1, p.b3.size());
  if (!(in >> tag) || tag != "end") {
    throw std::runtime_error("load_checkpoint: missing end marker");
  }
  return model;
}

}  // namespace mve
