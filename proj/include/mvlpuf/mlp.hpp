// SPDX-License-Identifier: Apache-2.0
/**
 * @file   mlp.hpp
 * @brief  Feed-forward regression network for response prediction.
 *
 * Architecture: n_hidden blocks of dense -> ReLU -> batch normalization,
 * then a dense head with D_r outputs passed through sigmoid * output_scale.
 * Batch rows are samples; dense weights are stored (in x out).
 *
 * Batch norm uses the biased batch variance to normalize, eps = 1e-5, and
 * keeps running statistics as running = momentum * running + (1 - momentum)
 * * batch with momentum 0.9 (running variance uses the unbiased estimate).
 * Running statistics are only committed by a training step, never by a bare
 * forward pass.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvlpuf/error.hpp"
#include "mvlpuf/rng.hpp"

namespace mvlpuf::mlp {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct ModelConfig {
  int input_width = 24;
  int output_width = 24;
  int hidden_width = 1024;
  int n_hidden = 5;
  double output_scale = 1.0;
  std::uint64_t init_seed = 0;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;

  void validate() const {
    if (input_width < 1 || output_width < 1 || hidden_width < 1 || n_hidden < 0)
      throw InvalidArgument("model widths must be >= 1");
    if (!(output_scale > 0.0))
      throw InvalidArgument("output_scale must be > 0");
  }
};

/// Trainable parameters. Also reused as the shape of gradients and Adam
/// moments. Tensor order: per hidden layer W, b, gamma, beta; then head W, b.
struct ParamSet {
  std::vector<Matrix> weights; // n_hidden + 1, last is the head
  std::vector<RowVector> biases;
  std::vector<RowVector> gammas; // n_hidden
  std::vector<RowVector> betas;

  static ParamSet zeros_like(const ParamSet &p) {
    ParamSet z;
    for (const Matrix &w : p.weights)
      z.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const RowVector &b : p.biases)
      z.biases.push_back(RowVector::Zero(b.size()));
    for (const RowVector &g : p.gammas)
      z.gammas.push_back(RowVector::Zero(g.size()));
    for (const RowVector &b : p.betas)
      z.betas.push_back(RowVector::Zero(b.size()));
    return z;
  }

  /// Calls f(span) for each tensor in canonical order.
  template <typename Self, typename F> static void each(Self &self, F &&f) {
    const std::size_t hidden = self.gammas.size();
    for (std::size_t l = 0; l < hidden; ++l) {
      f(std::span(self.weights[l].data(), static_cast<std::size_t>(self.weights[l].size())));
      f(std::span(self.biases[l].data(), static_cast<std::size_t>(self.biases[l].size())));
      f(std::span(self.gammas[l].data(), static_cast<std::size_t>(self.gammas[l].size())));
      f(std::span(self.betas[l].data(), static_cast<std::size_t>(self.betas[l].size())));
    }
    f(std::span(self.weights[hidden].data(), static_cast<std::size_t>(self.weights[hidden].size())));
    f(std::span(self.biases[hidden].data(), static_cast<std::size_t>(self.biases[hidden].size())));
  }

  template <typename F> void for_each(F &&f) { each(*this, f); }
  template <typename F> void for_each(F &&f) const { each(*this, f); }

  std::size_t size() const {
    std::size_t n = 0;
    for_each([&](auto s) { n += s.size(); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](auto s) {
      for (double v : s)
        ok = ok && std::isfinite(v);
    });
    return ok;
  }
};

enum class Mode { Training, Inference };

struct MlpModel {
  ModelConfig config;
  ParamSet params;
  std::vector<RowVector> running_mean;
  std::vector<RowVector> running_var;
  Mode mode = Mode::Training;

  int n_hidden() const noexcept { return static_cast<int>(params.gammas.size()); }

  /// Trainable parameters plus the two running statistics per BN feature.
  std::size_t parameter_count() const {
    std::size_t n = params.size();
    for (const RowVector &m : running_mean)
      n += static_cast<std::size_t>(m.size());
    for (const RowVector &v : running_var)
      n += static_cast<std::size_t>(v.size());
    return n;
  }
};

/// Dense weights and biases, plus 4 * hidden_width per hidden layer for
/// batch norm (gamma, beta, running mean, running variance).
inline std::int64_t count_parameters(std::int64_t d_in, std::int64_t d_out,
                                     std::int64_t hidden_width,
                                     std::int64_t n_hidden) {
  std::int64_t total = 0;
  std::int64_t prev = d_in;
  for (std::int64_t l = 0; l < n_hidden; ++l) {
    total += prev * hidden_width + hidden_width + 4 * hidden_width;
    prev = hidden_width;
  }
  return total + prev * d_out + d_out;
}

/// Dense-layer weights and biases only.
inline std::int64_t count_dense_parameters(std::int64_t d_in, std::int64_t d_out,
                                           std::int64_t hidden_width,
                                           std::int64_t n_hidden) {
  return count_parameters(d_in, d_out, hidden_width, n_hidden) -
         4 * hidden_width * n_hidden;
}

/// He-style uniform init, U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)); zero
/// biases; gamma 1, beta 0; running mean 0, running variance 1.
inline MlpModel init_model(const ModelConfig &cfg) {
  cfg.validate();
  MlpModel m;
  m.config = cfg;
  Rng rng(cfg.init_seed, "mlp.init");
  int prev = cfg.input_width;
  auto dense = [&](int in, int out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    Matrix w(in, out);
    // Row-major fill order keeps the draw sequence independent of storage.
    for (int r = 0; r < in; ++r)
      for (int c = 0; c < out; ++c)
        w(r, c) = rng.uniform(-bound, bound);
    m.params.weights.push_back(std::move(w));
    m.params.biases.push_back(RowVector::Zero(out));
  };
  for (int l = 0; l < cfg.n_hidden; ++l) {
    dense(prev, cfg.hidden_width);
    m.params.gammas.push_back(RowVector::Ones(cfg.hidden_width));
    m.params.betas.push_back(RowVector::Zero(cfg.hidden_width));
    m.running_mean.push_back(RowVector::Zero(cfg.hidden_width));
    m.running_var.push_back(RowVector::Ones(cfg.hidden_width));
    prev = cfg.hidden_width;
  }
  dense(prev, cfg.output_width);
  return m;
}

/// Activations kept by a training-mode forward pass for backward().
struct ForwardCache {
  std::vector<Matrix> inputs; // input to each dense layer (incl. head)
  std::vector<Matrix> pre;    // dense outputs of hidden layers (pre-ReLU)
  std::vector<Matrix> xhat;   // normalized activations
  std::vector<RowVector> mean, var, invstd;
  Matrix head_sigmoid;
  Matrix output;
};

inline void check_input(const MlpModel &m, const Matrix &x) {
  if (x.rows() < 1)
    throw InvalidArgument("empty batch");
  if (x.cols() != m.config.input_width)
    throw InvalidArgument("input width " + std::to_string(x.cols()) +
                          " != model input width " +
                          std::to_string(m.config.input_width));
}

inline Matrix sigmoid(const Matrix &z) {
  return z.unaryExpr([](double v) {
    if (v >= 0.0)
      return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

/// Forward pass in the model's current mode; fills `cache` in training mode.
inline Matrix forward(const MlpModel &m, const Matrix &x, ForwardCache *cache = nullptr) {
  check_input(m, x);
  const bool training = m.mode == Mode::Training;
  const int hidden = m.n_hidden();
  if (cache) {
    cache->inputs.resize(static_cast<std::size_t>(hidden + 1));
    cache->pre.resize(static_cast<std::size_t>(hidden));
    cache->xhat.resize(static_cast<std::size_t>(hidden));
    cache->mean.resize(static_cast<std::size_t>(hidden));
    cache->var.resize(static_cast<std::size_t>(hidden));
    cache->invstd.resize(static_cast<std::size_t>(hidden));
  }
  Matrix a = x;
  for (int l = 0; l < hidden; ++l) {
    const auto L = static_cast<std::size_t>(l);
    Matrix z(a.rows(), m.params.weights[L].cols());
    z.noalias() = a * m.params.weights[L];
    z.rowwise() += m.params.biases[L];
    Matrix r = z.cwiseMax(0.0);
    RowVector mu, var;
    if (training) {
      mu = r.colwise().mean();
      var = (r.rowwise() - mu).array().square().colwise().mean().matrix();
    } else {
      mu = m.running_mean[L];
      var = m.running_var[L];
    }
    const RowVector invstd =
        (var.array() + m.config.bn_eps).rsqrt().matrix();
    Matrix xhat = (r.rowwise() - mu).array().rowwise() * invstd.array();
    Matrix y = (xhat.array().rowwise() * m.params.gammas[L].array()).rowwise() +
               m.params.betas[L].array();
    if (cache && training) {
      cache->inputs[L] = std::move(a);
      cache->pre[L] = std::move(z);
      cache->xhat[L] = std::move(xhat);
      cache->mean[L] = mu;
      cache->var[L] = var;
      cache->invstd[L] = invstd;
    }
    a = std::move(y);
  }
  const auto H = static_cast<std::size_t>(hidden);
  Matrix zh(a.rows(), m.params.weights[H].cols());
  zh.noalias() = a * m.params.weights[H];
  zh.rowwise() += m.params.biases[H];
  Matrix s = sigmoid(zh);
  Matrix out = s * m.config.output_scale;
  if (cache && training) {
    cache->inputs[H] = std::move(a);
    cache->head_sigmoid = std::move(s);
    cache->output = out;
  }
  return out;
}

/// Inference in fixed-size chunks (no dependence on batch composition).
inline Matrix predict(const MlpModel &m, const Matrix &x, Eigen::Index chunk = 4096) {
  if (m.mode != Mode::Inference)
    throw InvalidState("predict() requires an inference-mode model");
  check_input(m, x);
  Matrix out(x.rows(), m.config.output_width);
  for (Eigen::Index start = 0; start < x.rows(); start += chunk) {
    const Eigen::Index n = std::min(chunk, x.rows() - start);
    out.middleRows(start, n) = forward(m, x.middleRows(start, n));
  }
  return out;
}

inline double mse_loss(const Matrix &pred, const Matrix &target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InvalidArgument("prediction/target shape mismatch");
  if (pred.size() == 0)
    throw InvalidArgument("empty prediction");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

/// Analytic gradients of mse_loss(forward(x), target) for a training-mode
/// forward pass recorded in `cache`.
inline ParamSet backward(const MlpModel &m, const ForwardCache &cache,
                         const Matrix &target) {
  if (m.mode != Mode::Training)
    throw InvalidState("backward() requires a training-mode model");
  const Matrix &out = cache.output;
  if (out.rows() != target.rows() || out.cols() != target.cols())
    throw InvalidArgument("target shape does not match the cached output");
  const int hidden = m.n_hidden();
  const auto H = static_cast<std::size_t>(hidden);
  const double batch = static_cast<double>(out.rows());
  ParamSet g = ParamSet::zeros_like(m.params);

  // d(mean sq err)/d(out) then through sigmoid * scale.
  const Matrix d_out = (out - target) * (2.0 / static_cast<double>(out.size()));
  Matrix dz = (d_out.array() * cache.head_sigmoid.array() *
               (1.0 - cache.head_sigmoid.array()) * m.config.output_scale)
                  .matrix();
  g.weights[H].noalias() = cache.inputs[H].transpose() * dz;
  g.biases[H] = dz.colwise().sum();
  Matrix dy(dz.rows(), m.params.weights[H].rows());
  dy.noalias() = dz * m.params.weights[H].transpose();

  for (int l = hidden - 1; l >= 0; --l) {
    const auto L = static_cast<std::size_t>(l);
    const Matrix &xhat = cache.xhat[L];
    g.gammas[L] = (dy.array() * xhat.array()).colwise().sum().matrix();
    g.betas[L] = dy.colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * m.params.gammas[L].array();
    const RowVector sum_dxhat = dxhat.colwise().sum();
    const RowVector sum_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum().matrix();
    Matrix dr = ((dxhat.array() * batch).rowwise() - sum_dxhat.array()) -
                (xhat.array().rowwise() * sum_dxhat_xhat.array());
    dr = (dr.array().rowwise() * (cache.invstd[L].array() / batch)).matrix();
    dz = (cache.pre[L].array() > 0.0).select(dr.array(), 0.0).matrix();
    g.weights[L].noalias() = cache.inputs[L].transpose() * dz;
    g.biases[L] = dz.colwise().sum();
    if (l > 0) {
      dy.resize(dz.rows(), m.params.weights[L].rows());
      dy.noalias() = dz * m.params.weights[L].transpose();
    }
  }
  return g;
}

/// Folds the batch statistics of a training forward pass into the running
/// estimates.
inline void commit_running_stats(MlpModel &m, const ForwardCache &cache) {
  const double mom = m.config.bn_momentum;
  for (std::size_t l = 0; l < m.running_mean.size(); ++l) {
    const double n = static_cast<double>(cache.inputs[l].rows());
    const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
    m.running_mean[l] = mom * m.running_mean[l] + (1.0 - mom) * cache.mean[l];
    m.running_var[l] = mom * m.running_var[l] + (1.0 - mom) * unbias * cache.var[l];
  }
}

/// Loss and gradients for one batch without touching running statistics.
inline double loss_and_gradients(const MlpModel &m, const Matrix &x,
                                 const Matrix &target, ParamSet &grads,
                                 ForwardCache &cache) {
  const Matrix out = forward(m, x, &cache);
  const double loss = mse_loss(out, target);
  grads = backward(m, cache, target);
  return loss;
}

} // namespace mvlpuf::mlp
