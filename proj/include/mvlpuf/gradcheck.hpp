// SPDX-License-Identifier: Apache-2.0
/**
 * @file   gradcheck.hpp
 * @brief  Central-difference verification of analytic MLP gradients.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mvlpuf/mlp.hpp"
#include "mvlpuf/rng.hpp"

namespace mvlpuf::mlp {

using GradientFn =
    std::function<ParamSet(const MlpModel &, const Matrix &, const Matrix &)>;

/// Reference gradient: training-mode forward, then backward().
inline ParamSet analytic_gradients(const MlpModel &m, const Matrix &x,
                                   const Matrix &target) {
  ForwardCache cache;
  ParamSet g;
  loss_and_gradients(m, x, target, g, cache);
  return g;
}

struct GradientCheckConfig {
  double h = 1e-5;
  std::size_t coordinates = 256; // all coordinates if the model is smaller
  std::uint64_t seed = 0;
  // Denominator floor. Central differences resolve gradients only down to
  // about eps_mach * |loss| / h (~1e-11 at h = 1e-5), and some coordinates
  // have an exactly zero gradient (a bias feeding batch norm), so their
  // relative error is pure rounding noise unless the floor sits above that.
  double floor = 1e-6;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t checked = 0;
};

/// Compares `grad_fn` against central differences of the training-mode MSE
/// loss on a seeded subset of coordinates. Every tensor contributes at least
/// one coordinate. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradientCheckResult gradient_check(const MlpModel &model, const Matrix &x,
                                          const Matrix &target,
                                          const GradientCheckConfig &cfg = {},
                                          const GradientFn &grad_fn = analytic_gradients) {
  MlpModel m = model;
  m.mode = Mode::Training;
  const ParamSet analytic = grad_fn(m, x, target);

  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> grads;
  m.params.for_each([&](std::span<double> s) { params.push_back(s); });
  analytic.for_each([&](std::span<const double> s) { grads.push_back(s); });
  if (params.size() != grads.size())
    throw InvalidArgument("gradient function returned the wrong tensor count");

  // (tensor, index) pairs to check.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t total = 0;
  for (const auto &p : params)
    total += p.size();
  Rng rng(cfg.seed, "gradcheck");
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (grads[t].size() != params[t].size())
      throw InvalidArgument("gradient function returned a mis-shaped tensor");
    if (total <= cfg.coordinates) {
      for (std::size_t i = 0; i < params[t].size(); ++i)
        coords.emplace_back(t, i);
    } else {
      const std::size_t share =
          std::max<std::size_t>(1, cfg.coordinates * params[t].size() / total);
      for (std::size_t k = 0; k < share; ++k)
        coords.emplace_back(t, static_cast<std::size_t>(rng.below(params[t].size())));
    }
  }

  auto loss_at = [&]() { return mse_loss(forward(m, x), target); };
  GradientCheckResult res;
  for (auto [t, i] : coords) {
    double &p = params[t][i];
    const double saved = p;
    p = saved + cfg.h;
    const double up = loss_at();
    p = saved - cfg.h;
    const double down = loss_at();
    p = saved;
    const double numeric = (up - down) / (2.0 * cfg.h);
    const double a = grads[t][i];
    const double denom = std::max({std::abs(a), std::abs(numeric), cfg.floor});
    res.max_relative_error = std::max(res.max_relative_error, std::abs(a - numeric) / denom);
    res.max_absolute_error = std::max(res.max_absolute_error, std::abs(a - numeric));
    ++res.checked;
  }
  return res;
}

} // namespace mvlpuf::mlp
