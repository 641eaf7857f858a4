// SPDX-License-Identifier: Apache-2.0
/**
 * @file   optim.hpp
 * @brief  Cosine learning-rate schedule with warm restarts, and Adam.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "mvlpuf/error.hpp"
#include "mvlpuf/mlp.hpp"

namespace mvlpuf::optim {

struct ScheduleConfig {
  double lr0 = 1e-3;
  double first_cycle = 1000.0; // steps in cycle 0
  double cycle_multiplier = 2.0;
  double amplitude_multiplier = 1.0; // peak of cycle i is lr0 * amplitude^i

  void validate() const {
    if (!(lr0 > 0.0 && first_cycle >= 1.0 && cycle_multiplier >= 1.0 &&
          amplitude_multiplier > 0.0))
      throw InvalidArgument("invalid learning-rate schedule");
  }
};

struct CyclePosition {
  int cycle = 0;
  double start = 0.0;  // first step of the cycle
  double length = 0.0; // T_i
};

inline CyclePosition cycle_at(const ScheduleConfig &cfg, std::int64_t step) {
  CyclePosition pos{0, 0.0, cfg.first_cycle};
  const auto s = static_cast<double>(step);
  while (s >= pos.start + pos.length) {
    pos.start += pos.length;
    pos.length *= cfg.cycle_multiplier;
    ++pos.cycle;
  }
  return pos;
}

/// lr0 * amp^i * (1 + cos(pi * t / T_i)) / 2 within cycle i.
inline double lr_at(const ScheduleConfig &cfg, std::int64_t step) {
  if (step < 0)
    throw InvalidArgument("step must be >= 0");
  const CyclePosition pos = cycle_at(cfg, step);
  const double t = static_cast<double>(step) - pos.start;
  return cfg.lr0 * std::pow(cfg.amplitude_multiplier, pos.cycle) * 0.5 *
         (1.0 + std::cos(std::numbers::pi * t / pos.length));
}

/// Steps at which a new cycle starts, up to and including `limit`.
inline std::vector<std::int64_t> cycle_boundaries(const ScheduleConfig &cfg,
                                                  std::int64_t limit) {
  std::vector<std::int64_t> out;
  double start = cfg.first_cycle, len = cfg.first_cycle * cfg.cycle_multiplier;
  while (start <= static_cast<double>(limit)) {
    out.push_back(static_cast<std::int64_t>(start));
    start += len;
    len *= cfg.cycle_multiplier;
  }
  return out;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  mlp::ParamSet m;
  mlp::ParamSet v;
  std::int64_t step = 0;

  static AdamState for_model(const mlp::MlpModel &model) {
    return {mlp::ParamSet::zeros_like(model.params),
            mlp::ParamSet::zeros_like(model.params), 0};
  }
};

/// Bias-corrected Adam update. Throws before touching anything when a
/// gradient is non-finite.
inline void adam_step(AdamState &state, mlp::MlpModel &model,
                      const mlp::ParamSet &grads, double lr,
                      const AdamConfig &cfg = {}) {
  if (!grads.all_finite())
    throw DivergenceError(static_cast<std::size_t>(state.step),
                          "non-finite gradient");
  if (grads.size() != model.params.size())
    throw InvalidArgument("gradient shape does not match the model");

  std::vector<std::span<double>> p, m, v;
  std::vector<std::span<const double>> g;
  model.params.for_each([&](std::span<double> s) { p.push_back(s); });
  state.m.for_each([&](std::span<double> s) { m.push_back(s); });
  state.v.for_each([&](std::span<double> s) { v.push_back(s); });
  grads.for_each([&](std::span<const double> s) { g.push_back(s); });

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      const double gi = g[t][i];
      m[t][i] = cfg.beta1 * m[t][i] + (1.0 - cfg.beta1) * gi;
      v[t][i] = cfg.beta2 * v[t][i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[t][i] / bc1;
      const double vhat = v[t][i] / bc2;
      p[t][i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

} // namespace mvlpuf::optim
