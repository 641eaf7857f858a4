// SPDX-License-Identifier: Apache-2.0
/**
 * @file   train.hpp
 * @brief  Mini-batch training loop with plateau-based early stopping.
 *
 * Stopping rule: the anchor is the best batch loss recorded at the last
 * significant improvement, where significant means lower than the anchor by
 * more than plateau_epsilon. Training stops once at least min_steps steps have
 * run and no significant improvement happened in the trailing plateau_window
 * steps, or at the hard step cap.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mvlpuf/error.hpp"
#include "mvlpuf/mlp.hpp"
#include "mvlpuf/optim.hpp"
#include "mvlpuf/rng.hpp"

namespace mvlpuf::train {

using mlp::Matrix;

enum class BatchRule {
  Min, // min(n, batch_size)
  Max, // max(n, batch_size), sampling with replacement past n
};

struct TrainConfig {
  optim::ScheduleConfig schedule;
  optim::AdamConfig adam;
  BatchRule batch_rule = BatchRule::Min;
  int batch_size = 128;
  std::int64_t min_steps = 1000;
  double plateau_epsilon = 1e-4;
  std::int64_t plateau_window = 100;
  std::int64_t step_cap = 200000;
  std::int64_t history_every = 100; // loss history sampling interval
  std::uint64_t train_seed = 0;

  void validate() const {
    schedule.validate();
    if (batch_size < 1 || min_steps < 0 || plateau_window < 1 || step_cap < 1 ||
        history_every < 1)
      throw InvalidArgument("invalid training configuration");
    if (!(plateau_epsilon >= 0.0))
      throw InvalidArgument("plateau_epsilon must be >= 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 &&
          adam.beta2 < 1.0 && adam.eps > 0.0))
      throw InvalidArgument("invalid Adam constants");
  }

  int effective_batch(std::size_t n) const {
    const auto b = static_cast<std::size_t>(batch_size);
    return static_cast<int>(batch_rule == BatchRule::Min ? std::min(n, b)
                                                         : std::max(n, b));
  }
};

enum class StopReason { Plateau, StepCap };

inline const char *to_string(StopReason r) noexcept {
  return r == StopReason::Plateau ? "plateau" : "step-cap";
}

struct TrainReport {
  std::int64_t steps = 0;
  double final_loss = 0.0;
  double best_loss = 0.0;
  std::vector<std::pair<std::int64_t, double>> history; // (step, batch loss)
  StopReason stop_reason = StopReason::StepCap;
  double wall_seconds = 0.0;
};

/// Tracks the plateau rule; `observe` returns true when training may stop.
class PlateauMonitor {
public:
  PlateauMonitor(std::int64_t min_steps, std::int64_t window, double epsilon)
      : min_steps_(min_steps), window_(window), epsilon_(epsilon) {}

  /// `step` is the number of completed steps including this one.
  bool observe(std::int64_t step, double loss) {
    if (!started_ || loss < anchor_ - epsilon_) {
      anchor_ = loss;
      last_improve_ = step;
      started_ = true;
    }
    best_ = std::min(best_, loss);
    return step >= min_steps_ && step - last_improve_ >= window_;
  }

  double best() const noexcept { return best_; }
  std::int64_t last_improvement() const noexcept { return last_improve_; }

private:
  std::int64_t min_steps_, window_;
  double epsilon_;
  bool started_ = false;
  double anchor_ = 0.0;
  double best_ = INFINITY;
  std::int64_t last_improve_ = 0;
};

/// Yields batch row indices: shuffled epochs without replacement while the
/// batch fits the dataset, independent draws with replacement otherwise.
class BatchSampler {
public:
  BatchSampler(std::size_t n, int batch, std::uint64_t seed)
      : n_(n), batch_(static_cast<std::size_t>(batch)), rng_(seed, "train.batch"),
        order_(n), cursor_(n) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  const std::vector<std::size_t> &next() {
    rows_.resize(batch_);
    if (batch_ > n_) {
      for (std::size_t &r : rows_)
        r = static_cast<std::size_t>(rng_.below(n_));
      return rows_;
    }
    for (std::size_t i = 0; i < batch_; ++i) {
      if (cursor_ == n_) {
        for (std::size_t j = n_ - 1; j > 0; --j)
          std::swap(order_[j], order_[static_cast<std::size_t>(rng_.below(j + 1))]);
        cursor_ = 0;
      }
      rows_[i] = order_[cursor_++];
    }
    return rows_;
  }

private:
  std::size_t n_, batch_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_;
  std::vector<std::size_t> rows_;
};

inline Matrix gather_rows(const Matrix &src, const std::vector<std::size_t> &rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

/// Trains in place and leaves the model in inference mode. On a non-finite
/// loss or gradient, throws DivergenceError before the offending update is
/// applied, so the model keeps its last finite state (still in training mode).
inline TrainReport train(mlp::MlpModel &model, const Matrix &inputs,
                         const Matrix &targets, const TrainConfig &cfg) {
  cfg.validate();
  if (inputs.rows() < 1)
    throw InvalidArgument("training needs at least one sample");
  if (targets.rows() != inputs.rows() || targets.cols() != model.config.output_width)
    throw InvalidArgument("target shape does not match inputs/model");
  mlp::check_input(model, inputs);

  const auto start = std::chrono::steady_clock::now();
  model.mode = mlp::Mode::Training;
  const auto n = static_cast<std::size_t>(inputs.rows());
  BatchSampler sampler(n, cfg.effective_batch(n), cfg.train_seed);
  optim::AdamState adam = optim::AdamState::for_model(model);
  PlateauMonitor plateau(cfg.min_steps, cfg.plateau_window, cfg.plateau_epsilon);
  TrainReport rep;
  mlp::ParamSet grads;
  mlp::ForwardCache cache;
  const bool full_batch = cfg.effective_batch(n) == static_cast<int>(n);

  for (std::int64_t step = 0; step < cfg.step_cap; ++step) {
    double loss;
    if (full_batch) {
      loss = mlp::loss_and_gradients(model, inputs, targets, grads, cache);
    } else {
      const auto &rows = sampler.next();
      loss = mlp::loss_and_gradients(model, gather_rows(inputs, rows),
                                     gather_rows(targets, rows), grads, cache);
    }
    if (!std::isfinite(loss))
      throw DivergenceError(static_cast<std::size_t>(step), "non-finite loss");
    if (!grads.all_finite())
      throw DivergenceError(static_cast<std::size_t>(step), "non-finite gradient");
    optim::adam_step(adam, model, grads, optim::lr_at(cfg.schedule, step), cfg.adam);
    mlp::commit_running_stats(model, cache);

    const std::int64_t done = step + 1;
    rep.steps = done;
    rep.final_loss = loss;
    if (step % cfg.history_every == 0)
      rep.history.emplace_back(step, loss);
    if (plateau.observe(done, loss)) {
      rep.stop_reason = StopReason::Plateau;
      break;
    }
  }
  rep.best_loss = plateau.best();
  model.mode = mlp::Mode::Inference;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

} // namespace mvlpuf::train
