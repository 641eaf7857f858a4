// SPDX-License-Identifier: Apache-2.0
/**
 * @file   harness.hpp
 * @brief  Modeling-attack experiments: splits, digit encoding, training,
 *         the round/decode/bits evaluation pipeline, sweeps and summaries.
 *
 * A "fold" is one independently seeded train/test resample at fixed sizes.
 * The test set of a fold is disjoint from that fold's training set. Seeds
 * for a cell are derived from (master_seed, puf_seed, R_c, R_r, n_train,
 * fold) so any cell can be reproduced on its own. Splits do not depend on
 * the radices, so every radix pair in a sweep sees the same CRPs.
 */
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "mvlpuf/error.hpp"
#include "mvlpuf/io.hpp"
#include "mvlpuf/mlp.hpp"
#include "mvlpuf/mvl_codec.hpp"
#include "mvlpuf/puf.hpp"
#include "mvlpuf/rng.hpp"
#include "mvlpuf/train.hpp"

namespace mvlpuf::harness {

using mlp::Matrix;
using nlohmann::json;
namespace fs = std::filesystem;

/// What to do with decoded values above 2^24 - 1.
enum class DecodePolicy { Modulo, Clamp };

/// Head scaling: R_r - 1 (default) or D_r - 1 (literal alternative).
enum class OutputScale { RadixMinusOne, WidthMinusOne };

struct ExperimentSpec {
  std::uint64_t puf_seed = 0;
  int rc = 2;
  int rr = 2;
  std::size_t n_train = 100;
  int fold = 0;
  int n_folds = 5;
  std::size_t test_size = 200000;
  std::uint64_t master_seed = 0;

  // PUF realization.
  double sigma = puf::kDefaultSigma;
  puf::RealizeOptions realize;

  // Model and training overrides.
  int hidden_width = 1024;
  int n_hidden = 5;
  OutputScale output_scale = OutputScale::RadixMinusOne;
  bool normalize_inputs = false; // divide input digits by R_c - 1
  DecodePolicy decode = DecodePolicy::Modulo;
  train::TrainConfig train;

  void validate() const {
    if (rc < 2 || rr < 2)
      throw InvalidArgument("radices must be >= 2");
    if (rc > 256 || rr > 256)
      throw InvalidArgument("radices above 256 are not supported");
    if (n_train < 1)
      throw InvalidArgument("n_train must be >= 1");
    if (test_size < 1)
      throw InvalidArgument("test_size must be >= 1");
    if (n_folds < 1 || fold < 0 || fold >= n_folds)
      throw InvalidArgument("fold index must lie in [0, n_folds)");
    if (hidden_width < 1 || n_hidden < 0)
      throw InvalidArgument("invalid model shape");
    train.validate();
  }

  /// Canonical ordering key of a sweep cell.
  auto key() const { return std::tuple(puf_seed, rc, rr, n_train, fold); }
};

// --- seeds ----------------------------------------------------------------

inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t puf_seed,
                                std::size_t n_train, int fold, std::string_view part) {
  return derive_seed(master, part,
                     {puf_seed, static_cast<std::uint64_t>(n_train),
                      static_cast<std::uint64_t>(fold)});
}

inline std::uint64_t cell_seed(const ExperimentSpec &s, std::string_view tag) {
  return derive_seed(s.master_seed, tag,
                     {s.puf_seed, static_cast<std::uint64_t>(s.rc),
                      static_cast<std::uint64_t>(s.rr),
                      static_cast<std::uint64_t>(s.n_train),
                      static_cast<std::uint64_t>(s.fold)});
}

// --- splits ---------------------------------------------------------------

struct Split {
  puf::CrpDataset train;
  puf::CrpDataset test;
};

inline Split make_split(const puf::PufRealization &p, std::size_t n_train, int fold,
                        std::size_t test_size, std::uint64_t master_seed) {
  if (n_train + test_size > codec::kValueSpace)
    throw ExhaustedDomain("train + test sizes exceed the 2^24 challenge space");
  Split s;
  s.train = puf::generate_dataset(
      p, n_train, split_seed(master_seed, p.seed, n_train, fold, "split.train"));
  const puf::ChallengeSet used([&] {
    std::vector<std::uint32_t> c;
    c.reserve(s.train.crps.size());
    for (const puf::Crp &crp : s.train.crps)
      c.push_back(crp.challenge);
    return c;
  }());
  s.test = puf::generate_dataset(
      p, test_size, split_seed(master_seed, p.seed, n_train, fold, "split.test"), used);
  return s;
}

inline std::vector<Split> make_splits(const puf::PufRealization &p, std::size_t n_train,
                                      int n_folds, std::size_t test_size,
                                      std::uint64_t master_seed) {
  if (n_folds < 1)
    throw InvalidArgument("n_folds must be >= 1");
  std::vector<Split> out;
  for (int f = 0; f < n_folds; ++f)
    out.push_back(make_split(p, n_train, f, test_size, master_seed));
  return out;
}

// --- encoding -------------------------------------------------------------

struct Examples {
  Matrix inputs;  // n x D_c
  Matrix targets; // n x D_r
};

inline Matrix encode_rows(const std::vector<std::uint32_t> &values, int radix,
                          double scale = 1.0) {
  const codec::RadixSpec spec = codec::RadixSpec::make(radix);
  Matrix out(static_cast<Eigen::Index>(values.size()), spec.width);
  std::vector<double> row(static_cast<std::size_t>(spec.width));
  for (std::size_t i = 0; i < values.size(); ++i) {
    codec::encode_into<double>(values[i], spec, row);
    for (int j = 0; j < spec.width; ++j)
      out(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)] * scale;
  }
  return out;
}

inline double input_scale(int rc, bool normalize) {
  return normalize ? 1.0 / static_cast<double>(rc - 1) : 1.0;
}

inline Examples prepare_examples(const puf::CrpDataset &ds, int rc, int rr,
                                 bool normalize_inputs = false) {
  std::vector<std::uint32_t> ch, re;
  ch.reserve(ds.crps.size());
  re.reserve(ds.crps.size());
  for (const puf::Crp &c : ds.crps) {
    ch.push_back(c.challenge);
    re.push_back(c.response);
  }
  return {encode_rows(ch, rc, input_scale(rc, normalize_inputs)), encode_rows(re, rr)};
}

// --- evaluation pipeline --------------------------------------------------

/// round -> decode -> reduce to 24 bits for each row of raw head outputs.
inline std::vector<std::uint32_t> outputs_to_responses(const Matrix &raw, int rr,
                                                       DecodePolicy policy = DecodePolicy::Modulo) {
  // Validates the radix and that radix^width fits in 64 bits.
  static_cast<void>(codec::RadixSpec::for_width(rr, static_cast<int>(raw.cols())));
  std::vector<std::uint32_t> out(static_cast<std::size_t>(raw.rows()));
  std::vector<int> digits(static_cast<std::size_t>(raw.cols()));
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
      digits[static_cast<std::size_t>(j)] = codec::round_digit(raw(i, j), rr);
    const std::uint64_t v = codec::decode_digits(digits, rr);
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(
        policy == DecodePolicy::Modulo ? v % codec::kValueSpace
                                       : std::min<std::uint64_t>(v, codec::kMaxValue));
  }
  return out;
}

inline std::vector<std::uint32_t>
predict_response_values(const mlp::MlpModel &model,
                        const std::vector<std::uint32_t> &challenges, int rc, int rr,
                        bool normalize_inputs = false,
                        DecodePolicy policy = DecodePolicy::Modulo) {
  const Matrix x = encode_rows(challenges, rc, input_scale(rc, normalize_inputs));
  return outputs_to_responses(mlp::predict(model, x), rr, policy);
}

inline std::vector<codec::BitVector24>
predict_response_bits(const mlp::MlpModel &model,
                      const std::vector<std::uint32_t> &challenges, int rc, int rr,
                      bool normalize_inputs = false,
                      DecodePolicy policy = DecodePolicy::Modulo) {
  std::vector<codec::BitVector24> out;
  for (std::uint32_t v :
       predict_response_values(model, challenges, rc, rr, normalize_inputs, policy))
    out.push_back(codec::value_to_bits(v));
  return out;
}

struct BitAccuracy {
  std::array<double, codec::kBits> per_bit{}; // index 0 = most significant
  double mean = 0.0;
};

inline BitAccuracy bit_accuracy(const std::vector<std::uint32_t> &pred,
                                const std::vector<std::uint32_t> &truth) {
  if (pred.size() != truth.size())
    throw InvalidArgument("prediction and truth lengths differ");
  if (pred.empty())
    throw InvalidArgument("bit accuracy of an empty set");
  std::array<std::size_t, codec::kBits> agree{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::uint32_t same = ~(pred[i] ^ truth[i]);
    for (int b = 0; b < codec::kBits; ++b)
      agree[static_cast<std::size_t>(b)] += (same >> (codec::kBits - 1 - b)) & 1U;
  }
  BitAccuracy acc;
  double sum = 0.0;
  for (std::size_t b = 0; b < agree.size(); ++b) {
    acc.per_bit[b] = static_cast<double>(agree[b]) / static_cast<double>(pred.size());
    sum += acc.per_bit[b];
  }
  acc.mean = sum / codec::kBits;
  return acc;
}

inline BitAccuracy bit_accuracy(const std::vector<codec::BitVector24> &pred,
                                const std::vector<codec::BitVector24> &truth) {
  std::vector<std::uint32_t> p, t;
  for (const auto &b : pred)
    p.push_back(codec::bits_to_value(b));
  for (const auto &b : truth)
    t.push_back(codec::bits_to_value(b));
  return bit_accuracy(p, t);
}

// --- experiments ----------------------------------------------------------

struct ExperimentResult {
  ExperimentSpec spec;
  std::array<double, codec::kBits> per_bit{};
  double mean_bit_accuracy = 0.0;
  std::int64_t steps = 0;
  std::string stop_reason; // plateau | step-cap | divergence
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::string error; // non-empty when the cell failed outright

  bool ok() const noexcept { return error.empty(); }
  bool diverged() const noexcept { return stop_reason == "divergence"; }
};

inline mlp::ModelConfig model_config(const ExperimentSpec &s) {
  mlp::ModelConfig c;
  c.input_width = codec::digits_required(s.rc, codec::kMaxValue);
  c.output_width = codec::digits_required(s.rr, codec::kMaxValue);
  c.hidden_width = s.hidden_width;
  c.n_hidden = s.n_hidden;
  c.output_scale = s.output_scale == OutputScale::RadixMinusOne
                       ? static_cast<double>(s.rr - 1)
                       : static_cast<double>(c.output_width - 1);
  c.init_seed = cell_seed(s, "cell.init");
  return c;
}

inline train::TrainConfig train_config(const ExperimentSpec &s) {
  train::TrainConfig t = s.train;
  t.train_seed = cell_seed(s, "cell.train");
  return t;
}

/// Runs one cell against an already realized PUF. A training divergence is
/// recorded in the result and the last finite model state is evaluated.
inline ExperimentResult run_experiment(const ExperimentSpec &spec,
                                       const puf::PufRealization &p,
                                       mlp::MlpModel *model_out = nullptr) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.spec = spec;
  const Split split = make_split(p, spec.n_train, spec.fold, spec.test_size, spec.master_seed);
  const Examples tr = prepare_examples(split.train, spec.rc, spec.rr, spec.normalize_inputs);

  mlp::MlpModel model = mlp::init_model(model_config(spec));
  try {
    const train::TrainReport rep = train::train(model, tr.inputs, tr.targets, train_config(spec));
    res.steps = rep.steps;
    res.stop_reason = train::to_string(rep.stop_reason);
    res.final_loss = rep.final_loss;
  } catch (const DivergenceError &e) {
    res.steps = static_cast<std::int64_t>(e.step());
    res.stop_reason = "divergence";
    res.final_loss = std::numeric_limits<double>::quiet_NaN();
    model.mode = mlp::Mode::Inference;
  }

  std::vector<std::uint32_t> ch, truth;
  for (const puf::Crp &c : split.test.crps) {
    ch.push_back(c.challenge);
    truth.push_back(c.response);
  }
  const BitAccuracy acc = bit_accuracy(
      predict_response_values(model, ch, spec.rc, spec.rr, spec.normalize_inputs, spec.decode),
      truth);
  res.per_bit = acc.per_bit;
  res.mean_bit_accuracy = acc.mean;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (model_out)
    *model_out = std::move(model);
  return res;
}

inline puf::PufRealization realize_for(const ExperimentSpec &spec) {
  return puf::realize_puf(spec.puf_seed, spec.sigma, spec.realize);
}

inline ExperimentResult run_experiment(const ExperimentSpec &spec) {
  spec.validate();
  return run_experiment(spec, realize_for(spec));
}

// --- JSON -----------------------------------------------------------------

inline json to_json(const train::TrainConfig &t) {
  return {{"lr0", t.schedule.lr0},
          {"first_cycle", t.schedule.first_cycle},
          {"cycle_multiplier", t.schedule.cycle_multiplier},
          {"amplitude_multiplier", t.schedule.amplitude_multiplier},
          {"adam_beta1", t.adam.beta1},
          {"adam_beta2", t.adam.beta2},
          {"adam_eps", t.adam.eps},
          {"batch_rule", t.batch_rule == train::BatchRule::Min ? "min" : "max"},
          {"batch_size", t.batch_size},
          {"min_steps", t.min_steps},
          {"plateau_epsilon", t.plateau_epsilon},
          {"plateau_window", t.plateau_window},
          {"step_cap", t.step_cap}};
}

inline train::TrainConfig train_config_from_json(const json &j) {
  train::TrainConfig t;
  t.schedule.lr0 = j.at("lr0").get<double>();
  t.schedule.first_cycle = j.at("first_cycle").get<double>();
  t.schedule.cycle_multiplier = j.at("cycle_multiplier").get<double>();
  t.schedule.amplitude_multiplier = j.at("amplitude_multiplier").get<double>();
  t.adam.beta1 = j.at("adam_beta1").get<double>();
  t.adam.beta2 = j.at("adam_beta2").get<double>();
  t.adam.eps = j.at("adam_eps").get<double>();
  t.batch_rule = j.at("batch_rule").get<std::string>() == "max" ? train::BatchRule::Max
                                                                : train::BatchRule::Min;
  t.batch_size = j.at("batch_size").get<int>();
  t.min_steps = j.at("min_steps").get<std::int64_t>();
  t.plateau_epsilon = j.at("plateau_epsilon").get<double>();
  t.plateau_window = j.at("plateau_window").get<std::int64_t>();
  t.step_cap = j.at("step_cap").get<std::int64_t>();
  return t;
}

inline json to_json(const ExperimentSpec &s) {
  return {{"puf_seed", s.puf_seed},
          {"rc", s.rc},
          {"rr", s.rr},
          {"n_train", s.n_train},
          {"fold", s.fold},
          {"n_folds", s.n_folds},
          {"test_size", s.test_size},
          {"master_seed", s.master_seed},
          {"sigma", s.sigma},
          {"coupling_min", s.realize.coupling_min},
          {"coupling_max", s.realize.coupling_max},
          {"cal_seed", s.realize.cal_seed},
          {"n_cal", s.realize.n_cal},
          {"hidden_width", s.hidden_width},
          {"n_hidden", s.n_hidden},
          {"output_scale", s.output_scale == OutputScale::RadixMinusOne ? "radix-1" : "width-1"},
          {"normalize_inputs", s.normalize_inputs},
          {"decode", s.decode == DecodePolicy::Modulo ? "modulo" : "clamp"},
          {"train", to_json(s.train)}};
}

inline ExperimentSpec spec_from_json(const json &j) {
  ExperimentSpec s;
  s.puf_seed = j.at("puf_seed").get<std::uint64_t>();
  s.rc = j.at("rc").get<int>();
  s.rr = j.at("rr").get<int>();
  s.n_train = j.at("n_train").get<std::size_t>();
  s.fold = j.at("fold").get<int>();
  s.n_folds = j.at("n_folds").get<int>();
  s.test_size = j.at("test_size").get<std::size_t>();
  s.master_seed = j.at("master_seed").get<std::uint64_t>();
  s.sigma = j.at("sigma").get<double>();
  s.realize.coupling_min = j.at("coupling_min").get<double>();
  s.realize.coupling_max = j.at("coupling_max").get<double>();
  s.realize.cal_seed = j.at("cal_seed").get<std::uint64_t>();
  s.realize.n_cal = j.at("n_cal").get<int>();
  s.hidden_width = j.at("hidden_width").get<int>();
  s.n_hidden = j.at("n_hidden").get<int>();
  s.output_scale = j.at("output_scale").get<std::string>() == "width-1"
                       ? OutputScale::WidthMinusOne
                       : OutputScale::RadixMinusOne;
  s.normalize_inputs = j.at("normalize_inputs").get<bool>();
  s.decode = j.at("decode").get<std::string>() == "clamp" ? DecodePolicy::Clamp
                                                          : DecodePolicy::Modulo;
  s.train = train_config_from_json(j.at("train"));
  return s;
}

inline json to_json(const ExperimentResult &r) {
  json j = {{"spec", to_json(r.spec)},
            {"per_bit", r.per_bit},
            {"mean_bit_accuracy", r.mean_bit_accuracy},
            {"steps", r.steps},
            {"stop_reason", r.stop_reason},
            {"wall_seconds", r.wall_seconds},
            {"error", r.error}};
  // NaN is not representable in JSON.
  j["final_loss"] = std::isfinite(r.final_loss) ? json(r.final_loss) : json(nullptr);
  return j;
}

inline ExperimentResult result_from_json(const json &j) {
  ExperimentResult r;
  r.spec = spec_from_json(j.at("spec"));
  r.per_bit = j.at("per_bit").get<std::array<double, codec::kBits>>();
  r.mean_bit_accuracy = j.at("mean_bit_accuracy").get<double>();
  r.steps = j.at("steps").get<std::int64_t>();
  r.stop_reason = j.at("stop_reason").get<std::string>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.error = j.at("error").get<std::string>();
  const json &fl = j.at("final_loss");
  r.final_loss = fl.is_null() ? std::numeric_limits<double>::quiet_NaN() : fl.get<double>();
  return r;
}

// --- sweeps ---------------------------------------------------------------

struct SweepGrid {
  std::vector<std::uint64_t> puf_seeds{0};
  std::vector<int> rcs{2};
  std::vector<int> rrs{2};
  std::vector<std::size_t> n_trains{100};
  int folds = 5;
  ExperimentSpec base; // everything else (seeds, sizes, model, training)

  /// Cartesian product in canonical order.
  std::vector<ExperimentSpec> cells() const {
    if (puf_seeds.empty() || rcs.empty() || rrs.empty() || n_trains.empty() || folds < 1)
      throw InvalidArgument("sweep grid must be nonempty");
    std::vector<ExperimentSpec> out;
    for (std::uint64_t ps : puf_seeds)
      for (int rc : rcs)
        for (int rr : rrs)
          for (std::size_t n : n_trains)
            for (int f = 0; f < folds; ++f) {
              ExperimentSpec s = base;
              s.puf_seed = ps;
              s.rc = rc;
              s.rr = rr;
              s.n_train = n;
              s.fold = f;
              s.n_folds = folds;
              s.validate();
              out.push_back(s);
            }
    std::sort(out.begin(), out.end(),
              [](const ExperimentSpec &a, const ExperimentSpec &b) { return a.key() < b.key(); });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const ExperimentSpec &a, const ExperimentSpec &b) {
                            return a.key() == b.key();
                          }),
              out.end());
    return out;
  }
};

struct SweepOptions {
  int jobs = 1;
  std::optional<fs::path> cell_dir; // per-cell JSON for resume
  std::function<void(const ExperimentResult &, bool resumed)> on_done;
};

inline fs::path cell_file(const fs::path &dir, const ExperimentSpec &s) {
  char name[128];
  std::snprintf(name, sizeof name, "cell_%llu_rc%d_rr%d_n%zu_f%d.json",
                static_cast<unsigned long long>(s.puf_seed), s.rc, s.rr, s.n_train, s.fold);
  return dir / name;
}

/// Completed cell stored for this exact spec, if any.
inline std::optional<ExperimentResult> load_cell(const fs::path &dir, const ExperimentSpec &s) {
  const fs::path f = cell_file(dir, s);
  if (!fs::exists(f))
    return std::nullopt;
  try {
    ExperimentResult r = result_from_json(json::parse(io::read_file(f)));
    if (to_json(r.spec) != to_json(s) || !r.ok())
      return std::nullopt;
    return r;
  } catch (const std::exception &) {
    return std::nullopt; // unreadable leftovers are recomputed
  }
}

/// Results in canonical cell order regardless of scheduling. Per-cell
/// failures are recorded in ExperimentResult::error.
inline std::vector<ExperimentResult> run_sweep(const SweepGrid &grid,
                                               const SweepOptions &opt = {}) {
  const std::vector<ExperimentSpec> cells = grid.cells();
  if (opt.cell_dir)
    fs::create_directories(*opt.cell_dir);

  std::map<std::uint64_t, puf::PufRealization> pufs;
  for (const ExperimentSpec &s : cells)
    if (!pufs.count(s.puf_seed))
      pufs.emplace(s.puf_seed, realize_for(s));

  std::vector<ExperimentResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const ExperimentSpec &s = cells[i];
      bool resumed = false;
      if (opt.cell_dir) {
        if (auto r = load_cell(*opt.cell_dir, s)) {
          results[i] = std::move(*r);
          resumed = true;
        }
      }
      if (!resumed) {
        try {
          results[i] = run_experiment(s, pufs.at(s.puf_seed));
        } catch (const std::exception &e) {
          results[i] = ExperimentResult{};
          results[i].spec = s;
          results[i].error = e.what();
        }
        if (opt.cell_dir && results[i].ok())
          io::write_file_atomic(cell_file(*opt.cell_dir, s), to_json(results[i]).dump(1) + "\n");
      }
      if (opt.on_done) {
        std::lock_guard lock(report_mu);
        opt.on_done(results[i], resumed);
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j)
    pool.emplace_back(worker);
  worker();
  for (std::thread &t : pool)
    t.join();
  return results;
}

// --- summaries and CSV ----------------------------------------------------

struct SummaryRow {
  int rc = 0;
  int rr = 0;
  std::size_t n_train = 0;
  double avg_acc = 0.0;
  double max_bit_acc = 0.0;
  double min_bit_acc = 0.0;
  std::size_t count = 0; // results folded into the row
};

/// Groups successful results by (R_c, R_r, n_train).
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentResult> &results) {
  std::map<std::tuple<int, int, std::size_t>, SummaryRow> groups;
  for (const ExperimentResult &r : results) {
    if (!r.ok())
      continue;
    auto [it, fresh] = groups.try_emplace({r.spec.rc, r.spec.rr, r.spec.n_train});
    SummaryRow &row = it->second;
    if (fresh) {
      row.rc = r.spec.rc;
      row.rr = r.spec.rr;
      row.n_train = r.spec.n_train;
      row.max_bit_acc = -1.0;
      row.min_bit_acc = 2.0;
    }
    row.avg_acc += r.mean_bit_accuracy;
    ++row.count;
    for (double b : r.per_bit) {
      row.max_bit_acc = std::max(row.max_bit_acc, b);
      row.min_bit_acc = std::min(row.min_bit_acc, b);
    }
  }
  if (groups.empty())
    throw InvalidArgument("nothing to summarize");
  std::vector<SummaryRow> out;
  for (auto &[k, row] : groups) {
    row.avg_acc /= static_cast<double>(row.count);
    out.push_back(row);
  }
  return out;
}

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string format_results_csv(const std::vector<ExperimentResult> &results) {
  std::string out = "puf_seed,rc,rr,n_train,fold,mean_acc";
  for (int b = 0; b < codec::kBits; ++b) {
    char col[8];
    std::snprintf(col, sizeof col, ",bit%02d", b);
    out += col;
  }
  out += ",steps,stop_reason\n";
  for (const ExperimentResult &r : results) {
    if (!r.ok())
      continue;
    out += std::to_string(r.spec.puf_seed) + "," + std::to_string(r.spec.rc) + "," +
           std::to_string(r.spec.rr) + "," + std::to_string(r.spec.n_train) + "," +
           std::to_string(r.spec.fold) + "," + fixed6(r.mean_bit_accuracy);
    for (double b : r.per_bit)
      out += "," + fixed6(b);
    out += "," + std::to_string(r.steps) + "," + r.stop_reason + "\n";
  }
  return out;
}

inline std::string format_summary_csv(const std::vector<SummaryRow> &rows) {
  if (rows.empty())
    throw InvalidArgument("empty summary");
  std::string out = "rc,rr,n_train,avg_acc,max_bit_acc,min_bit_acc\n";
  for (const SummaryRow &r : rows)
    out += std::to_string(r.rc) + "," + std::to_string(r.rr) + "," +
           std::to_string(r.n_train) + "," + fixed6(r.avg_acc) + "," +
           fixed6(r.max_bit_acc) + "," + fixed6(r.min_bit_acc) + "\n";
  return out;
}

/// Parses a results CSV back into results (spec fields beyond the columns
/// keep their defaults).
inline std::vector<ExperimentResult> parse_results_csv(std::string_view text) {
  std::vector<ExperimentResult> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      nl = text.size();
    const std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line_no == 1) {
      if (line.rfind("puf_seed,rc,rr,n_train,fold,mean_acc,", 0) != 0)
        throw ParseError(1, "not a results CSV");
      continue;
    }
    if (line.empty())
      continue;
    std::vector<std::string> f;
    std::size_t a = 0;
    for (std::size_t b; (b = line.find(',', a)) != std::string::npos; a = b + 1)
      f.push_back(line.substr(a, b - a));
    f.push_back(line.substr(a));
    if (f.size() != 6 + codec::kBits + 2)
      throw ParseError(line_no, "expected " + std::to_string(8 + codec::kBits) + " columns");
    try {
      ExperimentResult r;
      r.spec.puf_seed = std::stoull(f[0]);
      r.spec.rc = std::stoi(f[1]);
      r.spec.rr = std::stoi(f[2]);
      r.spec.n_train = std::stoull(f[3]);
      r.spec.fold = std::stoi(f[4]);
      r.mean_bit_accuracy = std::stod(f[5]);
      for (int b = 0; b < codec::kBits; ++b)
        r.per_bit[static_cast<std::size_t>(b)] = std::stod(f[static_cast<std::size_t>(6 + b)]);
      r.steps = std::stoll(f[6 + codec::kBits]);
      r.stop_reason = f[7 + codec::kBits];
      out.push_back(std::move(r));
    } catch (const std::logic_error &) {
      throw ParseError(line_no, "malformed number");
    }
  }
  return out;
}

} // namespace mvlpuf::harness
