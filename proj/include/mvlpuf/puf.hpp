// SPDX-License-Identifier: Apache-2.0
/**
 * @file   puf.hpp
 * @brief  Seeded 24-cell photonic PUF: realization, evaluation, threshold
 *         calibration and challenge-response dataset generation.
 *
 * A cell is the optical cascade
 *
 *   edge_in -> wg0 -> S[0..5]   -> tc1 -> wg1 -> S[6..11]
 *           -> tc2 -> wg2 -> S[12..17] -> tc3 -> wg3 -> S[18..23] -> edge_out
 *
 * where wgN are birefringent waveguide sections, tcN trench couplers and
 * S[k] a switched retarder segment that adds `retardance` about `axis` when
 * challenge bit k (bit k = (challenge >> k) & 1) is set. The launch state is
 * challenge_to_state(challenge). Each cell contributes one response bit,
 * cell 0 being the most significant: bit = analog >= threshold.
 *
 * The switched segments give every cell its own challenge-dependent transfer
 * matrix. Without them all cells read the same launch state through one fixed
 * 2x2 matrix each, every bit boundary is a circle on the Poincare sphere, and
 * the 24 circles admit at most 554 distinct responses.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mvlpuf/error.hpp"
#include "mvlpuf/mvl_codec.hpp"
#include "mvlpuf/optics.hpp"
#include "mvlpuf/quantile.hpp"
#include "mvlpuf/rng.hpp"

namespace mvlpuf::puf {

using optics::EdgeCouplerParams;
using optics::PolarizationState;
using optics::TransferMatrix;
using optics::TrenchCouplerParams;
using optics::WaveguideParams;

inline constexpr int kCells = codec::kBits;
inline constexpr int kSwitchesPerSection = 6;
inline constexpr int kWaveguideSections = 4;
inline constexpr int kCouplers = 3;
inline constexpr double kDefaultSigma = 0.1;
inline constexpr int kDefaultCalibrationSize = 4096;
inline constexpr int kMinCalibrationSize = 256;

struct SwitchedRetarder {
  double axis = 0.0;       // radians, [0, pi)
  double retardance = 0.0; // radians, added when the challenge bit is set
};

struct CellParams {
  EdgeCouplerParams input;
  std::array<WaveguideParams, kWaveguideSections> waveguides{};
  std::array<TrenchCouplerParams, kCouplers> couplers{};
  std::array<SwitchedRetarder, codec::kBits> switches{};
  EdgeCouplerParams output;
  double threshold = std::numeric_limits<double>::quiet_NaN();

  bool calibrated() const noexcept { return std::isfinite(threshold); }
};

struct RealizeOptions {
  double coupling_min = 0.6; // switched-retarder retardance range, radians
  double coupling_max = 1.6;
  std::uint64_t cal_seed = 0;
  int n_cal = kDefaultCalibrationSize;
};

struct PufRealization {
  std::uint64_t seed = 0;
  double sigma = kDefaultSigma;
  double coupling_min = 0.6;
  double coupling_max = 1.6;
  std::uint64_t cal_seed = 0;
  int n_cal = 0; // 0 while uncalibrated
  std::vector<CellParams> cells;

  bool calibrated() const noexcept {
    if (cells.size() != static_cast<std::size_t>(kCells))
      return false;
    for (const CellParams &c : cells)
      if (!c.calibrated())
        return false;
    return true;
  }
};

struct Crp {
  std::uint32_t challenge = 0;
  std::uint32_t response = 0;

  bool operator==(const Crp &) const = default;
};

struct CrpDataset {
  std::uint64_t puf_seed = 0;
  double sigma = kDefaultSigma;
  std::uint64_t cal_seed = 0;
  std::uint64_t generation_seed = 0;
  std::vector<Crp> crps;

  std::size_t size() const noexcept { return crps.size(); }
  bool operator==(const CrpDataset &) const = default;
};

inline void check_challenge(std::uint64_t challenge) {
  if (challenge > codec::kMaxValue)
    throw InvalidArgument("challenge " + std::to_string(challenge) +
                          " outside [0, 2^24)");
}

/// Upper 12 bits pick the polarization angle, lower 12 bits the phase.
inline PolarizationState challenge_to_state(std::uint64_t challenge) {
  check_challenge(challenge);
  const double u = static_cast<double>(challenge >> 12);
  const double v = static_cast<double>(challenge & 0xFFFU);
  const double theta = std::numbers::pi * u / 4096.0;
  const double phi = 2.0 * std::numbers::pi * v / 4096.0;
  return {optics::cplx{std::cos(theta)}, std::sin(theta) * std::polar(1.0, phi)};
}

inline TransferMatrix switched_transfer(const SwitchedRetarder &s) noexcept {
  return optics::waveguide_transfer({s.axis, s.retardance, 0.0});
}

/// Every component matrix of `cell` for `challenge`, ordered input-to-output.
inline std::vector<TransferMatrix> cell_components(const CellParams &cell,
                                                   std::uint64_t challenge) {
  check_challenge(challenge);
  std::vector<TransferMatrix> ms;
  ms.reserve(2 + kWaveguideSections + kCouplers + codec::kBits);
  ms.push_back(optics::edge_coupler_transfer(cell.input));
  for (int s = 0; s < kWaveguideSections; ++s) {
    if (s > 0)
      ms.push_back(optics::trench_coupler_transfer(
          cell.couplers[static_cast<std::size_t>(s - 1)]));
    ms.push_back(optics::waveguide_transfer(
        cell.waveguides[static_cast<std::size_t>(s)]));
    for (int j = 0; j < kSwitchesPerSection; ++j) {
      const int k = s * kSwitchesPerSection + j;
      if ((challenge >> k) & 1U)
        ms.push_back(switched_transfer(cell.switches[static_cast<std::size_t>(k)]));
    }
  }
  ms.push_back(optics::edge_coupler_transfer(cell.output));
  return ms;
}

/// Reference evaluation: compose all component matrices, then measure.
inline double cell_analog(const CellParams &cell, std::uint64_t challenge) {
  const auto ms = cell_components(cell, challenge);
  return optics::polarized_power_fraction(
      optics::apply_transfer(optics::compose(ms), challenge_to_state(challenge)));
}

/// Cell with its fixed stretches pre-multiplied; used on every hot path.
class CompiledCell {
public:
  explicit CompiledCell(const CellParams &cell) : threshold_(cell.threshold) {
    using namespace optics;
    fixed_[0] = waveguide_transfer(cell.waveguides[0]) *
                edge_coupler_transfer(cell.input);
    for (int s = 1; s < kWaveguideSections; ++s)
      fixed_[static_cast<std::size_t>(s)] =
          waveguide_transfer(cell.waveguides[static_cast<std::size_t>(s)]) *
          trench_coupler_transfer(cell.couplers[static_cast<std::size_t>(s - 1)]);
    fixed_[kWaveguideSections] = edge_coupler_transfer(cell.output);
    for (std::size_t k = 0; k < switches_.size(); ++k)
      switches_[k] = switched_transfer(cell.switches[k]);
  }

  double analog(std::uint32_t challenge,
                const PolarizationState &launch) const noexcept {
    PolarizationState s = launch;
    for (int sec = 0; sec < kWaveguideSections; ++sec) {
      s = optics::apply_transfer(fixed_[static_cast<std::size_t>(sec)], s);
      for (int j = 0; j < kSwitchesPerSection; ++j) {
        const int k = sec * kSwitchesPerSection + j;
        if ((challenge >> k) & 1U)
          s = optics::apply_transfer(switches_[static_cast<std::size_t>(k)], s);
      }
    }
    s = optics::apply_transfer(fixed_[kWaveguideSections], s);
    return optics::polarized_power_fraction(s);
  }

  double threshold() const noexcept { return threshold_; }

private:
  std::array<TransferMatrix, kWaveguideSections + 1> fixed_{};
  std::array<TransferMatrix, codec::kBits> switches_{};
  double threshold_;
};

class CompiledPuf {
public:
  explicit CompiledPuf(const PufRealization &puf) {
    if (puf.cells.size() != static_cast<std::size_t>(kCells))
      throw InvalidArgument("a PUF needs exactly 24 cells");
    cells_.reserve(puf.cells.size());
    for (const CellParams &c : puf.cells)
      cells_.emplace_back(c);
    calibrated_ = puf.calibrated();
  }

  double analog(int cell, std::uint32_t challenge) const {
    check_challenge(challenge);
    return cells_.at(static_cast<std::size_t>(cell))
        .analog(challenge, challenge_to_state(challenge));
  }

  std::uint32_t evaluate(std::uint32_t challenge) const {
    if (!calibrated_)
      throw InvalidState("PUF thresholds are not calibrated");
    const PolarizationState launch = challenge_to_state(challenge);
    std::uint32_t response = 0;
    for (const CompiledCell &cell : cells_)
      response = (response << 1) |
                 (cell.analog(challenge, launch) >= cell.threshold() ? 1U : 0U);
    return response;
  }

  std::size_t cell_count() const noexcept { return cells_.size(); }

private:
  std::vector<CompiledCell> cells_;
  bool calibrated_ = false;
};

/// Uniform challenges drawn from a named stream (with replacement).
inline std::vector<std::uint32_t> random_challenges(std::size_t n,
                                                    std::uint64_t seed,
                                                    std::string_view tag) {
  Rng rng(seed, tag);
  std::vector<std::uint32_t> out(n);
  for (auto &c : out)
    c = static_cast<std::uint32_t>(rng.below(codec::kValueSpace));
  return out;
}

inline PufRealization calibrate_thresholds(PufRealization puf, int n_cal,
                                           std::uint64_t cal_seed) {
  if (n_cal < kMinCalibrationSize)
    throw InvalidArgument("calibration needs at least " +
                          std::to_string(kMinCalibrationSize) + " challenges");
  const CompiledPuf compiled(puf);
  const auto challenges = random_challenges(static_cast<std::size_t>(n_cal),
                                            cal_seed, "calibrate");
  std::vector<double> sample(challenges.size());
  for (int i = 0; i < kCells; ++i) {
    for (std::size_t j = 0; j < challenges.size(); ++j)
      sample[j] = compiled.analog(i, challenges[j]);
    puf.cells[static_cast<std::size_t>(i)].threshold = median(sample);
  }
  puf.cal_seed = cal_seed;
  puf.n_cal = n_cal;
  return puf;
}

/// Draws all component parameters for one cell from its private streams.
inline CellParams draw_cell(std::uint64_t seed, double sigma, int index,
                            double coupling_min, double coupling_max) {
  const auto idx = static_cast<std::uint64_t>(index);
  Rng rng(seed, "cell.optics", {idx});
  const double two_pi = 2.0 * std::numbers::pi;
  auto transmittance = [&] {
    return std::clamp(rng.normal(0.9, 0.02), 1e-6, 1.0);
  };
  auto reflectance = [&] { return std::clamp(rng.normal(0.3, sigma), 0.0, 0.95); };

  CellParams cell;
  cell.input = {transmittance(), transmittance()};
  for (std::size_t s = 0; s < kWaveguideSections; ++s) {
    WaveguideParams &w = cell.waveguides[s];
    w.theta = rng.normal(0.0, sigma);
    w.phi_te = rng.uniform(0.0, two_pi);
    w.phi_tm = rng.uniform(0.0, two_pi);
  }
  for (std::size_t c = 0; c < kCouplers; ++c) {
    TrenchCouplerParams &t = cell.couplers[c];
    t.rho_te = reflectance();
    t.rho_tm = reflectance();
    t.delta_te = rng.uniform(0.0, two_pi);
    t.delta_tm = rng.uniform(0.0, two_pi);
    t.kappa = rng.normal(0.0, sigma);
  }
  cell.output = {transmittance(), transmittance()};

  Rng sw(seed, "cell.switches", {idx});
  for (SwitchedRetarder &s : cell.switches) {
    s.axis = sw.uniform(0.0, std::numbers::pi);
    s.retardance = sw.uniform(coupling_min, coupling_max);
  }
  return cell;
}

/// Uncalibrated realization; thresholds stay NaN.
inline PufRealization draw_puf(std::uint64_t seed, double sigma,
                               double coupling_min = 0.6,
                               double coupling_max = 1.6) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidArgument("perturbation scale sigma must be > 0");
  if (!(coupling_min >= 0.0 && coupling_max >= coupling_min &&
        std::isfinite(coupling_max)))
    throw InvalidArgument("coupling range must satisfy 0 <= min <= max");
  PufRealization puf;
  puf.seed = seed;
  puf.sigma = sigma;
  puf.coupling_min = coupling_min;
  puf.coupling_max = coupling_max;
  puf.cells.reserve(kCells);
  for (int i = 0; i < kCells; ++i)
    puf.cells.push_back(draw_cell(seed, sigma, i, coupling_min, coupling_max));
  return puf;
}

inline PufRealization realize_puf(std::uint64_t seed, double sigma,
                                  const RealizeOptions &opt = {}) {
  return calibrate_thresholds(
      draw_puf(seed, sigma, opt.coupling_min, opt.coupling_max), opt.n_cal,
      opt.cal_seed);
}

inline std::uint32_t evaluate(const PufRealization &puf,
                              std::uint32_t challenge) {
  return CompiledPuf(puf).evaluate(challenge);
}

/// Dense bitset over the 2^24 challenge space.
class ChallengeSet {
public:
  ChallengeSet() : words_(codec::kValueSpace / 64, 0) {}

  template <typename Range> explicit ChallengeSet(const Range &values) : ChallengeSet() {
    for (auto v : values)
      insert(static_cast<std::uint32_t>(v));
  }

  bool contains(std::uint32_t v) const noexcept {
    return (words_[v >> 6] >> (v & 63U)) & 1U;
  }

  /// Returns true when v was not present before.
  bool insert(std::uint32_t v) noexcept {
    const std::uint64_t bit = std::uint64_t{1} << (v & 63U);
    if (words_[v >> 6] & bit)
      return false;
    words_[v >> 6] |= bit;
    ++size_;
    return true;
  }

  std::size_t size() const noexcept { return size_; }

private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

/// Distinct uniform challenges outside `exclude`, in sampling order.
inline std::vector<std::uint32_t>
sample_challenges(std::size_t count, std::uint64_t seed,
                  const ChallengeSet &exclude) {
  if (count + exclude.size() > codec::kValueSpace)
    throw ExhaustedDomain("cannot draw " + std::to_string(count) +
                          " challenges outside an exclude set of " +
                          std::to_string(exclude.size()));
  Rng rng(seed, "crp.sample");
  std::vector<std::uint32_t> out;
  out.reserve(count);
  if (2 * (count + exclude.size()) <= codec::kValueSpace) {
    ChallengeSet seen;
    while (out.size() < count) {
      const auto c = static_cast<std::uint32_t>(rng.below(codec::kValueSpace));
      if (!exclude.contains(c) && seen.insert(c))
        out.push_back(c);
    }
    return out;
  }
  // Dense regime: partial Fisher-Yates over the remaining space.
  std::vector<std::uint32_t> pool;
  pool.reserve(codec::kValueSpace - exclude.size());
  for (std::uint32_t c = 0; c < codec::kValueSpace; ++c)
    if (!exclude.contains(c))
      pool.push_back(c);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

inline CrpDataset generate_dataset(const PufRealization &puf, std::size_t count,
                                   std::uint64_t gen_seed,
                                   const ChallengeSet &exclude) {
  const CompiledPuf compiled(puf);
  if (!puf.calibrated())
    throw InvalidState("PUF thresholds are not calibrated");
  CrpDataset ds;
  ds.puf_seed = puf.seed;
  ds.sigma = puf.sigma;
  ds.cal_seed = puf.cal_seed;
  ds.generation_seed = gen_seed;
  const auto challenges = sample_challenges(count, gen_seed, exclude);
  ds.crps.reserve(challenges.size());
  for (std::uint32_t c : challenges)
    ds.crps.push_back({c, compiled.evaluate(c)});
  return ds;
}

inline CrpDataset generate_dataset(const PufRealization &puf, std::size_t count,
                                   std::uint64_t gen_seed) {
  return generate_dataset(puf, count, gen_seed, ChallengeSet{});
}

/// Fixture: every component is the identity and nothing is challenge-switched.
inline CellParams identity_cell(double threshold = 0.5) {
  CellParams cell;
  for (SwitchedRetarder &s : cell.switches)
    s = {0.0, 0.0};
  cell.threshold = threshold;
  return cell;
}

inline PufRealization identity_puf(double threshold = 0.5) {
  PufRealization puf;
  puf.cells.assign(kCells, identity_cell(threshold));
  puf.n_cal = kDefaultCalibrationSize;
  return puf;
}

} // namespace mvlpuf::puf
