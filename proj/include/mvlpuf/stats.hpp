// SPDX-License-Identifier: Apache-2.0
/**
 * @file   stats.hpp
 * @brief  Statistical validation of simulated PUFs: uniformity, response-bit
 *         autocorrelation, a birthday-bound collision scan (bijectivity
 *         proxy), avalanche profile and per-cell analog quantiles.
 */
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mvlpuf/error.hpp"
#include "mvlpuf/puf.hpp"
#include "mvlpuf/quantile.hpp"

namespace mvlpuf::stats {

using BitFractions = std::array<double, codec::kBits>;

/// Ones-fraction per response bit; index 0 is the most significant bit.
inline BitFractions uniformity(std::span<const std::uint32_t> responses) {
  if (responses.empty())
    throw InvalidArgument("uniformity of an empty dataset");
  std::array<std::size_t, codec::kBits> ones{};
  for (std::uint32_t r : responses)
    for (int b = 0; b < codec::kBits; ++b)
      ones[static_cast<std::size_t>(b)] += (r >> (codec::kBits - 1 - b)) & 1U;
  BitFractions out{};
  for (std::size_t b = 0; b < out.size(); ++b)
    out[b] = static_cast<double>(ones[b]) / static_cast<double>(responses.size());
  return out;
}

inline std::vector<std::uint32_t> responses_of(const puf::CrpDataset &ds) {
  std::vector<std::uint32_t> r;
  r.reserve(ds.crps.size());
  for (const puf::Crp &c : ds.crps)
    r.push_back(c.response);
  return r;
}

inline BitFractions uniformity(const puf::CrpDataset &ds) {
  return uniformity(responses_of(ds));
}

struct Autocorrelation {
  bool defined = false;       // false for a constant sequence
  std::vector<double> values; // lags 1..max_lag
};

/// Normalized autocorrelation of a 0/1 sequence mapped to centered +-1:
/// r(L) = [sum_t x_t x_{t+L} / (n - L)] / [sum_t x_t^2 / n].
inline Autocorrelation autocorrelation(std::span<const std::uint8_t> bits,
                                       int max_lag) {
  const auto n = bits.size();
  if (max_lag < 1 || n <= static_cast<std::size_t>(max_lag))
    throw InvalidArgument("autocorrelation needs n > max_lag >= 1");
  std::vector<double> x(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = bits[i] ? 1.0 : -1.0;
    mean += x[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double &v : x) {
    v -= mean;
    var += v * v;
  }
  var /= static_cast<double>(n);
  Autocorrelation ac;
  if (!(var > 1e-15))
    return ac;
  ac.defined = true;
  for (int lag = 1; lag <= max_lag; ++lag) {
    const auto L = static_cast<std::size_t>(lag);
    double s = 0.0;
    for (std::size_t t = 0; t + L < n; ++t)
      s += x[t] * x[t + L];
    ac.values.push_back(s / static_cast<double>(n - L) / var);
  }
  return ac;
}

/// Autocorrelation of one response bit over challenges 0..n-1 in order.
inline Autocorrelation bit_autocorrelation(const puf::PufRealization &p, int bit,
                                           int max_lag, int n) {
  if (bit < 0 || bit >= codec::kBits)
    throw InvalidArgument("bit index must lie in [0, 24)");
  if (n <= max_lag || max_lag < 1)
    throw InvalidArgument("autocorrelation needs n > max_lag >= 1");
  const puf::CompiledPuf compiled(p);
  std::vector<std::uint8_t> seq(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c)
    seq[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(
        (compiled.evaluate(static_cast<std::uint32_t>(c)) >> (codec::kBits - 1 - bit)) & 1U);
  return autocorrelation(seq, max_lag);
}

struct CollisionScan {
  std::size_t collisions = 0;
  std::size_t sample_size = 0;

  /// Expected count for uniform 24-bit responses: n(n-1)/2^25.
  double birthday_expectation() const noexcept {
    const auto n = static_cast<double>(sample_size);
    return n * (n - 1.0) / 33554432.0;
  }
};

/// Number of responses that repeat an earlier one (n minus distinct count).
inline CollisionScan collision_scan(std::span<const std::uint32_t> responses) {
  puf::ChallengeSet seen;
  CollisionScan scan{0, responses.size()};
  for (std::uint32_t r : responses)
    if (!seen.insert(r & codec::kMaxValue))
      ++scan.collisions;
  return scan;
}

inline CollisionScan collision_scan(const puf::CrpDataset &ds) {
  return collision_scan(responses_of(ds));
}

/// Mean fraction of response bits flipped by toggling challenge bit j
/// (index j means challenge ^ (1 << j)).
inline BitFractions avalanche_profile(const puf::PufRealization &p, int n,
                                      std::uint64_t seed) {
  if (n < 100)
    throw InvalidArgument("avalanche profile needs n >= 100");
  const puf::CompiledPuf compiled(p);
  const auto challenges =
      puf::random_challenges(static_cast<std::size_t>(n), seed, "avalanche");
  std::array<std::size_t, codec::kBits> flips{};
  for (std::uint32_t c : challenges) {
    const std::uint32_t base = compiled.evaluate(c);
    for (int j = 0; j < codec::kBits; ++j)
      flips[static_cast<std::size_t>(j)] += static_cast<std::size_t>(
          std::popcount(base ^ compiled.evaluate(c ^ (1U << j))));
  }
  BitFractions out{};
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = static_cast<double>(flips[j]) / (static_cast<double>(n) * codec::kBits);
  return out;
}

using QuantileRow = std::vector<std::pair<double, double>>; // (q, value)

inline std::vector<QuantileRow> quantile_report(const puf::PufRealization &p,
                                                std::span<const double> qs, int n,
                                                std::uint64_t seed) {
  if (n < 1000)
    throw InvalidArgument("quantile report needs n >= 1000");
  for (double q : qs)
    if (!(q >= 0.0 && q <= 1.0))
      throw InvalidArgument("quantile levels must lie in [0, 1]");
  const puf::CompiledPuf compiled(p);
  const auto challenges =
      puf::random_challenges(static_cast<std::size_t>(n), seed, "quantiles");
  std::vector<QuantileRow> rows;
  std::vector<double> sample(challenges.size());
  for (int cell = 0; cell < puf::kCells; ++cell) {
    for (std::size_t i = 0; i < challenges.size(); ++i)
      sample[i] = compiled.analog(cell, challenges[i]);
    std::sort(sample.begin(), sample.end());
    QuantileRow row;
    for (double q : qs)
      row.emplace_back(q, sorted_quantile(sample, q));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct ValidationConfig {
  int n = 10000;          // CRPs for uniformity and collision scan
  std::uint64_t seed = 0; // sampling seed for random challenges
  int max_lag = 50;
  int autocorr_n = 10000;
  int avalanche_n = 1000;
  std::vector<double> quantiles{0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
};

struct ValidationReport {
  BitFractions uniformity{};
  std::vector<Autocorrelation> autocorr; // one per response bit
  CollisionScan collisions;
  BitFractions avalanche{};
  std::vector<QuantileRow> analog_quantiles;
};

inline ValidationReport validate(const puf::PufRealization &p,
                                 const puf::CrpDataset &ds,
                                 const ValidationConfig &cfg) {
  ValidationReport r;
  r.uniformity = uniformity(ds);
  r.collisions = collision_scan(ds);
  for (int b = 0; b < codec::kBits; ++b)
    r.autocorr.push_back(bit_autocorrelation(p, b, cfg.max_lag, cfg.autocorr_n));
  r.avalanche = avalanche_profile(p, cfg.avalanche_n, cfg.seed);
  r.analog_quantiles = quantile_report(p, cfg.quantiles, std::max(cfg.n, 1000), cfg.seed);
  return r;
}

inline nlohmann::json to_json(const ValidationReport &r) {
  using nlohmann::json;
  json ac = json::array();
  for (const Autocorrelation &a : r.autocorr)
    ac.push_back(a.defined ? json(a.values) : json(nullptr));
  json quant = json::array();
  for (const QuantileRow &row : r.analog_quantiles) {
    json cell = json::array();
    for (auto [q, v] : row)
      cell.push_back({q, v});
    quant.push_back(cell);
  }
  return {{"uniformity", r.uniformity},
          {"autocorrelation", ac},
          {"collisions",
           {{"count", r.collisions.collisions},
            {"sample_size", r.collisions.sample_size},
            {"birthday_expectation", r.collisions.birthday_expectation()}}},
          {"avalanche", r.avalanche},
          {"analog_quantiles", quant}};
}

} // namespace mvlpuf::stats
