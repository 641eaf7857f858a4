// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. MVLPUF_ACCEPTANCE_WIDTH overrides the hidden width
// of the attack models (default 1024).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mvlpuf/gradcheck.hpp"
#include "mvlpuf/harness.hpp"
#include "mvlpuf/io.hpp"
#include "mvlpuf/optim.hpp"
#include "mvlpuf/stats.hpp"

using namespace mvlpuf;

namespace {

const std::array<int, 11> kRadices{2, 3, 4, 5, 6, 8, 9, 10, 16, 27, 64};

int g_failed = 0;

void report(int id, bool pass, const std::string &detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  g_failed += pass ? 0 : 1;
}

template <typename... A> std::string fmt(const char *f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

/// Runs one criterion; an exception counts as a failure.
void check(int id, const std::function<void(int)> &body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(id);
  } catch (const std::exception &e) {
    report(id, false, std::string("exception: ") + e.what());
  }
  const double s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "  (criterion %d took %.1f s)\n", id, s);
}

// Smallest D with radix^D > max by repeated multiplication in 128 bits.
int width_oracle(int radix, std::uint64_t max) {
  __extension__ unsigned __int128 p = 1;
  int d = 0;
  while (p <= max) {
    p *= static_cast<unsigned>(radix);
    ++d;
  }
  return d;
}

int attack_width() {
  if (const char *w = std::getenv("MVLPUF_ACCEPTANCE_WIDTH")) {
    const int v = std::atoi(w);
    if (v > 0)
      return v;
  }
  return 1024;
}

harness::ExperimentSpec attack_spec(int rr, std::size_t n_train, int fold) {
  harness::ExperimentSpec s;
  s.puf_seed = 0;
  s.rc = 2;
  s.rr = rr;
  s.n_train = n_train;
  s.fold = fold;
  s.n_folds = 2;
  s.test_size = 10000;
  s.master_seed = 0;
  s.hidden_width = attack_width();
  return s;
}

/// Fold-mean accuracy per (rr, n_train), computed lazily and shared by
/// criteria 8 to 10.
class AttackCache {
public:
  double mean(int rr, std::size_t n) {
    const auto key = std::pair(rr, n);
    if (auto it = cache_.find(key); it != cache_.end())
      return it->second;
    if (!puf_)
      puf_ = harness::realize_for(attack_spec(2, 1, 0));
    double sum = 0.0;
    for (int f = 0; f < 2; ++f) {
      const auto r = harness::run_experiment(attack_spec(rr, n, f), *puf_);
      if (!r.ok())
        throw std::runtime_error(r.error);
      std::fprintf(stderr, "  rc=2 rr=%d n=%zu fold=%d acc=%.4f steps=%lld stop=%s (%.0f s)\n",
                   rr, n, f, r.mean_bit_accuracy, static_cast<long long>(r.steps),
                   r.stop_reason.c_str(), r.wall_seconds);
      sum += r.mean_bit_accuracy;
    }
    return cache_[key] = sum / 2.0;
  }

private:
  std::optional<puf::PufRealization> puf_;
  std::map<std::pair<int, std::size_t>, double> cache_;
};

} // namespace

int main() {
  AttackCache attacks;
  std::printf("attack model hidden width: %d\n", attack_width());

  check(1, [](int id) {
    const auto a = mlp::count_parameters(24, 24, 1024, 5);
    const auto b = mlp::count_parameters(24, 6, 1024, 5);
    report(id, a == 4269080 && b == 4250630,
           fmt("count_parameters = %lld, %lld", static_cast<long long>(a),
               static_cast<long long>(b)));
  });

  check(2, [](int id) {
    const std::array<int, 11> expect{24, 16, 12, 11, 10, 8, 8, 8, 6, 6, 4};
    bool ok = true;
    std::string got;
    for (std::size_t i = 0; i < kRadices.size(); ++i) {
      const int d = codec::digits_required(kRadices[i], codec::kMaxValue);
      ok = ok && d == expect[i] && d == width_oracle(kRadices[i], codec::kMaxValue);
      got += std::to_string(d) + (i + 1 < kRadices.size() ? "," : "");
    }
    report(id, ok, "widths {" + got + "}");
  });

  check(3, [](int id) {
    Rng rng(3, "acceptance.codec");
    std::size_t failures = 0, total = 0;
    for (int radix : kRadices) {
      const auto spec = codec::RadixSpec::make(radix);
      for (int i = 0; i < 100000; ++i, ++total) {
        const std::uint64_t v = rng.below(codec::kValueSpace);
        failures += codec::decode(codec::encode(v, spec)) != v;
      }
    }
    report(id, failures == 0, fmt("%zu round trips, %zu failures", total, failures));
  });

  check(4, [](int id) {
    Rng rng(4, "acceptance.pipeline");
    std::size_t failures = 0, total = 0;
    for (int radix : kRadices) {
      const auto spec = codec::RadixSpec::make(radix);
      const int n = 10000;
      std::vector<std::uint32_t> values(n);
      mlp::Matrix raw(n, spec.width);
      for (int i = 0; i < n; ++i) {
        values[static_cast<std::size_t>(i)] =
            static_cast<std::uint32_t>(rng.below(codec::kValueSpace));
        const auto dv = codec::encode(values[static_cast<std::size_t>(i)], spec);
        // Perturb each digit by less than half a step before rounding.
        for (int j = 0; j < spec.width; ++j)
          raw(i, j) = dv.digits[static_cast<std::size_t>(j)] + rng.uniform(-0.499, 0.499);
      }
      const auto decoded = harness::outputs_to_responses(raw, radix);
      for (int i = 0; i < n; ++i, ++total)
        failures += codec::value_to_bits(decoded[static_cast<std::size_t>(i)]) !=
                    codec::value_to_bits(values[static_cast<std::size_t>(i)]);
    }
    report(id, failures == 0, fmt("%zu responses, %zu bit mismatches", total, failures));
  });

  check(5, [](int id) {
    mlp::ModelConfig c;
    c.input_width = 6;
    c.output_width = 4;
    c.hidden_width = 8;
    c.n_hidden = 2;
    c.output_scale = 3.0;
    c.init_seed = 5;
    const auto m = mlp::init_model(c);
    Rng rng(5, "acceptance.gradcheck");
    mlp::Matrix x(7, 6), t(7, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x.data()[i] = static_cast<double>(rng.below(4));
    for (Eigen::Index i = 0; i < t.size(); ++i)
      t.data()[i] = rng.uniform(0.0, 3.0);
    const auto r = mlp::gradient_check(m, x, t, {.coordinates = 100000});
    report(id, r.max_relative_error < 1e-3,
           fmt("max relative error %.3g (absolute %.3g) over %zu coordinates",
               r.max_relative_error, r.max_absolute_error, r.checked));
  });

  check(6, [](int id) {
    const optim::ScheduleConfig s;
    const double a = optim::lr_at(s, 0), b = optim::lr_at(s, 500), c = optim::lr_at(s, 1000);
    const auto bounds = optim::cycle_boundaries(s, 7000);
    const bool ok = std::abs(a - 0.001) <= 1e-12 && std::abs(b - 0.0005) <= 1e-12 &&
                    std::abs(c - 0.001) <= 1e-12 &&
                    bounds == std::vector<std::int64_t>{1000, 3000, 7000};
    report(id, ok, fmt("lr(0)=%.12g lr(500)=%.12g lr(1000)=%.12g, %zu boundaries <= 7000", a, b, c,
                       bounds.size()));
  });

  check(7, [](int id) {
    const auto p = puf::realize_puf(7, puf::kDefaultSigma);
    const auto ds = puf::generate_dataset(p, 10000, 70);
    const auto u = stats::uniformity(ds);
    double lo = 1.0, hi = 0.0;
    for (double f : u) {
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    const std::string a = io::format_dataset(ds);
    const std::string b =
        io::format_dataset(puf::generate_dataset(puf::realize_puf(7, puf::kDefaultSigma), 10000, 70));
    report(id, lo >= 0.45 && hi <= 0.55 && a == b,
           fmt("uniformity in [%.4f, %.4f]; CRP files %s", lo, hi,
               a == b ? "byte-identical" : "DIFFER"));
  });

  check(8, [&](int id) {
    const double acc = attacks.mean(2, 10);
    report(id, acc >= 0.45 && acc <= 0.55, fmt("n_train=10 mean accuracy %.4f", acc));
  });

  check(9, [&](int id) {
    const double a100 = attacks.mean(2, 100), a1k = attacks.mean(2, 1000),
                 a10k = attacks.mean(2, 10000);
    const bool monotone = a1k >= a100 - 0.02 && a10k >= a1k - 0.02;
    report(id, monotone && a10k - a100 >= 0.03,
           fmt("accuracy %.4f / %.4f / %.4f at n=100/1000/10000 (gain %.4f)", a100, a1k, a10k,
               a10k - a100));
  });

  check(10, [&](int id) {
    const double r2 = attacks.mean(2, 10000), r10 = attacks.mean(10, 10000);
    report(id, r2 >= r10, fmt("rr=2 %.4f vs rr=10 %.4f at n=10000", r2, r10));
  });

  check(11, [](int id) {
    // Response bit j = challenge bit perm[j] XOR mask bit j.
    std::array<int, codec::kBits> perm{};
    for (int j = 0; j < codec::kBits; ++j)
      perm[static_cast<std::size_t>(j)] = (j * 7 + 3) % codec::kBits;
    const std::uint32_t mask = 0xA5C3F0U;
    auto affine = [&](std::uint32_t c) {
      std::uint32_t r = 0;
      for (int j = 0; j < codec::kBits; ++j)
        r |= ((c >> perm[static_cast<std::size_t>(j)]) & 1U) << j;
      return r ^ mask;
    };
    auto dataset = [&](std::size_t n, std::uint64_t seed, const puf::ChallengeSet &ex) {
      puf::CrpDataset ds;
      for (std::uint32_t c : puf::sample_challenges(n, seed, ex))
        ds.crps.push_back({c, affine(c)});
      return ds;
    };
    const auto tr = dataset(2000, 1, {});
    std::vector<std::uint32_t> used;
    for (const auto &c : tr.crps)
      used.push_back(c.challenge);
    const auto te = dataset(10000, 2, puf::ChallengeSet(used));

    mlp::ModelConfig mc;
    mc.hidden_width = 128;
    mc.n_hidden = 2;
    mc.init_seed = 11;
    auto model = mlp::init_model(mc);
    const auto ex = harness::prepare_examples(tr, 2, 2);
    train::TrainConfig tc;
    tc.train_seed = 11;
    const auto rep = train::train(model, ex.inputs, ex.targets, tc);
    std::vector<std::uint32_t> ch, truth;
    for (const auto &c : te.crps) {
      ch.push_back(c.challenge);
      truth.push_back(c.response);
    }
    const auto acc =
        harness::bit_accuracy(harness::predict_response_values(model, ch, 2, 2), truth);
    report(id, acc.mean >= 0.99,
           fmt("affine mapping bit accuracy %.4f after %lld steps", acc.mean,
               static_cast<long long>(rep.steps)));
  });

  check(12, [](int id) {
    const auto p = puf::realize_puf(12, puf::kDefaultSigma);
    const auto scan = stats::collision_scan(puf::generate_dataset(p, 100000, 120));
    const double e = scan.birthday_expectation();
    const bool coll_ok = std::abs(static_cast<double>(scan.collisions) - e) <= 3.0 * std::sqrt(e);

    const int n = 10000, max_lag = 50;
    const double bound = 3.0 / std::sqrt(static_cast<double>(n));
    int worst_bit = -1;
    double worst_frac = 1.0;
    int bits_ok = 0;
    for (int b = 0; b < codec::kBits; ++b) {
      const auto ac = stats::bit_autocorrelation(p, b, max_lag, n);
      int below = 0;
      if (ac.defined)
        for (double v : ac.values)
          below += std::abs(v) < bound;
      const double frac = static_cast<double>(below) / max_lag;
      bits_ok += frac >= 0.95;
      if (frac < worst_frac) {
        worst_frac = frac;
        worst_bit = b;
      }
    }
    report(id, coll_ok && bits_ok == codec::kBits,
           fmt("collisions %zu vs expected %.1f +- %.1f; autocorrelation: %d/24 bits with >= 95%% "
               "of lags below %.4f (worst bit %d at %.0f%%)",
               scan.collisions, e, 3.0 * std::sqrt(e), bits_ok, bound, worst_bit,
               100.0 * worst_frac));
  });

  std::printf("%d criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
