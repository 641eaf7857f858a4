// SPDX-License-Identifier: Apache-2.0
/**
 * @file   cli.hpp
 * @brief  Command-line front end: `puf new`, `puf crps`, `validate`, `train`,
 *         `sweep` and `report`.
 *
 * Exit status: 0 success, 1 failed cells or internal error, 2 usage or
 * invalid argument, 3 I/O or parse error, 4 training diverged in every fold.
 *
 * Every artifact carries the effective configuration: JSON outputs embed it
 * under "config", the CRP file in a "# config=" comment line, and CSV
 * outputs in a sibling "<file>.config.json".
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mvlpuf/checkpoint.hpp"
#include "mvlpuf/error.hpp"
#include "mvlpuf/harness.hpp"
#include "mvlpuf/io.hpp"
#include "mvlpuf/puf.hpp"
#include "mvlpuf/stats.hpp"

namespace mvlpuf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDiverged = 4;

/// Thrown by parse_cli for help output (status 0) and usage errors.
struct CliExit {
  int status;
  std::string text;
};

struct RunConfig {
  std::string command; // "puf new", "puf crps", "validate", "train", "sweep", "report"

  // PUF realization.
  std::uint64_t seed = 0;
  double sigma = puf::kDefaultSigma;
  puf::RealizeOptions realize;

  // Paths.
  fs::path output;
  std::optional<fs::path> puf_path;
  fs::path crps_path;
  fs::path results_path;
  std::optional<fs::path> cells_dir;
  std::optional<fs::path> checkpoint_dir;

  // puf crps
  std::size_t count = 10000;
  std::uint64_t gen_seed = 0;

  // validate
  stats::ValidationConfig validation;

  // train / sweep
  harness::SweepGrid grid;
  std::optional<int> only_fold;
  int jobs = 1;
  bool quiet = false;
};

inline json to_json(const RunConfig &c) {
  json j = {{"command", c.command}};
  auto puf_fields = [&] {
    j["seed"] = c.seed;
    j["sigma"] = c.sigma;
    j["coupling_min"] = c.realize.coupling_min;
    j["coupling_max"] = c.realize.coupling_max;
    j["cal_seed"] = c.realize.cal_seed;
    j["n_cal"] = c.realize.n_cal;
  };
  if (c.command == "puf new") {
    puf_fields();
  } else if (c.command == "puf crps") {
    j["puf"] = c.puf_path ? c.puf_path->string() : "";
    j["count"] = c.count;
    j["gen_seed"] = c.gen_seed;
  } else if (c.command == "validate") {
    j["puf"] = c.puf_path ? c.puf_path->string() : "";
    j["crps"] = c.crps_path.string();
    j["seed"] = c.validation.seed;
    j["max_lag"] = c.validation.max_lag;
    j["autocorr_n"] = c.validation.autocorr_n;
    j["avalanche_n"] = c.validation.avalanche_n;
    j["quantile_n"] = c.validation.n;
    j["quantiles"] = c.validation.quantiles;
  } else if (c.command == "train" || c.command == "sweep") {
    if (c.puf_path)
      j["puf"] = c.puf_path->string();
    j["puf_seeds"] = c.grid.puf_seeds;
    j["rc"] = c.grid.rcs;
    j["rr"] = c.grid.rrs;
    j["n_train"] = c.grid.n_trains;
    j["folds"] = c.grid.folds;
    if (c.only_fold)
      j["fold"] = *c.only_fold;
    json base = harness::to_json(c.grid.base);
    for (const char *k : {"puf_seed", "rc", "rr", "n_train", "fold", "n_folds"})
      base.erase(k);
    j["experiment"] = base;
    j["jobs"] = c.jobs;
  } else if (c.command == "report") {
    j["results"] = c.results_path.string();
  }
  j["output"] = c.output.string();
  return j;
}

namespace detail {

inline void add_realize_options(CLI::App *app, RunConfig &c) {
  app->add_option("--sigma", c.sigma, "Fabrication variation scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--cal-seed", c.realize.cal_seed, "Threshold calibration seed")
      ->capture_default_str();
  app->add_option("--n-cal", c.realize.n_cal, "Calibration challenges per cell")
      ->check(CLI::Range(puf::kMinCalibrationSize, 1 << 24))
      ->capture_default_str();
  app->add_option("--coupling-min", c.realize.coupling_min,
                  "Lower bound of switched retardance (rad)")
      ->capture_default_str();
  app->add_option("--coupling-max", c.realize.coupling_max,
                  "Upper bound of switched retardance (rad)")
      ->capture_default_str();
}

inline void add_experiment_options(CLI::App *app, RunConfig &c) {
  harness::ExperimentSpec &b = c.grid.base;
  add_realize_options(app, c);
  app->add_option("--test-size", b.test_size, "Test CRPs per fold")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24))
      ->capture_default_str();
  app->add_option("--master-seed", b.master_seed, "Seed for splits, init and batches")
      ->capture_default_str();
  app->add_option("--hidden-width", b.hidden_width, "Units per hidden layer")
      ->check(CLI::Range(1, 1 << 16))
      ->capture_default_str();
  app->add_option("--n-hidden", b.n_hidden, "Hidden layers")
      ->check(CLI::Range(0, 64))
      ->capture_default_str();
  app->add_option("--output-scale", b.output_scale, "Head scale: radix (R_r-1) or width (D_r-1)")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, harness::OutputScale>{
              {"radix", harness::OutputScale::RadixMinusOne},
              {"width", harness::OutputScale::WidthMinusOne}},
          CLI::ignore_case));
  app->add_flag("--normalize-inputs", b.normalize_inputs,
                "Divide input digits by R_c - 1");
  app->add_option("--decode", b.decode, "Out-of-range decoded values: modulo or clamp")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, harness::DecodePolicy>{
              {"modulo", harness::DecodePolicy::Modulo},
              {"clamp", harness::DecodePolicy::Clamp}},
          CLI::ignore_case));
  train::TrainConfig &t = b.train;
  app->add_option("--batch-rule", t.batch_rule, "min(n, batch) or max(n, batch)")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, train::BatchRule>{{"min", train::BatchRule::Min},
                                                  {"max", train::BatchRule::Max}},
          CLI::ignore_case));
  app->add_option("--batch-size", t.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--lr", t.schedule.lr0, "Initial learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--first-cycle", t.schedule.first_cycle)
      ->check(CLI::Range(1.0, 1e12))
      ->capture_default_str();
  app->add_option("--cycle-multiplier", t.schedule.cycle_multiplier)
      ->check(CLI::Range(1.0, 1e6))
      ->capture_default_str();
  app->add_option("--min-steps", t.min_steps)->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--plateau-window", t.plateau_window)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--plateau-epsilon", t.plateau_epsilon)
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--step-cap", t.step_cap)->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--folds", c.grid.folds, "Independently seeded train/test resamples")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  app->add_flag("-q,--quiet", c.quiet, "No per-cell progress on stderr");
}

inline const CLI::Validator kRadix = CLI::Range(2, 256).description("radix in [2, 256]");

} // namespace detail

/// Parses argv into a validated RunConfig. Throws CliExit for --help, an
/// empty command line and any usage error.
inline RunConfig parse_cli(int argc, const char *const *argv) {
  RunConfig c;
  CLI::App app{"Photonic PUF simulator and MLP modeling-attack lab", "mvlpuf"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  // Given before the subcommand. Options of a subcommand go in a section of
  // the same name, e.g. [sweep]. Command-line flags win over file values.
  app.set_config("--config", "", "TOML/INI file with option defaults");

  CLI::App *puf_cmd = app.add_subcommand("puf", "Realize PUFs and generate CRPs");
  puf_cmd->require_subcommand(1);

  CLI::App *puf_new = puf_cmd->add_subcommand("new", "Realize and calibrate a PUF");
  puf_new->add_option("--seed", c.seed, "Fabrication seed")->required();
  detail::add_realize_options(puf_new, c);
  puf_new->add_option("-o,--output", c.output, "PUF JSON file")->required();

  CLI::App *puf_crps = puf_cmd->add_subcommand("crps", "Generate a CRP file");
  puf_crps->add_option("--puf", c.puf_path, "PUF JSON file")->required();
  puf_crps->add_option("--count", c.count, "Distinct challenges")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24))
      ->capture_default_str();
  puf_crps->add_option("--seed", c.gen_seed, "Challenge sampling seed")->required();
  puf_crps->add_option("-o,--output", c.output, "CRP text file")->required();

  CLI::App *val = app.add_subcommand("validate", "Statistical validation report");
  val->add_option("--puf", c.puf_path, "PUF JSON file")->required();
  val->add_option("--crps", c.crps_path, "CRP text file")->required();
  val->add_option("--seed", c.validation.seed, "Seed for avalanche/quantile sampling")
      ->capture_default_str();
  val->add_option("--max-lag", c.validation.max_lag)->check(CLI::Range(1, 100000))->capture_default_str();
  val->add_option("--autocorr-n", c.validation.autocorr_n, "Ordered challenges 0..n-1")
      ->check(CLI::Range(2, 1 << 24))
      ->capture_default_str();
  val->add_option("--avalanche-n", c.validation.avalanche_n)
      ->check(CLI::Range(100, 1 << 24))
      ->capture_default_str();
  val->add_option("--quantile-n", c.validation.n)
      ->check(CLI::Range(1000, 1 << 24))
      ->capture_default_str();
  val->add_option("-o,--output", c.output, "Report JSON file")->required();

  std::uint64_t train_puf_seed = 0;
  int train_rc = 2, train_rr = 2;
  std::size_t train_n = 100;
  int fold = -1;
  CLI::App *tr = app.add_subcommand("train", "Train and evaluate one (R_c, R_r, n_train) cell");
  auto *tr_puf = tr->add_option("--puf", c.puf_path, "PUF JSON file");
  tr->add_option("--puf-seed", train_puf_seed, "Realize the PUF from this seed")
      ->excludes(tr_puf);
  tr->add_option("--rc", train_rc, "Challenge radix")->check(detail::kRadix)->capture_default_str();
  tr->add_option("--rr", train_rr, "Response radix")->check(detail::kRadix)->capture_default_str();
  tr->add_option("--n-train", train_n, "Training CRPs")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24))
      ->capture_default_str();
  tr->add_option("--fold", fold, "Run only this fold");
  tr->add_option("--checkpoint-dir", c.checkpoint_dir, "Write one model checkpoint per fold");
  detail::add_experiment_options(tr, c);
  tr->add_option("-o,--output", c.output, "Results CSV")->required();

  CLI::App *sw = app.add_subcommand("sweep", "Run a grid of experiments");
  sw->add_option("--puf-seeds", c.grid.puf_seeds, "PUF seeds")->capture_default_str();
  sw->add_option("--rc", c.grid.rcs, "Challenge radices")->check(detail::kRadix)->capture_default_str();
  sw->add_option("--rr", c.grid.rrs, "Response radices")->check(detail::kRadix)->capture_default_str();
  sw->add_option("--n-train", c.grid.n_trains, "Training sizes")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24))
      ->capture_default_str();
  sw->add_option("--jobs", c.jobs, "Parallel cells")->check(CLI::Range(1, 1024))->capture_default_str();
  sw->add_option("--cells", c.cells_dir, "Per-cell result directory (enables resume)");
  detail::add_experiment_options(sw, c);
  sw->add_option("-o,--output", c.output, "Results CSV")->required();

  CLI::App *rep = app.add_subcommand("report", "Summarize a results CSV");
  rep->add_option("--results", c.results_path, "Results CSV")->required()->check(CLI::ExistingFile);
  rep->add_option("-o,--output", c.output, "Summary CSV")->required();

  if (argc <= 1)
    throw CliExit{kExitUsage, app.help()};
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    const CLI::App *target = &app;
    for (CLI::App *sub = target->get_subcommands().empty() ? nullptr : target->get_subcommands().front();
         sub; sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front())
      target = sub;
    throw CliExit{kExitOk, target->help()};
  } catch (const CLI::CallForAllHelp &) {
    throw CliExit{kExitOk, app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError &e) {
    throw CliExit{kExitUsage, std::string("error: ") + e.what() + "\nRun with --help for usage.\n"};
  }

  if (*puf_new)
    c.command = "puf new";
  else if (*puf_crps)
    c.command = "puf crps";
  else if (*val)
    c.command = "validate";
  else if (*tr)
    c.command = "train";
  else if (*sw)
    c.command = "sweep";
  else
    c.command = "report";

  auto usage = [](const std::string &msg) {
    return CliExit{kExitUsage, "error: " + msg + "\nRun with --help for usage.\n"};
  };
  if (c.command == "puf new" || c.command == "train" || c.command == "sweep")
    if (!(c.realize.coupling_min <= c.realize.coupling_max))
      throw usage("--coupling-min must not exceed --coupling-max");
  if (c.command == "train") {
    c.grid.puf_seeds = {train_puf_seed};
    c.grid.rcs = {train_rc};
    c.grid.rrs = {train_rr};
    c.grid.n_trains = {train_n};
    if (fold >= 0 || tr->count("--fold")) {
      if (fold < 0 || fold >= c.grid.folds)
        throw usage("--fold must lie in [0, --folds)");
      c.only_fold = fold;
    }
  }
  if (c.command == "train" || c.command == "sweep") {
    c.grid.base.sigma = c.sigma;
    c.grid.base.realize = c.realize;
    if (c.grid.puf_seeds.empty() || c.grid.rcs.empty() || c.grid.rrs.empty() ||
        c.grid.n_trains.empty())
      throw usage("sweep grid lists must be nonempty");
    try {
      (void)c.grid.cells();
    } catch (const InvalidArgument &e) {
      throw usage(e.what());
    }
  }
  if (c.command == "validate" && c.validation.autocorr_n <= c.validation.max_lag)
    throw usage("--autocorr-n must exceed --max-lag");
  return c;
}

// --- command implementations ------------------------------------------------

inline fs::path sidecar(const fs::path &csv) {
  fs::path p = csv;
  p += ".config.json";
  return p;
}

inline void write_csv_with_config(const fs::path &path, const std::string &csv,
                                  const json &config) {
  io::write_file_atomic(path, csv);
  io::write_file_atomic(sidecar(path), config.dump(2) + "\n");
}

inline void log_cell(const RunConfig &c, const harness::ExperimentResult &r, bool resumed) {
  if (c.quiet)
    return;
  const auto &s = r.spec;
  std::cerr << "[cell] puf=" << s.puf_seed << " rc=" << s.rc << " rr=" << s.rr
            << " n=" << s.n_train << " fold=" << s.fold;
  if (!r.ok())
    std::cerr << " FAILED: " << r.error << "\n";
  else
    std::cerr << " acc=" << harness::fixed6(r.mean_bit_accuracy) << " steps=" << r.steps
              << " stop=" << r.stop_reason << (resumed ? " (resumed)" : "") << "\n";
}

/// Exit status for a finished set of cells.
inline int cells_status(const std::vector<harness::ExperimentResult> &results) {
  bool all_diverged = !results.empty();
  for (const auto &r : results) {
    if (!r.ok())
      return kExitFailure;
    all_diverged = all_diverged && r.diverged();
  }
  return all_diverged ? kExitDiverged : kExitOk;
}

inline int run_puf_new(const RunConfig &c) {
  const puf::PufRealization p = puf::realize_puf(c.seed, c.sigma, c.realize);
  io::write_puf(p, c.output, to_json(c));
  return kExitOk;
}

inline int run_puf_crps(const RunConfig &c) {
  const puf::PufRealization p = io::read_puf(*c.puf_path);
  const puf::CrpDataset ds = puf::generate_dataset(p, c.count, c.gen_seed);
  std::string text = io::format_dataset(ds);
  // Insert the config comment after the two fixed header lines.
  std::size_t second = text.find('\n', text.find('\n') + 1) + 1;
  text.insert(second, "# config=" + to_json(c).dump() + "\n");
  io::write_file_atomic(c.output, text);
  return kExitOk;
}

inline int run_validate(const RunConfig &c) {
  const puf::PufRealization p = io::read_puf(*c.puf_path);
  const puf::CrpDataset ds = io::read_dataset(c.crps_path);
  if (ds.puf_seed != p.seed || ds.cal_seed != p.cal_seed)
    throw InvalidArgument("CRP file header does not match the PUF (seed or cal_seed)");
  if (ds.crps.empty())
    throw InvalidArgument("CRP file holds no CRPs");
  json report = stats::to_json(stats::validate(p, ds, c.validation));
  report["crp_count"] = ds.crps.size();
  report["config"] = to_json(c);
  io::write_file_atomic(c.output, report.dump(2) + "\n");
  return kExitOk;
}

inline int run_train(const RunConfig &c) {
  harness::ExperimentSpec base = c.grid.base;
  base.rc = c.grid.rcs.front();
  base.rr = c.grid.rrs.front();
  base.n_train = c.grid.n_trains.front();
  base.n_folds = c.grid.folds;
  puf::PufRealization p;
  if (c.puf_path) {
    p = io::read_puf(*c.puf_path);
    if (!p.calibrated())
      throw InvalidState("PUF file is not calibrated");
    base.sigma = p.sigma;
    base.realize = {p.coupling_min, p.coupling_max, p.cal_seed, p.n_cal};
  } else {
    p = puf::realize_puf(c.grid.puf_seeds.front(), base.sigma, base.realize);
  }
  base.puf_seed = p.seed;
  if (c.checkpoint_dir)
    fs::create_directories(*c.checkpoint_dir);

  std::vector<harness::ExperimentResult> results;
  for (int f = 0; f < base.n_folds; ++f) {
    if (c.only_fold && *c.only_fold != f)
      continue;
    harness::ExperimentSpec s = base;
    s.fold = f;
    mlp::MlpModel model;
    results.push_back(harness::run_experiment(s, p, c.checkpoint_dir ? &model : nullptr));
    log_cell(c, results.back(), false);
    if (c.checkpoint_dir)
      mlp::write_checkpoint(model, *c.checkpoint_dir / ("fold" + std::to_string(f) + ".mlpf"));
  }
  json cfg = to_json(c);
  cfg["experiment"]["sigma"] = base.sigma;
  cfg["experiment"]["cal_seed"] = base.realize.cal_seed;
  cfg["puf_seeds"] = {base.puf_seed};
  write_csv_with_config(c.output, harness::format_results_csv(results), cfg);
  return cells_status(results);
}

inline int run_sweep_cmd(const RunConfig &c) {
  harness::SweepOptions opt;
  opt.jobs = c.jobs;
  opt.cell_dir = c.cells_dir;
  opt.on_done = [&](const harness::ExperimentResult &r, bool resumed) { log_cell(c, r, resumed); };
  const auto results = harness::run_sweep(c.grid, opt);
  write_csv_with_config(c.output, harness::format_results_csv(results), to_json(c));
  return cells_status(results);
}

inline int run_report(const RunConfig &c) {
  const auto results = harness::parse_results_csv(io::read_file(c.results_path));
  json cfg = to_json(c);
  const fs::path upstream = sidecar(c.results_path);
  if (fs::exists(upstream)) {
    try {
      cfg["source_config"] = json::parse(io::read_file(upstream));
    } catch (const json::exception &e) {
      throw IoError(upstream.string() + ": " + e.what());
    }
  }
  write_csv_with_config(c.output, harness::format_summary_csv(harness::summarize(results)), cfg);
  return kExitOk;
}

/// Dispatches a parsed configuration. Errors are reported on `err` with
/// their machine-readable code and mapped onto exit statuses.
inline int run(const RunConfig &c, std::ostream &err = std::cerr) {
  try {
    if (c.command == "puf new")
      return run_puf_new(c);
    if (c.command == "puf crps")
      return run_puf_crps(c);
    if (c.command == "validate")
      return run_validate(c);
    if (c.command == "train")
      return run_train(c);
    if (c.command == "sweep")
      return run_sweep_cmd(c);
    if (c.command == "report")
      return run_report(c);
    throw InvalidArgument("unknown command '" + c.command + "'");
  } catch (const InvalidArgument &e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError &e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError &e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error &e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const fs::filesystem_error &e) {
    err << "error [io-error]: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception &e) {
    err << "error [internal]: " << e.what() << "\n";
    return kExitFailure;
  }
}

inline int main(int argc, const char *const *argv, std::ostream &out = std::cout,
                std::ostream &err = std::cerr) {
  RunConfig c;
  try {
    c = parse_cli(argc, argv);
  } catch (const CliExit &e) {
    (e.status == kExitOk ? out : err) << e.text;
    return e.status;
  }
  return run(c, err);
}

} // namespace mvlpuf::cli
