// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "mvlpuf/cli.hpp"

namespace fs = std::filesystem;
using namespace mvlpuf;
using nlohmann::json;

namespace {

struct Outcome {
  int status;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mvlpuf");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int st = mvlpuf::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {st, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("mvlpuf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string &name) const { return (dir / name).string(); }
  fs::path dir;
};

const std::vector<std::string> kTiny = {"--hidden-width", "8", "--n-hidden", "1",
                                        "--test-size", "500", "--min-steps", "20",
                                        "--step-cap", "40", "--n-cal", "256", "-q"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string> &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

} // namespace

TEST(CliParse, UsageErrors) {
  EXPECT_EQ(invoke({}).status, 2);
  EXPECT_EQ(invoke({"frobnicate"}).status, 2);
  EXPECT_EQ(invoke({"train", "--rr", "1", "-o", "x.csv"}).status, 2);
  EXPECT_EQ(invoke({"train", "--rc", "257", "-o", "x.csv"}).status, 2);
  EXPECT_EQ(invoke({"train", "--bogus", "-o", "x.csv"}).status, 2);
  EXPECT_EQ(invoke({"train", "--fold", "5", "--folds", "5", "-o", "x.csv"}).status, 2);
  EXPECT_EQ(invoke({"puf", "new", "--seed", "1", "--sigma", "0", "-o", "p.json"}).status, 2);
  EXPECT_EQ(invoke({"puf", "new", "--seed", "1", "--coupling-min", "2", "--coupling-max", "1",
                 "-o", "p.json"}).status, 2);
  EXPECT_EQ(invoke({"train", "--puf", "a.json", "--puf-seed", "3", "-o", "x.csv"}).status, 2);
  EXPECT_EQ(invoke({"report", "--results", "/nonexistent/file.csv", "-o", "s.csv"}).status, 2);
  const auto bad = invoke({"train", "--rr", "1", "-o", "x.csv"});
  EXPECT_NE(bad.err.find("--help"), std::string::npos);
}

TEST(CliParse, Help) {
  const auto h = invoke({"--help"});
  EXPECT_EQ(h.status, 0);
  EXPECT_NE(h.out.find("sweep"), std::string::npos);
  const auto t = invoke({"train", "--help"});
  EXPECT_EQ(t.status, 0);
  EXPECT_NE(t.out.find("--n-train"), std::string::npos);
}

TEST_F(CliTest, PufCrpsValidatePipeline) {
  ASSERT_EQ(invoke({"puf", "new", "--seed", "4", "--n-cal", "512", "-o", path("p.json")}).status, 0);
  ASSERT_EQ(invoke({"puf", "crps", "--puf", path("p.json"), "--count", "3000", "--seed", "9",
                 "-o", path("a.crp")}).status, 0);
  const std::string a = io::read_file(path("a.crp"));
  // The config line echoes the output path, so regenerate in place.
  ASSERT_EQ(invoke({"puf", "crps", "--puf", path("p.json"), "--count", "3000", "--seed", "9",
                 "-o", path("a.crp")}).status, 0);
  EXPECT_EQ(a, io::read_file(path("a.crp")));
  EXPECT_NE(a.find("# config="), std::string::npos);
  EXPECT_EQ(io::read_dataset(path("a.crp")).crps.size(), 3000U);

  // Same seed, same realization.
  ASSERT_EQ(invoke({"puf", "new", "--seed", "4", "--n-cal", "512", "-o", path("q.json")}).status, 0);
  const auto p1 = io::read_puf(path("p.json")), p2 = io::read_puf(path("q.json"));
  for (int i = 0; i < puf::kCells; ++i)
    EXPECT_EQ(p1.cells[static_cast<std::size_t>(i)].threshold,
              p2.cells[static_cast<std::size_t>(i)].threshold);

  const auto v = invoke({"validate", "--puf", path("p.json"), "--crps", path("a.crp"),
                      "--autocorr-n", "4000", "--max-lag", "16", "--avalanche-n", "200",
                      "--quantile-n", "2000", "-o", path("v.json")});
  ASSERT_EQ(v.status, 0) << v.err;
  const json rep = json::parse(io::read_file(path("v.json")));
  EXPECT_EQ(rep.at("crp_count"), 3000);
  EXPECT_EQ(rep.at("config").at("command"), "validate");

  // A CRP file from a different PUF is rejected.
  ASSERT_EQ(invoke({"puf", "new", "--seed", "5", "--n-cal", "512", "-o", path("r.json")}).status, 0);
  EXPECT_EQ(invoke({"validate", "--puf", path("r.json"), "--crps", path("a.crp"),
                 "-o", path("w.json")}).status, 2);
}

TEST_F(CliTest, IoErrors) {
  EXPECT_EQ(invoke({"puf", "crps", "--puf", path("missing.json"), "--seed", "1",
                 "-o", path("x.crp")}).status, 3);
  io::write_file_atomic(path("bad.json"), "{not json");
  EXPECT_EQ(invoke({"puf", "crps", "--puf", path("bad.json"), "--seed", "1",
                 "-o", path("x.crp")}).status, 3);
  io::write_file_atomic(path("bad.csv"), "hello\n");
  EXPECT_EQ(invoke({"report", "--results", path("bad.csv"), "-o", path("s.csv")}).status, 3);
}

TEST_F(CliTest, TrainWritesCsvSidecarAndCheckpoints) {
  const auto r = invoke(with({"train", "--puf-seed", "2", "--rc", "4", "--rr", "8", "--n-train",
                           "50", "--folds", "2", "--checkpoint-dir", path("ck"), "-o",
                           path("t.csv")},
                          kTiny));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = harness::parse_results_csv(io::read_file(path("t.csv")));
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[1].spec.fold, 1);
  EXPECT_EQ(rows[0].spec.rr, 8);
  const json cfg = json::parse(io::read_file(path("t.csv.config.json")));
  EXPECT_EQ(cfg.at("command"), "train");
  const auto m = mlp::read_checkpoint(path("ck/fold1.mlpf"));
  EXPECT_EQ(m.config.input_width, 12);
  EXPECT_EQ(m.config.output_width, 8);

  // --fold restricts the run.
  ASSERT_EQ(invoke(with({"train", "--puf-seed", "2", "--n-train", "50", "--folds", "2", "--fold",
                      "1", "-o", path("f.csv")},
                     kTiny)).status, 0);
  const auto one = harness::parse_results_csv(io::read_file(path("f.csv")));
  ASSERT_EQ(one.size(), 1U);
  EXPECT_EQ(one[0].spec.fold, 1);
}

TEST_F(CliTest, TrainFromPufFileMatchesSeed) {
  ASSERT_EQ(invoke({"puf", "new", "--seed", "2", "--n-cal", "256", "-o", path("p.json")}).status, 0);
  ASSERT_EQ(invoke(with({"train", "--puf", path("p.json"), "--n-train", "40", "--folds", "1", "-o",
                      path("a.csv")},
                     kTiny)).status, 0);
  ASSERT_EQ(invoke(with({"train", "--puf-seed", "2", "--n-train", "40", "--folds", "1", "-o",
                      path("b.csv")},
                     kTiny)).status, 0);
  EXPECT_EQ(io::read_file(path("a.csv")), io::read_file(path("b.csv")));
}

TEST_F(CliTest, SweepResumeAndReport) {
  const auto args = with({"sweep", "--puf-seeds", "1", "--rc", "2", "4", "--rr", "2",
                          "--n-train", "30", "--folds", "2", "--jobs", "2", "--cells",
                          path("cells"), "-o", path("s.csv")},
                         kTiny);
  ASSERT_EQ(invoke(args).status, 0);
  const std::string first = io::read_file(path("s.csv"));
  EXPECT_EQ(harness::parse_results_csv(first).size(), 4U);

  std::vector<std::string> loud = args;
  loud.pop_back(); // drop -q
  const auto again = invoke(loud);
  ASSERT_EQ(again.status, 0);
  EXPECT_EQ(io::read_file(path("s.csv")), first);

  ASSERT_EQ(invoke({"report", "--results", path("s.csv"), "-o", path("sum.csv")}).status, 0);
  const std::string sum = io::read_file(path("sum.csv"));
  EXPECT_EQ(std::count(sum.begin(), sum.end(), '\n'), 3); // header + 2 rows
  const json cfg = json::parse(io::read_file(path("sum.csv.config.json")));
  EXPECT_EQ(cfg.at("source_config").at("command"), "sweep");
}

TEST_F(CliTest, SweepConfigFile) {
  io::write_file_atomic(path("grid.toml"), "[sweep]\nrc = [3]\nrr = [2]\nn-train = [25]\nfolds = 1\n");
  ASSERT_EQ(invoke(with({"--config", path("grid.toml"), "sweep", "--n-train", "20", "-o", path("g.csv")}, kTiny)).status,
            0);
  const auto rows = harness::parse_results_csv(io::read_file(path("g.csv")));
  ASSERT_EQ(rows.size(), 1U);
  EXPECT_EQ(rows[0].spec.rc, 3);
  EXPECT_EQ(rows[0].spec.n_train, 20U); // the flag overrides the file
}
