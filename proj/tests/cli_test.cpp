// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "property.hpp"

namespace xferlaw::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using xferlaw::testing::rel_diff;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("xferlaw_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ::unsetenv("XFERLAW_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    ::unsetenv("XFERLAW_SEED");
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, SynthThenPipelineRecoversTextCoefficients) {
  ASSERT_EQ(run({"synth", "--seed", "7", "--curves", "--out", path("runs.jsonl")}).code, kExitOk);
  const auto r = run({"pipeline", "--runs", path("runs.jsonl"), "--out", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json c = json::parse(slurp(dir_ / "out" / "coefficients.json"));
  EXPECT_LT(rel_diff(c["k"].get<double>(), 1.9e4), 0.05);
  EXPECT_LT(rel_diff(c["alpha"].get<double>(), 0.18), 0.05);
  EXPECT_LT(rel_diff(c["beta"].get<double>(), 0.38), 0.05);
  for (const char* f : {"summary.json", "table.csv", "d_of_n.json", "ossification.json", "ossification.csv",
                        "surface.json", "frontier.json", "converged_compute.json", "best_epoch.json",
                        "plots/fraction_vs_n.csv", "plots/loss_vs_n.json", "plots/transfer_over_dn.csv",
                        "plots/compute_frontier_from_scratch.csv", "plots/converged_compute.json",
                        "plots/best_epoch.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
  for (const auto& e : fs::recursive_directory_iterator(dir_)) {
    EXPECT_NE(e.path().extension(), ".tmp") << e.path();
  }
}

TEST_F(CliTest, PipelineWithoutComputeSkipsComputePlots) {
  // Single-checkpoint synthetic runs carry compute, so strip it.
  ASSERT_EQ(run({"synth", "--out", path("runs.jsonl")}).code, kExitOk);
  std::ifstream in(path("runs.jsonl"));
  std::ofstream out(path("nocompute.jsonl"));
  for (std::string line; std::getline(in, line);) {
    json j = json::parse(line);
    for (auto& c : j["checkpoints"]) c.erase("compute");
    out << j.dump() << "\n";
  }
  out.close();
  const auto r = run({"pipeline", "--runs", path("nocompute.jsonl"), "--out", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("compute analyses skipped"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "coefficients.json"));
  EXPECT_FALSE(fs::exists(dir_ / "out" / "frontier.json"));
}

TEST_F(CliTest, TradeoffMatchesClosedForm) {
  const auto r = run({"tradeoff", "--k", "1.9e4", "--alpha", "0.18", "--beta", "0.38", "--data-factor", "100"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const double want = std::pow(100.0, 0.18 / 0.38);
  EXPECT_NEAR(json::parse(r.out)["tradeoff"]["equivalent_model_factor"].get<double>(), want, 1e-9);
  EXPECT_NEAR(want, 8.9, 0.1);
}

TEST_F(CliTest, PredictFewShotPrintsCaveat) {
  const auto r = run({"predict", "--few-shot", "--n", "1e9", "--context", "1", "--coeffs", "text"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  // 1.9e4 * 1e9^0.38 with D_F = 1.
  EXPECT_LT(rel_diff(j["few_shot"]["d_effective"].get<double>(), 1.0 + 1.9e4 * std::pow(1e9, 0.38)), 1e-12);
  EXPECT_NE(r.err.find("speculative"), std::string::npos);
  EXPECT_EQ(j["coefficients"]["k"], 1.9e4);
  EXPECT_EQ(j["inputs"]["n_params"], 1e9);
}

TEST_F(CliTest, PredictLossWithSyntheticSurface) {
  const auto r = run({"predict", "--n", "1e8", "--d-finetune", "1e6", "--coeffs", "text", "--surface", "synthetic"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json p = json::parse(r.out)["prediction"];
  const double d_e = 1e6 + 1.9e4 * std::pow(1e6, 0.18) * std::pow(1e8, 0.38);
  const double want = std::pow(std::pow(7e9 / 1e8, 0.24 / 0.3) + 1e11 / d_e, 0.3);
  EXPECT_LT(rel_diff(p["loss_effective"].get<double>(), want), 1e-12);
}

TEST_F(CliTest, PredictAdviseReadsTableAndSweep) {
  ASSERT_EQ(run({"synth", "--out", path("runs.jsonl")}).code, kExitOk);
  ASSERT_EQ(run({"table", "--runs", path("runs.jsonl"), "--out", path("t.csv")}).code, kExitOk);
  // Keep only N = 1e8 rows as the subsample sweep.
  std::ifstream in(path("t.csv"));
  std::ofstream sub(path("sub.csv"));
  std::string line;
  std::getline(in, line);
  sub << line << "\n";
  while (std::getline(in, line)) {
    if (line.rfind("100000000,", 0) == 0) sub << line << "\n";
  }
  sub.close();
  std::ofstream sweep(path("sweep.csv"));
  sweep << "n_params,loss\n";
  for (double n : {1e7, 3e7, 1e8, 3e8, 1e9}) {
    sweep << n << "," << std::pow(std::pow(7e9 / n, 0.8) + 1e11 / 1e9, 0.3) << "\n";
  }
  sweep.close();
  const auto r = run({"predict", "--advise", "--subsamples", path("sub.csv"), "--sweep", path("sweep.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(json::parse(r.out)["advice"].contains("advice"));
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  const auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("usage:"), std::string::npos);
  EXPECT_NE(r.err.find("\"kind\":\"usage\""), std::string::npos);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({"pipeline", "--help"}).code, kExitOk);
  EXPECT_EQ(run({"pipeline", "--bogus-flag"}).code, kExitUsage);
}

TEST_F(CliTest, ErrorsAreStructuredAndLeaveNoArtifacts) {
  std::ofstream(path("bad.jsonl")) << "{\"run_id\": \"x\"\n";
  const auto r = run({"pipeline", "--runs", path("bad.jsonl"), "--out", path("out")});
  EXPECT_EQ(r.code, kExitFailure);
  const json e = json::parse(r.err)["error"];
  EXPECT_EQ(e["kind"], "parse_error");
  EXPECT_FALSE(fs::exists(dir_ / "out"));

  // Only fine-tuned runs: the pipeline fails after parsing, still before writing.
  ASSERT_EQ(run({"synth", "--out", path("runs.jsonl")}).code, kExitOk);
  std::ifstream in(path("runs.jsonl"));
  std::ofstream ft(path("ft.jsonl"));
  for (std::string line; std::getline(in, line);) {
    if (line.find("\"finetuned\"") != std::string::npos) ft << line << "\n";
  }
  ft.close();
  const auto r2 = run({"pipeline", "--runs", path("ft.jsonl"), "--out", path("out")});
  EXPECT_EQ(r2.code, kExitFailure);
  EXPECT_FALSE(json::parse(r2.err)["error"]["kind"].get<std::string>().empty());
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(CliTest, MissingCoefficientsIsUsageError) {
  EXPECT_EQ(run({"tradeoff", "--data-factor", "10"}).code, kExitUsage);
  EXPECT_EQ(run({"tradeoff", "--k", "1", "--data-factor", "10"}).code, kExitUsage);
  const auto r = run({"tradeoff", "--coeffs", "text", "--data-factor", "-1"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "invalid_argument");
}

TEST_F(CliTest, ConfigFileSuppliesFlagsAndCommandLineWins) {
  std::ofstream(path("cfg.json")) << json{{"seed", 3}, {"synth", {{"noise", 0.02}, {"out", path("cfg.jsonl")}}}}.dump();
  ASSERT_EQ(run({"synth", "--config", path("cfg.json")}).code, kExitOk);
  ASSERT_EQ(run({"synth", "--seed", "3", "--noise", "0.02", "--out", path("flags.jsonl")}).code, kExitOk);
  EXPECT_EQ(slurp(path("cfg.jsonl")), slurp(path("flags.jsonl")));

  ASSERT_EQ(run({"synth", "--config", path("cfg.json"), "--seed", "4", "--out", path("override.jsonl")}).code, kExitOk);
  ASSERT_EQ(run({"synth", "--seed", "4", "--noise", "0.02", "--out", path("flags4.jsonl")}).code, kExitOk);
  EXPECT_EQ(slurp(path("override.jsonl")), slurp(path("flags4.jsonl")));
}

TEST_F(CliTest, EnvironmentSeedOverridesFlag) {
  ASSERT_EQ(run({"synth", "--seed", "5", "--noise", "0.02", "--out", path("a.jsonl")}).code, kExitOk);
  ::setenv("XFERLAW_SEED", "5", 1);
  ASSERT_EQ(run({"synth", "--seed", "9", "--noise", "0.02", "--out", path("b.jsonl")}).code, kExitOk);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  ::setenv("XFERLAW_SEED", "five", 1);
  EXPECT_EQ(run({"synth", "--out", path("c.jsonl")}).code, kExitUsage);
}

TEST_F(CliTest, OutputsAreDeterministic) {
  ASSERT_EQ(run({"synth", "--seed", "2", "--noise", "0.01", "--curves", "--out", path("runs.jsonl")}).code, kExitOk);
  ASSERT_EQ(run({"pipeline", "--runs", path("runs.jsonl"), "--out", path("a")}).code, kExitOk);
  ASSERT_EQ(run({"pipeline", "--runs", path("runs.jsonl"), "--out", path("b")}).code, kExitOk);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir_ / "a");
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 20u);
}

TEST_F(CliTest, IngestRoundTripIsCanonical) {
  ASSERT_EQ(run({"synth", "--out", path("runs.jsonl")}).code, kExitOk);
  const auto r = run({"ingest", "--runs", path("runs.jsonl"), "--out", path("canon.jsonl"), "--report",
                      path("report.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(path("runs.jsonl")), slurp(path("canon.jsonl")));
  EXPECT_EQ(json::parse(r.out)["runs"], 285);
  EXPECT_TRUE(json::parse(slurp(path("report.json")))["findings"].empty());
}

TEST_F(CliTest, FitTransferFromTableAndRegimeQuery) {
  ASSERT_EQ(run({"synth", "--out", path("runs.jsonl")}).code, kExitOk);
  ASSERT_EQ(run({"regime", "--runs", path("runs.jsonl"), "--out", path("reg")}).code, kExitOk);
  const auto q = run({"regime", "--dn", path("reg/d_of_n.json"), "--n", "1e8", "--d-finetune", "1e6"});
  ASSERT_EQ(q.code, kExitOk) << q.err;
  EXPECT_EQ(json::parse(q.out)["regime"], "low");

  ASSERT_EQ(run({"table", "--runs", path("runs.jsonl"), "--out", path("t.csv")}).code, kExitOk);
  const auto f = run({"fit-transfer", "--table", path("t.csv"), "--common-beta", "0.38"});
  ASSERT_EQ(f.code, kExitOk) << f.err;
  EXPECT_EQ(json::parse(f.out)["coefficients"]["beta"], 0.38);
  EXPECT_EQ(run({"fit-transfer", "--table", path("t.csv"), "--runs", path("runs.jsonl")}).code, kExitUsage);
  EXPECT_EQ(run({"fit-transfer", "--runs", path("runs.jsonl"), "--method", "magic"}).code, kExitUsage);
}

}  // namespace
}  // namespace xferlaw::cli
