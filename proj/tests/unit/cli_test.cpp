// Copyright 2026 The ecgrad Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "cli.hpp"
#include "settings.hpp"

#include "ecgrad/data_io.hpp"
#include "ecgrad/problems.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace ecgrad::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "ecgrad");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ecgrad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out(const std::string& sub = "") const { return (dir_ / sub).string(); }
  fs::path dir_;
};

TEST_F(CliTest, RunPresetWritesTraceAndResolvedConfig) {
  const auto r = invoke({"run", "--preset", "scalar-example", "--out", out("a")});
  ASSERT_EQ(r.code, kOk) << r.err;
  ASSERT_TRUE(fs::exists(dir_ / "a" / "trace.csv"));
  ASSERT_TRUE(fs::exists(dir_ / "a" / "config.resolved"));
  const auto rows = read_csv(dir_ / "a" / "trace.csv");
  EXPECT_EQ(rows.front().size(), 9u);
  EXPECT_EQ(rows.size(), 102u);
  // Resolved config reproduces the run exactly.
  const auto again = invoke({"run", "--config", (dir_ / "a" / "config.resolved").string(), "--out", out("b")});
  ASSERT_EQ(again.code, kOk) << again.err;
  EXPECT_EQ(slurp(dir_ / "a" / "trace.csv"), slurp(dir_ / "b" / "trace.csv"));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "cfg.ini") << "[problem]\nkind = scalar\nmu = 2\n[simulation]\niterations = 7\n";
  const auto r = invoke({"run", "--config", (dir_ / "cfg.ini").string(), "--iters", "3", "--out", out("o")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(read_csv(dir_ / "o" / "trace.csv").size(), 5u);
  Settings s;
  s.merge_file((dir_ / "o" / "config.resolved").string());
  EXPECT_EQ(s.integer("simulation.iterations"), 3);
  EXPECT_EQ(s.number("problem.mu"), 2.0);
}

TEST_F(CliTest, BadCompressorIsConfigError) {
  const auto r = invoke({"run", "--preset", "scalar-example", "--compressor", "rounding:-1", "--out", out()});
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("rounding"), std::string::npos) << r.err;
}

TEST_F(CliTest, StepRuleViolationOnThm4Preset) {
  const auto r = invoke({"run", "--preset", "thm4", "--gamma-rule", "10/L", "--out", out()});
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("step-size rule violated"), std::string::npos) << r.err;
}

TEST_F(CliTest, DivergedRunExitsThree) {
  const auto r = invoke({"run", "--preset", "scalar-example", "--gamma-rule", "3", "--iters", "200", "--out", out()});
  EXPECT_EQ(r.code, kDiverged) << r.err;
}

TEST_F(CliTest, UnknownSettingAndPreset) {
  EXPECT_EQ(invoke({"run", "--set", "simulation.nope=1", "--out", out()}).code, kConfigError);
  EXPECT_EQ(invoke({"run", "--preset", "nope", "--out", out()}).code, kConfigError);
}

TEST_F(CliTest, BoundsThm1Values) {
  const auto r = invoke({"bounds", "--preset", "quadratic-floor", "--set", "problem.kappa=10", "--scheme", "direct",
                         "--gamma-rule", "1/L", "--iters", "20", "--set", "simulation.metrics_every=1",
                         "--theorem", "thm1", "--out", out()});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto rows = read_csv(dir_ / "bounds_thm1.csv");
  ASSERT_EQ(rows.front(), (std::vector<std::string>{"k", "bound", "floor"}));
  ASSERT_EQ(rows.size(), 22u);
  // Independent reconstruction of the preset problem: d = 10, seed 4, x0 = 0.
  const auto q = synth_quadratic<double>({10, 10.0, 4});
  const QuadraticProblem<double> prob(q.H, q.b);
  const double d0 = prob.x_star().norm(), floor = 0.1 / prob.mu();
  EXPECT_NEAR(std::stod(rows[1][1]), d0 + floor, 1e-12 * (d0 + floor));
  EXPECT_NEAR(std::stod(rows[2][1]), 0.9 * d0 + floor, 1e-12 * (d0 + floor));
  EXPECT_NEAR(std::stod(rows[1][2]), floor, 1e-12 * floor);
}

TEST_F(CliTest, BoundsZeroEpsHasZeroFloor) {
  const auto r = invoke({"bounds", "--preset", "quadratic-floor", "--gamma-rule", "1/L", "--iters", "50",
                         "--set", "theory.eps=0", "--theorem", "thm1", "--theorem", "thm5", "--out", out()});
  ASSERT_EQ(r.code, kOk) << r.err;
  for (const char* f : {"bounds_thm1.csv", "bounds_thm5.csv"}) {
    const auto rows = read_csv(dir_ / f);
    for (std::size_t j = 1; j < rows.size(); ++j) EXPECT_EQ(std::stod(rows[j][2]), 0.0);
  }
}

TEST_F(CliTest, BoundsThm7bNeedsBeta) {
  const auto base = std::vector<std::string>{"bounds", "--preset", "thm4", "--scheme", "ec:hessian",
                                             "--theorem", "thm7b", "--set", "theory.sigma_sq=0.1",
                                             "--set", "theory.sigma_h_sq=0.1", "--out", out()};
  const auto r = invoke(base);
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("beta"), std::string::npos) << r.err;
  auto with_beta = base;
  with_beta.insert(with_beta.end(), {"--beta", "0.5", "--gamma-rule", "thm7b:0.5"});
  const auto ok = invoke(with_beta);
  EXPECT_EQ(ok.code, kOk) << ok.err;
}

TEST_F(CliTest, CompareWritesTables) {
  const auto r = invoke({"compare", "--preset", "quadratic-floor", "--iters", "200", "--schemes",
                         "direct,ec:hessian", "--out", out()});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "compare.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "trace_0.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "trace_1.csv"));
}

TEST_F(CliTest, VerifySuiteAndReport) {
  const auto r = invoke({"verify", "libsvm", "--report", out("report.jsonl")});
  ASSERT_EQ(r.code, kOk) << r.out << r.err;
  std::istringstream in(slurp(dir_ / "report.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("suite"), "libsvm");
    EXPECT_TRUE(j.at("pass").get<bool>());
    ++n;
  }
  EXPECT_GT(n, 0);
}

TEST_F(CliTest, VerifyUnknownSuite) { EXPECT_EQ(invoke({"verify", "nope"}).code, kConfigError); }

TEST_F(CliTest, VerifyInjectedFaultFails) {
  EXPECT_EQ(invoke({"verify", "quadratic-identity"}).code, kOk);
  EXPECT_EQ(invoke({"verify", "quadratic-identity", "--inject-fault"}).code, kFailed);
}

TEST(Settings, ParsingAndErrors) {
  Settings s;
  s.merge_text("# c\n[simulation]\niterations = 12 ; trailing\n\n[problem]\nkind=scalar\n", "t");
  EXPECT_EQ(s.integer("simulation.iterations"), 12);
  EXPECT_EQ(s.get("problem.kind"), "scalar");
  EXPECT_THROW(s.merge_text("[simulation\n", "t"), ConfigError);
  EXPECT_THROW(s.merge_text("[simulation]\nnonsense\n", "t"), ConfigError);
  EXPECT_THROW(s.merge_text("[simulation]\nfoo = 1\n", "t"), ConfigError);
  EXPECT_THROW(s.set("simulation.foo", "1"), ConfigError);
  s.set("simulation.schemes", "direct, ec:hessian,ec:diag");
  EXPECT_EQ(s.list("simulation.schemes"), (std::vector<std::string>{"direct", "ec:hessian", "ec:diag"}));
  s.set("simulation.iterations", "abc");
  EXPECT_THROW(s.integer("simulation.iterations"), ConfigError);
}

TEST(Settings, ResolvedRoundTrip) {
  for (const auto& [name, text] : presets()) {
    Settings a;
    a.merge_text(text, name);
    Settings b;
    b.merge_text(a.resolved(), "resolved");
    EXPECT_EQ(a.resolved(), b.resolved()) << name;
  }
}

}  // namespace
}  // namespace ecgrad::cli
