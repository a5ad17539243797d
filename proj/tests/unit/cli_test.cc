// Copyright 2026 The diffmpc Authors
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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "diffmpc/cli.hpp"

namespace diffmpc {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

class CliDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("diffmpc_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig short_train(const fs::path& out) const {
    RunConfig c = parse_run_config(R"({
      "example": "lti_qlearning",
      "seed": 4,
      "train": {"episodes": 2, "steps_per_episode": 10}
    })");
    c.output_dir = out.string();
    return c;
  }

  fs::path dir_;
};

TEST(CliConfig, ShippedConfigsParse) {
  const fs::path root(DIFFMPC_SOURCE_DIR);
  const RunConfig lti = load_run_config((root / "configs/lti_qlearning.json").string());
  EXPECT_EQ(lti.example, "lti_qlearning");
  EXPECT_EQ(lti.train.episodes, 30);
  EXPECT_EQ(lti.mpc.N, 40);
  const RunConfig cm = load_run_config((root / "configs/chain_mass_bench.json").string());
  EXPECT_EQ(cm.example, "chain_mass_bench");
  EXPECT_EQ(cm.bench.mass_counts, (std::vector<int>{3, 4, 5, 6}));
  EXPECT_EQ(cm.bench.solver.kkt_tol, 1e-12);
}

TEST(CliConfig, RejectsMalformedInput) {
  EXPECT_THROW(parse_run_config("{"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"train": {"episodez": 1}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"train": {"episodes": "x"}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"mpc": {"lb": [0]}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"example": "other"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"solver": {"kkt_tol": -1}})"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST(CliConfig, EmptyObjectGivesDefaults) {
  const RunConfig c = parse_run_config("{}");
  EXPECT_EQ(c.example, "lti_qlearning");
  EXPECT_EQ(c.output_dir, "out");
}

TEST_F(CliDir, TrainWritesFrozenHeaders) {
  const RunConfig c = short_train(dir_);
  ASSERT_EQ(cmd_train(c), 0);
  for (int e = 0; e <= 2; ++e) {
    const auto l = lines(slurp(dir_ / ("episode_" + std::to_string(e) + ".csv")));
    ASSERT_EQ(l.size(), 12u);
    EXPECT_EQ(l[0], kEpisodeCsvHeader);
  }
  const auto d = lines(slurp(dir_ / "data.csv"));
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d[0], "episode,B_0,B_1,b_0,b_1,f_0,f_1,f_2,V_0,cost");
  EXPECT_EQ(d[1].substr(0, 2), "0,");
  EXPECT_TRUE(fs::exists(dir_ / "theta.json"));
}

TEST_F(CliDir, ZeroEpisodesWriteOnlyTheHeader) {
  RunConfig c = short_train(dir_);
  c.train.episodes = 0;
  ASSERT_EQ(cmd_train(c), 0);
  EXPECT_EQ(slurp(dir_ / "data.csv"), std::string(kDataCsvHeader) + "\n");
  EXPECT_FALSE(fs::exists(dir_ / "episode_0.csv"));
}

TEST_F(CliDir, RerunIsByteIdentical) {
  ASSERT_EQ(cmd_train(short_train(dir_ / "a")), 0);
  ASSERT_EQ(cmd_train(short_train(dir_ / "b")), 0);
  for (const char* f : {"data.csv", "episode_0.csv", "episode_1.csv",
                        "episode_2.csv", "theta.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
}

TEST_F(CliDir, UnwritableOutputFails) {
  std::ofstream(dir_ / "file") << "x";
  const fs::path cfg = dir_ / "cfg.json";
  std::ofstream(cfg) << R"({"train": {"episodes": 1, "steps_per_episode": 2}})";
  const std::string out = (dir_ / "file" / "sub").string();
  std::vector<std::string> args = {"diffmpc", "train", "--config", cfg.string(),
                                   "--out", out};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  EXPECT_NE(run_cli(static_cast<int>(argv.size()), argv.data()), 0);
}

TEST_F(CliDir, BenchWritesOneRowPerSize) {
  RunConfig c = parse_run_config(R"({
    "example": "chain_mass_bench",
    "bench": {"mass_counts": [3], "repetitions": 1, "warmup": 0}
  })");
  c.output_dir = dir_.string();
  EXPECT_EQ(cmd_bench(c), 0);
  const auto t = lines(slurp(dir_ / "timings.csv"));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], "n,finitedifferences,dense,structured");
  EXPECT_EQ(t[1].substr(0, 2), "3,");
  EXPECT_EQ(lines(slurp(dir_ / "timings_detail.csv")).size(), 2u);
}

TEST(CliCheck, PassesAndDetectsInjectedSignError) {
  const RunConfig c = parse_run_config("{}");
  std::ostringstream good, bad;
  EXPECT_EQ(cmd_check(c, CheckOptions{}, good), 0) << good.str();
  EXPECT_EQ(cmd_check(c, CheckOptions{true}, bad), 1) << bad.str();
  EXPECT_NE(bad.str().find("FAIL FD-gradient"), std::string::npos);
  EXPECT_NE(bad.str().find("FAIL IFT-residual"), std::string::npos);
}

TEST(CliArgs, MissingOrUnknownSubcommandIsAnError) {
  std::vector<std::string> none = {"diffmpc"};
  std::vector<std::string> unknown = {"diffmpc", "frobnicate"};
  std::vector<std::string> bad_cfg = {"diffmpc", "train", "--config",
                                      "/nonexistent.json"};
  for (auto* args : {&none, &unknown, &bad_cfg}) {
    std::vector<char*> argv;
    for (auto& a : *args) argv.push_back(a.data());
    EXPECT_NE(run_cli(static_cast<int>(argv.size()), argv.data()), 0);
  }
}

}  // namespace
}  // namespace diffmpc
