// Copyright 2026 The latent-steer Authors. All Rights Reserved.
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

#include "latent_steer/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "latent_steer/checkpoint.hpp"
#include "latent_steer/io.hpp"

namespace latent_steer {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "latent-steer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("latent_steer_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Short toy run; `iterations` keeps the test quick.
  std::string short_config(int iterations, int checkpoint_interval = 0) {
    const std::string p = path("config.json");
    write(p, Json{{"train", {{"iterations", iterations}, {"checkpoint_interval", checkpoint_interval}}}}.dump());
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, TrainWritesFinalCheckpointAndLog) {
  const CliRun r = run({"train", short_config(50), "--checkpoint-dir", path("ck"), "--log", path("log.csv"), "--quiet"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(path("ck/final.json")));
  const Checkpoint ck = load_checkpoint(path("ck/final.json"));
  EXPECT_EQ(ck.iteration, 50);
  std::istringstream log(slurp(path("log.csv")));
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "iteration,reg,disc,content,total");
  int rows = 0;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 50);
}

TEST_F(CliTest, NegativeLearningRateIsExit2NamingTheField) {
  write(path("bad.json"), R"({"train": {"learning_rate": -0.01}})");
  const CliRun r = run({"train", path("bad.json"), "--checkpoint-dir", path("ck"), "--quiet"});
  EXPECT_EQ(r.code, kExitBadInput);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("ck/final.json")));
}

TEST_F(CliTest, UnknownConfigKeyIsExit2) {
  write(path("bad.json"), R"({"train": {"lr": 0.01}})");
  const CliRun r = run({"train", path("bad.json"), "--checkpoint-dir", path("ck"), "--quiet"});
  EXPECT_EQ(r.code, kExitBadInput);
  EXPECT_NE(r.err.find("lr"), std::string::npos) << r.err;
}

TEST_F(CliTest, SameSeedGivesByteIdenticalLog) {
  const std::string cfg = short_config(200);
  ASSERT_EQ(run({"train", cfg, "--checkpoint-dir", path("a"), "--log", path("a.csv"), "--quiet"}).code, kExitOk);
  ASSERT_EQ(run({"train", cfg, "--checkpoint-dir", path("b"), "--log", path("b.csv"), "--quiet"}).code, kExitOk);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(slurp(path("a/final.json")), slurp(path("b/final.json")));
}

TEST_F(CliTest, SeedEnvironmentVariableOverridesConfig) {
  const std::string cfg = short_config(20);
  ASSERT_EQ(run({"train", cfg, "--checkpoint-dir", path("a"), "--log", path("a.csv"), "--quiet"}).code, kExitOk);
  setenv("LATENT_STEER_SEED", "5", 1);
  const CliRun r = run({"train", cfg, "--checkpoint-dir", path("b"), "--log", path("b.csv"), "--quiet"});
  unsetenv("LATENT_STEER_SEED");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(load_checkpoint(path("b/final.json")).config.seed(), 5u);
}

TEST_F(CliTest, ResumeContinuesTheIdenticalLog) {
  const std::string cfg = short_config(120, 50);
  ASSERT_EQ(run({"train", cfg, "--checkpoint-dir", path("full"), "--log", path("full.csv"), "--quiet"}).code, kExitOk);
  ASSERT_TRUE(fs::exists(path("full/ckpt_00000050.json")));
  // Half-finished log: rows past the checkpoint are discarded on resume.
  ASSERT_EQ(run({"train", cfg, "--checkpoint-dir", path("part"), "--log", path("part.csv"), "--quiet"}).code, kExitOk);
  const CliRun r = run({"train", cfg, "--resume", path("full/ckpt_00000050.json"), "--checkpoint-dir", path("part"),
                        "--log", path("part.csv"), "--quiet"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(path("full.csv")), slurp(path("part.csv")));
  EXPECT_EQ(slurp(path("full/final.json")), slurp(path("part/final.json")));
}

TEST_F(CliTest, EditWithZeroDeltaWritesIdenticalPngs) {
  ASSERT_EQ(run({"train", short_config(30), "--checkpoint-dir", path("ck"), "--quiet"}).code, kExitOk);
  const CliRun r = run({"edit", "--checkpoint", path("ck/final.json"), "--z-seed", "3", "--delta", "background=0",
                        "--out", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(path("out/original.png")), slurp(path("out/edited.png")));
  EXPECT_FALSE(slurp(path("out/original.png")).empty());
}

TEST_F(CliTest, EditWritesRequestedAndAppliedDelta) {
  ASSERT_EQ(run({"train", "--oracle", "--checkpoint-dir", path("ck"), "--quiet"}).code, kExitOk);
  const CliRun r = run({"edit", "--checkpoint", path("ck/final.json"), "--z-seed", "3", "--delta",
                        "background=+0.2,size=-0.1", "--out", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(slurp(path("out/original.png")), slurp(path("out/edited.png")));
  const Json j = Json::parse(slurp(path("out/edit.json")));
  EXPECT_TRUE(j.contains("applied"));
  EXPECT_EQ(run({"edit", "--checkpoint", path("ck/final.json"), "--z-seed", "3", "--delta", "hue=0.1", "--out",
                 path("out")})
                .code,
            kExitBadInput);
}

TEST_F(CliTest, InvertWithOneStepHasTraceOfLengthOne) {
  const CliRun r = run({"invert", "--z-seed", "4", "--steps", "1", "--out", path("inv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(slurp(path("inv/inversion.json")));
  EXPECT_EQ(j["inversion"]["trace"].size(), 1u);
  EXPECT_EQ(j["inversion"]["steps"], 1);
  EXPECT_TRUE(fs::exists(path("inv/reconstruction.png")));
}

TEST_F(CliTest, InvertFromPngFile) {
  ASSERT_EQ(run({"invert", "--z-seed", "6", "--steps", "1", "--out", path("a")}).code, kExitOk);
  const CliRun r = run({"invert", "--image", path("a/target.png"), "--steps", "500", "--out", path("b")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(slurp(path("b/inversion.json")));
  EXPECT_LE(j["inversion"]["mse"].get<double>(), 1e-3);
}

TEST_F(CliTest, MissingCheckpointIsExit2) {
  for (const char* cmd : {"eval", "edit", "invert"}) {
    std::vector<std::string> args{cmd, "--checkpoint", path("missing.json")};
    if (std::string(cmd) != "eval") args.insert(args.end(), {"--z-seed", "1"});
    if (std::string(cmd) == "edit") args.insert(args.end(), {"--delta", "size=0.1"});
    const CliRun r = run(args);
    EXPECT_EQ(r.code, kExitBadInput) << cmd << ": " << r.err;
  }
}

TEST_F(CliTest, DimensionMismatchIsExit2) {
  ASSERT_EQ(run({"train", short_config(5), "--checkpoint-dir", path("ck"), "--quiet"}).code, kExitOk);
  Json j = Json::parse(slurp(path("ck/final.json")));
  j["attribute_names"] = {"a", "b"};
  write(path("bad.json"), j.dump());
  const CliRun r = run({"eval", "--checkpoint", path("bad.json"), "--out", path("rep")});
  EXPECT_EQ(r.code, kExitBadInput) << r.err;
}

TEST_F(CliTest, OracleEvalKeepsLeakageWithinTwoHundredths) {
  ASSERT_EQ(run({"train", "--oracle", "--checkpoint-dir", path("ck"), "--quiet"}).code, kExitOk);
  const CliRun r = run({"eval", "--checkpoint", path("ck/final.json"), "--out", path("rep")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json s = Json::parse(slurp(path("rep/summary.json")));
  EXPECT_LE(s["max_leakage"].get<double>(), 0.02);
  EXPECT_TRUE(fs::exists(path("rep/leakage.csv")));
  EXPECT_TRUE(fs::exists(path("rep/leakage.txt")));
}

TEST_F(CliTest, GradcheckPassesOnTheToyWorld) {
  const CliRun r = run({"gradcheck", "--points", "5"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsAreExit2AndHelpIsExit0) {
  EXPECT_EQ(run({}).code, kExitBadInput);
  EXPECT_EQ(run({"frobnicate"}).code, kExitBadInput);
  EXPECT_EQ(run({"edit", "--z-seed", "1"}).code, kExitBadInput);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

}  // namespace
}  // namespace latent_steer
