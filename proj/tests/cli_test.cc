// Copyright 2026 The groundrl Authors.
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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "gtest/gtest.h"

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd =
      std::string(GROUNDRL_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("groundrl_cli_" + name);
  fs::remove_all(p);
  return p;
}

TEST(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("gen-data"), 2);  // --out is required
}

TEST(CliTest, ConfigErrors) {
  const fs::path d = scratch("cfg");
  EXPECT_EQ(run("gen-data --out " + d.string() + " --set rl.nope=1"), 2);
  EXPECT_EQ(run("gen-data --out " + d.string() + " --ablate wo-all"), 2);
  fs::create_directories(d);
  std::ofstream(d / "bad.json") << "{\"seed\": \"one\"}";
  EXPECT_EQ(run("gen-data --out " + d.string() + " --config " +
                (d / "bad.json").string()),
            2);
}

TEST(CliTest, MissingInputsAndGates) {
  const fs::path d = scratch("gate");
  EXPECT_EQ(run("train-mcl --out " + d.string()), 4);
  EXPECT_EQ(run("gen-data --out " + d.string() + " --cases 40"), 0);
  EXPECT_EQ(run("train-svr --out " + d.string()), 4);
  EXPECT_EQ(run("evaluate --out " + d.string()), 4);
  EXPECT_EQ(run("gen-data --out " + d.string() + " --config /nonexistent.json"),
            4);
}

TEST(CliTest, SmallRunSucceeds) {
  const fs::path d = scratch("run");
  EXPECT_EQ(run("run --out " + d.string() +
                " --cases 40 --set rl.epochs=1 --set mcl.epochs=1"),
            0);
  EXPECT_TRUE(fs::exists(d / "eval" / "report.json"));
  EXPECT_EQ(run("evaluate --out " + d.string() + " --compare " +
                (d / "missing").string()),
            4);

  std::ifstream cases(d / "data" / "cases.jsonl");
  std::string first;
  std::getline(cases, first);
  const auto at = first.find("\"seed\":");
  ASSERT_NE(at, std::string::npos);
  const std::string seed = std::to_string(std::stoull(first.substr(at + 7)));
  EXPECT_EQ(run("infer --out " + d.string() + " --case " + seed), 0);
  EXPECT_EQ(run("infer --out " + d.string() + " --case " + seed +
                " --ground pneumothorax"),
            0);
  EXPECT_EQ(run("infer --out " + d.string() + " --case " + seed +
                " --ground effusionz"),
            2);
  EXPECT_EQ(run("infer --out " + d.string()), 2);
}

}  // namespace
