/* Copyright 2026 The CSPM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <unistd.h>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cspm/checkpoint.hpp"
#include "cspm/container.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  static fs::path dir() {
    static const fs::path d = fs::temp_directory_path() / ("cspm_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }

  static int run(const std::string& args, std::string* output = nullptr) {
    const auto log = dir() / "stdout.txt";
    const std::string cmd = std::string(CSPM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
      std::ifstream in(log);
      std::stringstream ss;
      ss << in.rdbuf();
      *output = ss.str();
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string p(const std::string& name) { return (dir() / name).string(); }

  static void TearDownTestSuite() { fs::remove_all(dir()); }
};

TEST_F(Cli, GenerateFullGridCount) {
  ASSERT_EQ(run("generate --classes all --snr -20:2:20 --per-cell 3 --seed 42 --out " + p("grid.cspm")), 0);
  const auto ds = cspm::read_container(p("grid.cspm"));
  EXPECT_EQ(ds.size(), 11u * 21u * 3u);
  EXPECT_TRUE(fs::exists(p("grid.cspm") + ".manifest.json"));
}

TEST_F(Cli, GenerateIsByteIdenticalAndNeedsOutput) {
  const std::string args = "generate --classes bpsk,qpsk --snr 0:10:10 --per-cell 5 --length 32 --seed 7 --out ";
  ASSERT_EQ(run(args + p("a.cspm")), 0);
  ASSERT_EQ(run(args + p("b.cspm")), 0);
  EXPECT_EQ(cspm::detail::read_file(p("a.cspm")), cspm::detail::read_file(p("b.cspm")));
  EXPECT_EQ(run("generate --classes bpsk"), 2);
  EXPECT_EQ(run("generate --classes nosuch --out " + p("x.cspm")), 2);
  EXPECT_EQ(run("generate --snr 1:0:2 --out " + p("x.cspm")), 2);
  EXPECT_EQ(run("nosuchcommand"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST_F(Cli, TrainEvalRoundTrip) {
  ASSERT_EQ(run("generate --classes bpsk,gfsk --snr -10:10:10 --per-cell 10 --length 32 --out " + p("tr.cspm")), 0);
  const std::string model = " --subbands 2 --kernel 5 --mix 4 --hidden 4 --attention 4 --mlp-hidden 4";
  std::string out;
  ASSERT_EQ(run("train --data " + p("tr.cspm") + " --out " + p("run") + " --epochs 2 --batch 8" + model, &out), 0)
      << out;
  for (const char* f : {"best.ckpt", "last.ckpt", "history.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir() / "run" / f)) << f;
  }
  std::ifstream mf(dir() / "run" / "manifest.json");
  const auto manifest = nlohmann::json::parse(mf);
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_EQ(manifest["config"]["train"]["epochs"], 2);
  EXPECT_EQ(manifest["config"]["train"]["learning_rate"], 1e-3);
  EXPECT_EQ(manifest["config"]["model"]["hidden"], 4);

  ASSERT_EQ(run("eval --checkpoint " + p("run/best.ckpt") + " --data " + p("tr.cspm") + " --out " + p("rep") +
                    " --format csv",
                &out),
            0)
      << out;
  EXPECT_NE(out.find("OA"), std::string::npos);
  EXPECT_NE(out.find("low"), std::string::npos);
  EXPECT_NE(out.find("mid"), std::string::npos);
  EXPECT_NE(out.find("high"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir() / "rep" / "per_snr.csv"));
  EXPECT_FALSE(fs::exists(dir() / "rep" / "report.json"));

  // Class mismatch: a 3-class container against a 2-class checkpoint.
  ASSERT_EQ(run("generate --classes bpsk,qpsk,gfsk --snr 0 --per-cell 5 --length 32 --out " + p("three.cspm")), 0);
  EXPECT_EQ(run("eval --checkpoint " + p("run/best.ckpt") + " --data " + p("three.cspm") + " --out " + p("rep2")), 3);
  EXPECT_EQ(run("eval --checkpoint " + p("run/best.ckpt") + " --data " + p("tr.cspm")), 2);

  ASSERT_EQ(run("inspect-bank --checkpoint " + p("run/best.ckpt") + " --out " + p("bank")), 0);
  EXPECT_TRUE(fs::exists(dir() / "bank" / "taps.csv"));
  ASSERT_EQ(run("dump-features --checkpoint " + p("run/best.ckpt") + " --data " + p("tr.cspm") + " --out " +
                p("feat.csv")),
            0);
  std::ifstream feat(p("feat.csv"));
  int rows = 0;
  for (std::string line; std::getline(feat, line);) ++rows;
  EXPECT_EQ(rows, 30);  // 3 * S(2) * (1 + 4 lags)
}

TEST_F(Cli, BudgetRefusalAndVariant) {
  ASSERT_EQ(run("generate --classes bpsk,gfsk --snr 10 --per-cell 5 --out " + p("b.cspm")), 0);
  std::string out;
  EXPECT_EQ(run("train --data " + p("b.cspm") + " --out " + p("big") + " --hidden 256 --budget 300000", &out), 3);
  EXPECT_NE(out.find("budget"), std::string::npos);
  EXPECT_EQ(run("train --data " + p("b.cspm") + " --out " + p("fm") +
                " --variant fixed_morlet --epochs 1 --batch 4 --subbands 2 --kernel 5 --mix 4 --hidden 4 "
                "--attention 4 --mlp-hidden 4"),
            0);
  EXPECT_EQ(cspm::read_checkpoint_config(p("fm/best.ckpt")).variant, cspm::Variant::fixed_morlet);
  EXPECT_EQ(run("train --data " + p("b.cspm") + " --out " + p("bad") + " --variant nosuch"), 3);
}

TEST_F(Cli, AblateEmitsOneRowPerVariant) {
  ASSERT_EQ(run("generate --classes bpsk,gfsk --snr 0:10:10 --per-cell 5 --length 32 --out " + p("ab.cspm")), 0);
  std::string out;
  ASSERT_EQ(run("ablate --data " + p("ab.cspm") + " --out " + p("abl") +
                    " --epochs 1 --batch 4 --subbands 2 --kernel 5 --mix 4 --hidden 4 --attention 4 --mlp-hidden 4",
                &out),
            0)
      << out;
  std::ifstream csv(dir() / "abl" / "ablation.csv");
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[1].substr(0, 5), "full,");
  EXPECT_EQ(lines[2].substr(0, 18), "phase_motion_only,");
  EXPECT_EQ(lines[3].substr(0, 13), "fixed_morlet,");
  EXPECT_EQ(lines[4].substr(0, 17), "learnable_morlet,");
}

TEST_F(Cli, GradcheckPassesAndInjectedFaultFails) {
  std::string out;
  EXPECT_EQ(run("gradcheck", &out), 0) << out;
  EXPECT_NE(out.find("PASS"), std::string::npos);
  EXPECT_EQ(run("gradcheck --precision f64 --tol 1e-6"), 0);
  EXPECT_EQ(run("gradcheck --precision f64 --inject-fault", &out), 4);
  EXPECT_NE(out.find("FAIL"), std::string::npos);
}

}  // namespace
