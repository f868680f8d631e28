// Copyright 2026 The lenctl Authors.
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

// Drives the lenctl binary end to end.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr, interleaved
};

RunResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + LENCTL_BIN + " " + args + " 2>&1";
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) {
    res.output.append(buf.data(), n);
  }
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lenctl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kTinyModel =
    "--d-model 16 --n-heads 2 --enc-layers 1 --dec-layers 1 --d-ff 32 "
    "--vocab-size 11 --max-positions 64";
const char* kTinyCorpus =
    "--vocab-size 11 --n 20 --source-min 10 --source-max 12 --length-mean 5 "
    "--length-sd 2 --length-min 2 --length-max 10";

}  // namespace

TEST_CASE("help output matches the golden files") {
  for (const char* sub : {"", "gen", "train", "generate", "eval", "signal", "experiment"}) {
    CAPTURE(sub);
    const std::string name = *sub ? sub : "lenctl";
    const auto res = run(std::string(sub) + " --help");
    CHECK(res.exit_code == 0);
    const std::string golden =
        slurp(fs::path(LENCTL_GOLDEN_DIR) / ("help_" + name + ".txt"));
    REQUIRE_FALSE(golden.empty());
    CHECK(res.output == golden);
  }
}

TEST_CASE("unknown flags are usage errors") {
  for (const char* sub : {"gen", "train", "generate", "eval", "signal", "experiment"}) {
    CAPTURE(sub);
    CHECK(run(std::string(sub) + " --no-such-flag").exit_code == 2);
  }
  CHECK(run("").exit_code == 2);
  CHECK(run("frobnicate").exit_code == 2);
  CHECK(run("signal --dump fourier").exit_code == 2);
}

TEST_CASE("gen is deterministic and honours the output override") {
  const fs::path dir = scratch("gen");
  const std::string base = "gen --task prefix_copy --n 100 --seed 1 --out-dir ";
  REQUIRE(run(base + (dir / "a").string()).exit_code == 0);
  REQUIRE(run(base + (dir / "b").string()).exit_code == 0);
  const std::string a = slurp(dir / "a" / "corpus.jsonl");
  CHECK_FALSE(a.empty());
  CHECK(a == slurp(dir / "b" / "corpus.jsonl"));
  CHECK_FALSE(fs::exists(dir / "a" / "tmp"));

  REQUIRE(run(base + "ignored", "LENCTL_OUT=" + (dir / "env").string()).exit_code == 0);
  CHECK(slurp(dir / "env" / "corpus.jsonl") == a);
  CHECK_FALSE(fs::exists("ignored"));
  fs::remove_all(dir);
}

TEST_CASE("signal dump") {
  const auto res = run("signal --dump pre --d-model 8 --grid 5");
  REQUIRE(res.exit_code == 0);
  std::istringstream is(res.output);
  std::string line;
  std::getline(is, line);
  CHECK(line == "ratio,dim,value");
  std::vector<std::string> rows;
  while (std::getline(is, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5 * 8);
  for (int j = 1; j <= 8; ++j) {
    CHECK(rows[j - 1] == "0," + std::to_string(j) + (j % 2 ? ",0" : ",1"));
  }
  const auto imp = run("signal --dump impatience --d-model 8 --grid 3 --x-grid 4");
  REQUIRE(imp.exit_code == 0);
  CHECK(imp.output.rfind("omega,x,cos,sin\n0,0,1,0\n", 0) == 0);
  const auto rpe = run("signal --dump rpe --d-model 4 --length 2");
  REQUIRE(rpe.exit_code == 0);
  CHECK(rpe.output.find("2,1,0\n2,2,1\n2,3,0\n2,4,1\n") != std::string::npos);
  CHECK(run("signal --dump pre --d-model 8 --M 100").exit_code == 1);
}

TEST_CASE("train, generate and eval round trip") {
  const fs::path dir = scratch("pipeline");
  REQUIRE(run(std::string("gen ") + kTinyCorpus + " --out-dir " + dir.string()).exit_code == 0);
  const std::string corpus = (dir / "corpus.jsonl").string();
  for (const char* mode : {"pre", "none"}) {
    const auto res = run(std::string("train --corpus ") + corpus + " --n-test 5 --steps 4 --batch-size 2 --mode " +
                         mode + " " + kTinyModel + " --out-dir " + (dir / mode).string());
    CAPTURE(res.output);
    REQUIRE(res.exit_code == 0);
    CHECK(fs::exists(dir / mode / "final.ckpt"));
    CHECK(slurp(dir / mode / "loss.csv").find("step,loss,seconds\n1,") != std::string::npos);
  }
  const std::string ckpt = (dir / "pre" / "final.ckpt").string();
  const auto gen = run("generate --checkpoint " + ckpt + " --source 4,5,6,7,8 --length 3");
  CHECK(gen.exit_code == 0);
  CHECK(gen.output.find("target=3") != std::string::npos);
  CHECK(gen.output == run("generate --checkpoint " + ckpt + " --source 4,5,6,7,8 --length 3").output);

  const auto ev = run("eval --checkpoint " + ckpt + " --compare " + (dir / "none" / "final.ckpt").string() +
                      " --name pre --compare-name none --corpus " + corpus +
                      " --split test --n-test 5 --out-dir " + (dir / "eval").string());
  CAPTURE(ev.output);
  REQUIRE(ev.exit_code == 0);
  for (const char* f : {"pre/mae_summary.csv", "pre/buckets.csv", "none/rouge.csv",
                        "none/length_density.csv", "pre/records.jsonl", "ttest.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "eval" / f));
  }
  CHECK(slurp(dir / "eval" / "ttest.csv").rfind("a,b,n,mean_diff,t,p,zero_variance\npre,none,5,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("failures carry a stage tag and a nonzero exit") {
  const auto res = run("train --corpus /nonexistent/corpus.jsonl");
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("[train]") != std::string::npos);
  const auto ev = run("eval --checkpoint /nonexistent.ckpt --corpus /nonexistent.jsonl");
  CHECK(ev.exit_code == 1);
  CHECK(ev.output.find("[eval]") != std::string::npos);
}

TEST_CASE("experiment emits the comparison table") {
  const fs::path dir = scratch("experiment");
  const std::string sets =
      " --set corpus.vocab_size=11 --set corpus.n_examples=24 --set corpus.source_min=10"
      " --set corpus.source_max=12 --set corpus.length.mean=5 --set corpus.length.sd=2"
      " --set corpus.length.min=2 --set corpus.length.max=10 --set split.test=6"
      " --set model.d_model=16 --set model.n_heads=2 --set model.n_enc_layers=1"
      " --set model.n_dec_layers=1 --set model.d_ff=32 --set model.max_positions=64"
      " --set train.steps=2 --set train.batch_size=2 --set eval.ood_min=12"
      " --set eval.ood_max=20 --set ood.examples=4 --set ood.source_min=20"
      " --set ood.source_max=22";
  const auto res = run("experiment --quiet --seed 5" + sets + " --out-dir unused",
                       "LENCTL_OUT=" + (dir / "out").string());
  CAPTURE(res.output);
  REQUIRE(res.exit_code == 0);
  const std::string cmp = slurp(dir / "out" / "comparison.csv");
  std::istringstream is(cmp);
  std::string line;
  std::getline(is, line);
  CHECK(line == "mode,policy,mae,sd,outlier_rate,r1,r2,rL");
  std::vector<std::string> rows;
  while (std::getline(is, line)) rows.push_back(line.substr(0, line.find(',', line.find(',') + 1)));
  CHECK(rows == std::vector<std::string>{"pre,reference", "none,reference", "rpe,reference",
                                         "pre,random_ood", "none,random_ood", "rpe,random_ood"});
  CHECK_FALSE(fs::exists(dir / "out" / "tmp"));

  const auto bad = run("experiment --quiet" + sets + " --set eval.ood_min=25 --set eval.ood_max=30",
                       "LENCTL_OUT=" + (dir / "bad").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("[eval:pre:random_ood]") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "bad" / "comparison.csv"));
  fs::remove_all(dir);
}
