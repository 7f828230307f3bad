// Copyright 2026 The hflic Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hflic/archive.hpp"
#include "hflic/eval.hpp"
#include "hflic/image_io.hpp"
#include "hflic/rng.hpp"
#include "hflic/synthetic.hpp"

namespace hflic {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(HFLIC_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int count_lines(const std::string& s) {
  int n = 0;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "hflic_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_ / "data");
    Rng rng(21);
    write_png(root_ / "data" / "a.png", synthetic_image(48, 80, rng));
    write_png(root_ / "data" / "b.png", synthetic_image(64, 64, rng));
    const CliResult r = run("train --data " + (root_ / "data").string() + " --out " + (root_ / "model").string() +
                      " --seed 5");
    ASSERT_EQ(r.code, 0) << r.out;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string path(const std::string& rel) { return (root_ / rel).string(); }
  static std::string ckpt() { return path("model/final.hfck"); }

  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, TrainDeskPresetWritesCheckpoint) {
  EXPECT_TRUE(fs::exists(ckpt()));
  const std::string log = slurp(root_ / "model" / "train_log.jsonl");
  EXPECT_EQ(count_lines(log), 10);
  const auto cfg = nlohmann::json::parse(slurp(root_ / "model" / "config.json"));
  EXPECT_EQ(cfg["train"]["seed"].get<int>(), 5);
}

TEST_F(CliTest, CompressDecompressRoundTrip) {
  CliResult r = run("compress " + path("data/a.png") + " --checkpoint " + ckpt() + " --out " + path("c1"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(root_ / "c1" / "a.hflc"));
  EXPECT_TRUE(fs::exists(root_ / "c1" / "compress_log.csv"));
  r = run("decompress " + path("c1/a.hflc") + " --checkpoint " + ckpt() + " --out " + path("d1"));
  ASSERT_EQ(r.code, 0) << r.out;
  const Tensor img = read_png(root_ / "d1" / "a.png");
  EXPECT_EQ(img.shape(), (Shape{1, 3, 48, 80}));
}

TEST_F(CliTest, CompressDirectory) {
  const CliResult r = run("compress " + path("data") + " --checkpoint " + ckpt() + " --out " + path("c2") +
                    " --workers 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(root_ / "c2" / "a.hflc"));
  EXPECT_TRUE(fs::exists(root_ / "c2" / "b.hflc"));
  EXPECT_EQ(count_lines(slurp(root_ / "c2" / "compress_log.csv")), 3);
}

TEST_F(CliTest, MissingCheckpoint) {
  const CliResult r = run("compress " + path("data") + " --checkpoint " + path("nope.hfck") + " --out " + path("c3"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("checkpoint"), std::string::npos);
}

TEST_F(CliTest, WrongModel) {
  ASSERT_EQ(run("compress " + path("data/b.png") + " --checkpoint " + ckpt() + " --out " + path("c4")).code, 0);
  ASSERT_EQ(run("train --data " + path("data") + " --out " + path("other") + " --seed 6 --steps 1").code, 0);
  const CliResult r = run("decompress " + path("c4/b.hflc") + " --checkpoint " + path("other/final.hfck") + " --out " +
                    path("d4"));
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST_F(CliTest, CorruptPayloadReportsPartialGroups) {
  ASSERT_EQ(run("compress " + path("data/b.png") + " --checkpoint " + ckpt() + " --out " + path("c5")).code, 0);
  auto bytes = read_file(root_ / "c5" / "b.hflc");
  bytes[bytes.size() - 3] ^= 0x5A;
  std::ofstream(root_ / "c5" / "b.hflc", std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const CliResult r = run("decompress " + path("c5/b.hflc") + " --checkpoint " + ckpt() + " --out " + path("d5"));
  EXPECT_EQ(r.code, 4) << r.out;
  EXPECT_NE(r.out.find("decoded 4 of 5 groups"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(root_ / "d5" / "b.png"));
}

TEST_F(CliTest, EvalTwoImages) {
  const CliResult r = run("eval --checkpoint " + ckpt() + " --data " + path("data") + " --out " + path("ev"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = parse_rd_csv(slurp(root_ / "ev" / "images.csv"));
  EXPECT_EQ(rows.size(), 2u);
  EXPECT_TRUE(fs::exists(root_ / "ev" / "summary.md"));
  EXPECT_TRUE(fs::exists(root_ / "ev" / "rd_psnr.svg"));
}

TEST_F(CliTest, BdRateIdentical) {
  RDCurve c;
  c.label = "x";
  for (int i = 0; i < 4; ++i) {
    RDPoint p;
    p.bpp = 0.1 * (i + 1);
    p.psnr = 25 + 2 * i;
    p.ms_ssim = 0.9 + 0.02 * i;
    c.points.push_back(p);
  }
  std::ofstream(root_ / "curve.csv") << to_csv(c);
  const CliResult r = run("bdrate " + path("curve.csv") + " " + path("curve.csv"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("0.00%"), std::string::npos) << r.out;
}

TEST_F(CliTest, BenchPassCounts) {
  const CliResult r = run("bench --checkpoint " + ckpt() + " --out " + path("bn") + " --repetitions 1 --groups 5,10");
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(root_ / "bn" / "timing.csv");
  EXPECT_NE(csv.find("5-group,5,10,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("10-group,10,20,"), std::string::npos) << csv;
}

TEST_F(CliTest, ConfigPrecedence) {
  std::ofstream(root_ / "cfg.json") << R"({"train": {"seed": 11, "batch_size": 1, "lambda": 0.002}})";
  const CliResult r = run("train --data " + path("data") + " --out " + path("p") + " --config " + path("cfg.json") +
                    " --seed 12 --steps 1");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto cfg = nlohmann::json::parse(slurp(root_ / "p" / "config.json"));
  EXPECT_EQ(cfg["train"]["seed"].get<int>(), 12);
  EXPECT_EQ(cfg["train"]["batch_size"].get<int>(), 1);
  EXPECT_DOUBLE_EQ(cfg["train"]["lambda"].get<double>(), 0.002);
}

TEST_F(CliTest, UnknownConfigKeyFailsBeforeWork) {
  std::ofstream(root_ / "bad.json") << R"({"train": {"lamda": 1}})";
  const CliResult r = run("train --data " + path("data") + " --out " + path("bad") + " --config " + path("bad.json"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("train.lamda"), std::string::npos);
  EXPECT_FALSE(fs::exists(root_ / "bad"));
}

TEST_F(CliTest, UsageErrorsAreNonZero) {
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("compress").code, 0);
  EXPECT_NE(run("frobnicate").code, 0);
}

TEST_F(CliTest, SeedDeterminesTraining) {
  ASSERT_EQ(run("train --data " + path("data") + " --out " + path("s1") + " --seed 9 --steps 2").code, 0);
  ASSERT_EQ(run("train --data " + path("data") + " --out " + path("s2") + " --seed 9 --steps 2").code, 0);
  EXPECT_EQ(read_file(root_ / "s1" / "final.hfck"), read_file(root_ / "s2" / "final.hfck"));
}

}  // namespace
}  // namespace hflic
