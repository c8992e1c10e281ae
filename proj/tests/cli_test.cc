// Copyright 2026 The ctrnas Authors.
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


#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.h"
#include "ctrnas/error.h"

namespace ctrnas::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ctrnas_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(std::vector<std::string> args) {
    args.insert(args.begin(), "ctrnas");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return Main(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string Slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Run({"--help"}), 0);
  EXPECT_EQ(Run({}), 2);
  EXPECT_EQ(Run({"search", "--no-such-flag"}), 2);
  EXPECT_EQ(Run({"search", "--searcher", "annealing"}), 2);
}

TEST_F(CliTest, RandomSearchAndReplay) {
  const fs::path run = dir_ / "run";
  ASSERT_EQ(Run({"search", "--searcher", "random", "--data", "oracle", "--budget", "30",
                 "--workers", "1", "--seed", "4", "--out", run.string()}),
            0)
      << err_.str();
  for (const char* f : {"manifest.json", "eval_log.jsonl", "timings.csv", "best_arch.json",
                        "best_curve.csv"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(Slurp(run / "manifest.json"));
  EXPECT_EQ(manifest.at("status"), "complete");
  EXPECT_EQ(manifest.at("command"), "search");
  std::ifstream log(run / "eval_log.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  EXPECT_EQ(lines, 30);

  EXPECT_EQ(Run({"replay", "--manifest", (run / "manifest.json").string()}), 0) << err_.str();
  EXPECT_EQ(Slurp(run / "replay" / "eval_log.jsonl"), Slurp(run / "eval_log.jsonl"));

  // A tampered log no longer replays.
  std::ofstream(run / "eval_log.jsonl", std::ios::app) << "{}\n";
  EXPECT_EQ(Run({"replay", "--manifest", (run / "manifest.json").string(), "--out",
                 (dir_ / "replay2").string()}),
            3);
}

TEST_F(CliTest, LanasSearchWritesTree) {
  const fs::path run = dir_ / "lanas";
  ASSERT_EQ(Run({"search", "--searcher", "lanas+", "--data", "oracle", "--budget", "40",
                 "--init", "20", "--workers", "1", "--out", run.string()}),
            0)
      << err_.str();
  const auto tree = nlohmann::json::parse(Slurp(run / "tree.json"));
  EXPECT_EQ(tree.at("outstanding"), 0);
}

TEST_F(CliTest, EvaluatePreset) {
  const fs::path out = dir_ / "eval";
  ASSERT_EQ(Run({"evaluate", "--arch", "deepfm_like", "--data", "synthetic", "--rows", "2000",
                 "--epochs", "1", "--batch-size", "128", "--out", out.string()}),
            0)
      << err_.str();
  const auto rec = nlohmann::json::parse(Slurp(out / "record.json"));
  EXPECT_TRUE(rec.at("val_logloss").is_number());
  EXPECT_EQ(Run({"evaluate", "--arch", "no_such_preset", "--data", "oracle", "--out",
                 (dir_ / "bad").string()}),
            1);
}

TEST_F(CliTest, ImportanceFromRandomOracleLog) {
  const fs::path out = dir_ / "imp";
  ASSERT_EQ(Run({"importance", "--random", "200", "--top", "5", "--out", out.string()}), 0)
      << err_.str();
  std::ifstream in(out / "importance.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "label,gain");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_GT(rows, 0);
  EXPECT_LE(rows, 5);
}

TEST(DataSourceTest, ParseAndJson) {
  const auto oracle = DataSource::Parse("oracle", "", 10, 0);
  EXPECT_EQ(oracle.kind, "oracle");
  const auto syn = DataSource::Parse("synthetic", "", 500, 3);
  EXPECT_EQ(syn.kind, "synthetic");
  EXPECT_EQ(DataSource::FromJson(syn.ToJson()).ToJson(), syn.ToJson());
  EXPECT_EQ(syn.Load().size(), 500u);
  EXPECT_THROW(DataSource::Parse("clicks.csv", "", 10, 0), Error);
}

TEST(SearchOptionsTest, JsonRoundTrip) {
  SearchOptions o;
  o.searcher = "lanas+";
  o.seed = 12;
  o.search.budget = 77;
  o.search.init_size = 30;
  o.lanas.budget = 77;
  o.lanas.init_size = 30;
  o.lanas.depth = 3;
  o.fidelity.hash_cap.reset();
  o.train.max_epochs = 4;
  EXPECT_EQ(SearchOptions::FromJson(o.ToJson()).ToJson(), o.ToJson());
}

}  // namespace
}  // namespace ctrnas::cli
