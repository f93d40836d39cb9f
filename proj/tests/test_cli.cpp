#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "divsample/cli.hpp"
#include "json.hpp"

namespace divsample {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("divsample_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "divsample");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  int gen(const std::string& name, const std::string& seed = "1") {
    return run({"gen-data", "--out", path(name), "--domains", "3", "--per-domain", "60", "--dim", "3",
                "--subgroups", "3", "--seed", seed});
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, GenDataIsDeterministic) {
  ASSERT_EQ(gen("a.csv"), 0);
  ASSERT_EQ(gen("b.csv"), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  const auto cfg = nlohmann::json::parse(slurp(path("a.csv") + ".config.json"));
  EXPECT_EQ(cfg["seed"], 1);
  EXPECT_EQ(load_feature_table(path("a.csv")).size(), 3u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"gen-data", "--out", path("x.csv")}), 2);  // missing --seed
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"gen-data", "--out", path("x.csv"), "--seed", "1", "--imbalance", "1.5"}), 1);
  EXPECT_NE(err_.str().find("imbalance"), std::string::npos);
  EXPECT_EQ(run({"qe-bench", "--features", path("missing.csv"), "--sampler", "random", "--seed", "1",
                 "--out", path("r.csv")}),
            1);
  ASSERT_EQ(gen("d.csv"), 0);
  EXPECT_EQ(run({"sample", "--features", path("d.csv"), "--sampler", "greedy", "--seed", "1", "--out",
                 path("s.jsonl")}),
            2);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(Cli, SampleWritesJsonLines) {
  ASSERT_EQ(gen("d.csv"), 0);
  ASSERT_EQ(run({"sample", "--features", path("d.csv"), "--sampler", "kdpp", "--k", "5", "--draws", "2",
                 "--seed", "4", "--out", path("s.jsonl")}),
            0);
  std::ifstream in(path("s.jsonl"));
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0]["draw"], 0);
  EXPECT_EQ(rows[0]["domain"], "d0");
  EXPECT_EQ(rows[5]["domain"], "d2");
  EXPECT_EQ(rows[3]["indices"].size(), 5u);
  EXPECT_TRUE(fs::exists(path("s.jsonl") + ".config.json"));

  ASSERT_EQ(run({"sample", "--features", path("d.csv"), "--sampler", "kdpp", "--k", "5", "--draws", "2",
                 "--seed", "4", "--out", path("t.jsonl")}),
            0);
  EXPECT_EQ(slurp(path("s.jsonl")), slurp(path("t.jsonl")));
}

TEST_F(Cli, QeBenchReport) {
  ASSERT_EQ(gen("d.csv"), 0);
  ASSERT_EQ(run({"qe-bench", "--features", path("d.csv"), "--sampler", "kmeanspp", "--k", "4", "--draws",
                 "10", "--seed", "2", "--zscore", "--out", path("r.csv")}),
            0);
  std::istringstream in(slurp(path("r.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# {", 0), 0u);
  EXPECT_NE(line.find("\"zscore\":true"), std::string::npos);
  std::getline(in, line);
  EXPECT_EQ(line, "sampler,domain_or_pair,metric,mean,stderr,draws,k,seed");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].rfind("kmeanspp,d0,qe,", 0), 0u);
  EXPECT_EQ(rows[3].rfind("kmeanspp,pooled,qe,", 0), 0u);
  EXPECT_NE(rows[3].find(",10,4,2"), std::string::npos);
}

TEST_F(Cli, MmdBenchReport) {
  ASSERT_EQ(gen("d.csv"), 0);
  ASSERT_EQ(run({"mmd-bench", "--features", path("d.csv"), "--sampler", "random", "--k", "6", "--draws",
                 "8", "--seed", "2", "--max-instances", "40", "--class-weights", "--out", path("m.csv")}),
            0);
  const auto text = slurp(path("m.csv"));
  EXPECT_NE(text.find("random,d0|d1,mape,"), std::string::npos);
  EXPECT_NE(text.find("random,d1|d2,mmd_truth,"), std::string::npos);
  EXPECT_NE(text.find("random,average,mmd_estimate,"), std::string::npos);
}

TEST_F(Cli, DppVerify) {
  ASSERT_EQ(run({"dpp-verify", "--n", "6", "--k", "2", "--draws", "50000", "--seed", "3"}), 0);
  const auto text = out_.str();
  EXPECT_EQ(text.rfind("subset,expected,empirical,count,z\n", 0), 0u);
  EXPECT_NE(text.find("\n0 1,"), std::string::npos);
  EXPECT_NE(text.find("pass=true"), std::string::npos);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  EXPECT_EQ(lines, 17u);  // header, 15 subsets, footer
  EXPECT_EQ(run({"dpp-verify", "--n", "21", "--seed", "3"}), 1);
}

TEST(CapInstances, SeededSubsample) {
  SynthSpec spec;
  spec.per_domain = 50;
  const auto c = generate_domains(spec);
  const auto a = cli::cap_instances(c, 20, 7);
  const auto b = cli::cap_instances(c, 20, 7);
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t d = 0; d < a.size(); ++d) {
    EXPECT_EQ(a[d].n(), 20u);
    EXPECT_EQ(a[d].ids(), b[d].ids());
  }
  EXPECT_EQ(cli::cap_instances(c, 500, 7)[0].n(), 50u);
}

}  // namespace
}  // namespace divsample
