#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "txpredict/solver.hpp"

namespace fs = std::filesystem;
using txpredict::cli::run;

namespace {

struct Output {
  int code;
  std::string out;
  std::string err;
};

Output call(std::vector<std::string> args) {
  args.insert(args.begin(), "txpredict");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("txpredict_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ObserveIsDeterministic) {
  const auto a = call({"observe", "-w", "smallbank-lite", "--sessions", "3", "--txns", "2", "--seed", "5"});
  const auto b = call({"observe", "-w", "smallbank-lite", "--sessions", "3", "--txns", "2", "--seed", "5"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("schedule"), std::string::npos);
  ASSERT_EQ(call({"observe", "-w", "smallbank-lite", "--sessions", "3", "--txns", "2", "--seed", "5", "-o", path("t.txt")}).code, 0);
  EXPECT_EQ(slurp(path("t.txt")), a.out);
}

TEST_F(CliTest, ConfigErrors) {
  EXPECT_EQ(call({"observe", "-w", "voter", "--sessions", "0"}).code, 2);
  EXPECT_EQ(call({"observe", "-w", "nonexistent"}).code, 2);
  EXPECT_EQ(call({"observe"}).code, 2);
  EXPECT_EQ(call({"frobnicate"}).code, 2);
  EXPECT_EQ(call({"predict", "-t", path("missing.txt")}).code, 2);
  EXPECT_EQ(call({"predict", "-t", path("missing.txt"), "--strategy", "bogus"}).code, 2);
  write("bad.txt", "session 1\ntxn 1\nq\n");
  const auto bad = call({"render", "-t", path("bad.txt")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 3"), std::string::npos) << bad.err;
}

TEST_F(CliTest, CheckLevels) {
  write("lost.txt", txpredict::testing::kDepositLostUpdate);
  write("causal.txt", txpredict::testing::kCausalViolation);
  EXPECT_EQ(call({"check", "-t", path("lost.txt"), "--level", "causal"}).code, 0);
  EXPECT_EQ(call({"check", "-t", path("causal.txt"), "--level", "causal"}).code, 1);
  EXPECT_EQ(call({"check", "-t", path("causal.txt"), "--level", "rc"}).code, 0);
  if (!txpredict::smt::backend_available()) return;
  EXPECT_EQ(call({"check", "-t", path("lost.txt"), "--level", "serializable"}).code, 1);
  const auto j = call({"check", "-t", path("causal.txt")});
  const auto doc = nlohmann::json::parse(j.out);
  EXPECT_FALSE(doc["causal"]["conforms"].get<bool>());
}

TEST_F(CliTest, PredictAndValidatePipeline) {
  if (!txpredict::smt::backend_available()) GTEST_SKIP();
  ASSERT_EQ(call({"observe", "-w", "deposit-deposit", "--sessions", "2", "--txns", "1", "--seed", "7", "-o", path("obs.txt")}).code, 0);
  EXPECT_EQ(call({"predict", "-t", path("obs.txt"), "--strategy", "approx-strict"}).code, 1);
  const auto p = call({"predict", "-t", path("obs.txt"), "--strategy", "approx-relaxed", "-o", path("pred.txt")});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto pj = nlohmann::json::parse(p.out);
  EXPECT_EQ(pj["status"], "sat");
  EXPECT_EQ(pj["changed"].size(), 1u);
  const auto v = call({"validate", "-w", "deposit-deposit", "--sessions", "2", "--txns", "1", "--seed", "7", "-p",
                       path("pred.txt"), "--json", path("report.json")});
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_TRUE(v.out.empty());
  const auto vj = nlohmann::json::parse(slurp(path("report.json")));
  EXPECT_EQ(vj["outcome"], "validated-unserializable");
  EXPECT_FALSE(vj["diverged"].get<bool>());
  const auto v2 = call({"validate", "-w", "deposit-deposit", "--sessions", "2", "--txns", "1", "--seed", "7", "-p",
                        path("pred.txt")});
  EXPECT_EQ(slurp(path("report.json")), v2.out);
}

TEST_F(CliTest, FuzzReport) {
  if (!txpredict::smt::backend_available()) GTEST_SKIP();
  const std::vector<std::string> args{"fuzz", "-w", "deposit-deposit", "--sessions", "2", "--txns", "1", "--runs", "100"};
  const auto f = call(args);
  ASSERT_EQ(f.code, 0) << f.err;
  const auto j = nlohmann::json::parse(f.out);
  EXPECT_EQ(j["runs"], 100);
  EXPECT_EQ(j["verdicts"].size(), 100u);
  // The second deposit reads t0 or the first deposit with equal odds.
  const double rate = j["unserializable_rate"].get<double>();
  EXPECT_GT(rate, 0.35);
  EXPECT_LT(rate, 0.65);
  EXPECT_EQ(f.out, call(args).out);

  const auto none = call({"fuzz", "-w", "deposit-deposit", "--runs", "0"});
  ASSERT_EQ(none.code, 0) << none.err;
  EXPECT_EQ(nlohmann::json::parse(none.out)["verdicts"].size(), 0u);
}

TEST_F(CliTest, RenderDot) {
  write("obs.txt", txpredict::testing::kDepositObserved);
  const auto r = call({"render", "-t", path("obs.txt"), "--values"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("digraph", 0), 0u);
}

TEST_F(CliTest, TimeoutAnywhere) {
  EXPECT_EQ(call({"--timeout", "5", "observe", "-w", "voter"}).code, 0);
  EXPECT_EQ(call({"observe", "-w", "voter", "--timeout", "5"}).code, 0);
}
