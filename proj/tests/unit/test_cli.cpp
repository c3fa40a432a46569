#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qdetect_cli/commands.hpp"
#include "qdetect_cli/config.hpp"

using namespace qdetect::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "qdetect");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qdetect_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

ParamSpec spec(const std::string& name, ParamType type, Json def) { return {name, type, std::move(def), ""}; }

}  // namespace

TEST(Config, NormalizeAcceptsStringsAndLists) {
  EXPECT_TRUE(std::isinf(json_real(normalize(spec("x", ParamType::Real, 0.0), "inf"))));
  EXPECT_EQ(json_real(normalize(spec("x", ParamType::Real, 0.0), "0.25")), 0.25);
  const auto list = normalize(spec("xs", ParamType::RealList, Json::array()), "0,inf");
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(json_real(list[0]), 0.0);
  EXPECT_TRUE(std::isinf(json_real(list[1])));
  EXPECT_EQ(normalize(spec("n", ParamType::Integer, 1), "3"), 3);
  EXPECT_THROW(normalize(spec("n", ParamType::Integer, 1), "three"), ConfigError);
}

TEST(Config, DumpJsonUsesSeventeenDigits) {
  EXPECT_EQ(dump_json(Json{{"a", 0.1}}, -1), "{\"a\":0.10000000000000001}");
  EXPECT_EQ(dump_json(Json::array({std::numeric_limits<double>::infinity()}), -1), "[\"inf\"]");
  EXPECT_TRUE(std::isinf(json_real(Json("inf"))));
}

TEST_F(CliTest, MergePrecedenceDefaultsFileFlags) {
  const auto specs = params_for("simulate");
  {
    std::ofstream cfg(dir_ / "cfg.json");
    cfg << R"({"seed": 5, "dt": 0.01})";
  }
  const auto merged = merge_config("simulate", specs, (dir_ / "cfg.json").string(), {{"seed", "9"}});
  EXPECT_EQ(get_u64(merged, "seed"), 9u);
  EXPECT_EQ(get_real(merged, "dt"), 0.01);
  EXPECT_EQ(get_text(merged, "model"), get_text(merge_config("simulate", specs, "", {}), "model"));
}

TEST_F(CliTest, UnknownConfigKeyIsRejected) {
  {
    std::ofstream cfg(dir_ / "cfg.json");
    cfg << R"({"sed": 5})";
  }
  EXPECT_THROW(merge_config("simulate", params_for("simulate"), (dir_ / "cfg.json").string(), {}), ConfigError);
  const auto r = run({"simulate", "--config", (dir_ / "cfg.json").string(), "--out", dir_.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("\"error\""), std::string::npos);
}

TEST_F(CliTest, HashIgnoresOutputLocationAndThreads) {
  const auto specs = params_for("mc");
  const auto a = merge_config("mc", specs, "", {{"out", "x"}, {"threads", "1"}});
  const auto b = merge_config("mc", specs, "", {{"out", "y"}, {"threads", "4"}});
  const auto c = merge_config("mc", specs, "", {{"seed", "2"}});
  EXPECT_EQ(config_hash(canonical_config("mc", specs, a)), config_hash(canonical_config("mc", specs, b)));
  EXPECT_NE(config_hash(canonical_config("mc", specs, a)), config_hash(canonical_config("mc", specs, c)));
}

TEST_F(CliTest, SimulateIsDeterministicAndReplayable) {
  const std::vector<std::string> args{"simulate", "--model", "constant:1", "--n", "2", "--tau", "0,inf",
                                      "--dt", "0.001", "--horizon", "50", "--seed", "7"};
  auto first = args, second = args;
  first.insert(first.end(), {"--out", (dir_ / "a").string()});
  second.insert(second.end(), {"--out", (dir_ / "b").string()});
  ASSERT_EQ(run(first).code, 0);
  ASSERT_EQ(run(second).code, 0);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) files.push_back(e.path().filename().string());
  EXPECT_EQ(files.size(), 2u);
  for (const auto& f : files) EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;

  const auto paths = slurp(dir_ / "a" / "paths.csv");
  EXPECT_EQ(paths.rfind("# config_hash=", 0), 0u);
  EXPECT_NE(paths.find("seed=7\r\nt,z1,z2,a1,a2\r\n"), std::string::npos);

  const auto replay = run({"simulate", "--config", (dir_ / "a" / "simulate.json").string(), "--out",
                           (dir_ / "c").string()});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(slurp(dir_ / "c" / "paths.csv"), paths);
}

TEST_F(CliTest, RotationalModelNeedsTwoSensors) {
  const auto r = run({"simulate", "--model", "rotational", "--n", "3", "--out", dir_.string()});
  EXPECT_EQ(r.code, 2);
  const auto err = Json::parse(r.err);
  EXPECT_EQ(err["error"]["type"], "invalid_argument");
  EXPECT_NE(err["error"]["message"].get<std::string>().find("2 sensors"), std::string::npos);
}

TEST_F(CliTest, UnwritableOutputIsAnIoError) {
  {
    std::ofstream blocker(dir_ / "file");
    blocker << "x";
  }
  const auto r = run({"simulate", "--horizon", "1", "--out", (dir_ / "file" / "sub").string()});
  EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, CalibrateExactOneSensor) {
  const auto r = run({"calibrate", "--n", "1", "--gamma", "0.71828182845904509", "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = Json::parse(slurp(dir_ / "calibration.json"));
  EXPECT_NEAR(json_real(j["results"][0]["threshold"]), 1.0, 1e-9);
}

TEST_F(CliTest, ReportWithoutPdeResultsMarksThemAbsent) {
  const auto mc = run({"mc", "--criterion", "false_alarm", "--n", "2", "--threshold", "3", "--reps", "500",
                       "--dt", "0.02", "--out", dir_.string()});
  ASSERT_EQ(mc.code, 0) << mc.err;
  const auto r = run({"report", "--input", dir_.string(), "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir_ / "report.txt");
  EXPECT_NE(text.find("absent (no pde results)"), std::string::npos);
  const auto j = Json::parse(slurp(dir_ / "report.json"));
  ASSERT_EQ(j["crossval"].size(), 1u);
  EXPECT_TRUE(j["crossval"][0]["fd_gamma"].is_null());
}

TEST_F(CliTest, ReportOnOneSensorRunsHasZeroGap) {
  const auto mc = run({"mc", "--criterion", "delay", "--n", "1", "--gamma", "5,20", "--reps", "20000", "--dt",
                       "0.005", "--out", dir_.string()});
  ASSERT_EQ(mc.code, 0) << mc.err;
  const auto r = run({"report", "--input", dir_.string(), "--out", dir_.string()});
  ASSERT_EQ(r.code, 0);
  const auto j = Json::parse(slurp(dir_ / "report.json"));
  ASSERT_EQ(j["gap"].size(), 2u);
  for (const auto& row : j["gap"]) {
    EXPECT_NEAR(json_real(row["gap"]), 0.0, 3.0 * json_real(row["gap_se"]));
    EXPECT_EQ(json_real(row["log_n"]), 0.0);
  }
}

TEST_F(CliTest, PdeSweepWritesCsv) {
  const auto r = run({"pde", "--eps", "0.25", "--problems", "T", "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(dir_ / "pde_sweep.csv");
  EXPECT_NE(csv.find("problem,epsilon,n_cells,corner,asymptote,rel_err\r\nT,0.25,256,"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"simulate", "--dt", "abc", "--out", dir_.string()}).code, 2);
  EXPECT_EQ(run({"simulate", "--help"}).code, 0);
}
