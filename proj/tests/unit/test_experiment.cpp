#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpplab/experiment.hpp"

using namespace fpplab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fpplab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Csv, FormatAndQuoting) {
  const auto dir = scratch("csv");
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "t.csv", {"a", "b", "c"});
    w.row({std::int64_t{3}, 0.1, std::string("x,y")});
    w.row({std::int64_t{-1}, kInfinity, std::string("q\"")});
    EXPECT_THROW(w.row({std::int64_t{1}}), std::logic_error);
  }
  EXPECT_EQ(slurp(dir / "t.csv"), "a,b,c\n3,0.10000000000000001,\"x,y\"\n-1,inf,\"q\"\"\"\n");
}

TEST(Csv, DoublesRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 5e-324})
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
}

TEST(ConfigHash, IgnoresKeyOrder) {
  const auto a = json::parse(R"({"experiment":"crossing","seed":1,"L_grid":[4],"h_grid":[0.1]})");
  const auto b = json::parse(R"({"h_grid":[0.1],"L_grid":[4],"seed":1,"experiment":"crossing"})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  const auto c = json::parse(R"({"h_grid":[0.2],"L_grid":[4],"seed":1,"experiment":"crossing"})");
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Validate, InterlacementsNeedThreeDimensions) {
  const auto errors = validate_config(json::parse(
      R"({"experiment":"interlacement-occupation","dimension":2,"target_side":3,"ambient_margin":6,"u_grid":[1],"replicas":10})"));
  EXPECT_TRUE(mentions(errors, "requires d ≥ 3"));
}

TEST(Validate, KillingParameterRange) {
  const auto errors = validate_config(json::parse(
      R"({"experiment":"green-decay","dimension":3,"side":24,"h_grid":[2],"pairs":{"distances":[8,10,12]}})"));
  EXPECT_TRUE(mentions(errors, "h ∈ [0,1]"));
}

TEST(Validate, BoxTooSmallForLevels) {
  const auto errors = validate_config(json::parse(
      R"({"experiment":"fpp-time-constant","dimension":2,"n_levels":[8,64],"box_sides":[40,40],"replicas":2})"));
  EXPECT_TRUE(mentions(errors, "box too small"));
  const auto pad = validate_config(json::parse(
      R"({"experiment":"fpp-time-constant","dimension":2,"n_levels":[64],"padding":4,"replicas":2})"));
  EXPECT_TRUE(mentions(pad, "padding"));
}

TEST(Validate, CollectsEveryProblem) {
  const auto errors = validate_config(json::parse(
      R"({"experiment":"crossing","dimension":0,"replicas":0,"L_grid":[0],"h_grid":[],"threshold":2})"));
  EXPECT_GE(errors.size(), 5u);
  EXPECT_TRUE(mentions(validate_config(json::parse(R"({"experiment":"nope"})")), "unknown kind"));
  EXPECT_TRUE(mentions(validate_config(json::parse(R"({"seed":1})")), "experiment: required"));
  EXPECT_TRUE(mentions(validate_config(json::parse(R"({"experiment":"shape","schema_version":7})")), "schema_version"));
  EXPECT_TRUE(mentions(validate_config(json::parse(R"({"experiment":"schedule-diagnostics","delta":"two"})")), "wrong type"));
}

TEST(Validate, ShippedConfigsAreClean) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(FPPLAB_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    ++n;
    EXPECT_TRUE(validate_config(load_config(e.path())).empty()) << e.path();
  }
  EXPECT_GE(n, 9u);
}

TEST(Run, ScheduleDiagnostics) {
  const auto dir = scratch("schedule");
  const auto cfg = load_config(fs::path(FPPLAB_CONFIG_DIR) / "schedule.json");
  const auto res = run_experiment(cfg, {dir, 1, std::nullopt});
  ASSERT_EQ(res.exit_code, 0) << res.error;
  EXPECT_TRUE(res.summary.at("all_ok").get<bool>());
  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("generator"), "philox4x32-10");
  EXPECT_EQ(manifest.at("config_hash"), config_hash(cfg));
  EXPECT_EQ(manifest.at("outputs"), json::array({"schedule.csv"}));
  const auto csv = slurp(dir / "schedule.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 22);
  EXPECT_EQ(csv.find("false"), std::string::npos);
}

TEST(Run, InvalidConfigExitsWithTwo) {
  const auto res = run_experiment(json::parse(R"({"experiment":"shape"})"), {scratch("bad"), 1, std::nullopt});
  EXPECT_EQ(res.exit_code, 2);
  EXPECT_FALSE(json::parse(res.error).at("errors").empty());
}

TEST(Run, RuntimeFailureNamesStage) {
  const auto dir = scratch("fail");
  const auto cfg = json::parse(
      R"({"experiment":"green-decay","dimension":3,"side":12,"h_grid":[0.1],"cg_max_iterations":1,
          "r_min":2,"pairs":{"distances":[2,3,4]}})");
  const auto res = run_experiment(cfg, {dir, 1, std::nullopt});
  EXPECT_EQ(res.exit_code, 1);
  const auto err = json::parse(slurp(dir / "error.json"));
  EXPECT_EQ(err.at("stage"), "solve");
}

TEST(Run, SeedOverrideAndWorkersKeepOutputsStable) {
  auto cfg = load_config(fs::path(FPPLAB_CONFIG_DIR) / "time_constant_gff.json");
  cfg["replicas"] = 4;
  cfg["n_levels"] = {4, 8};
  const auto a = run_experiment(cfg, {scratch("w1"), 1, std::uint64_t{99}});
  const auto b = run_experiment(cfg, {scratch("w3"), 3, std::uint64_t{99}});
  const auto c = run_experiment(cfg, {scratch("s2"), 1, std::uint64_t{100}});
  ASSERT_EQ(a.exit_code, 0) << a.error;
  ASSERT_EQ(b.exit_code, 0) << b.error;
  EXPECT_EQ(slurp(a.out_dir / "levels.csv"), slurp(b.out_dir / "levels.csv"));
  EXPECT_NE(slurp(a.out_dir / "levels.csv"), slurp(c.out_dir / "levels.csv"));
  EXPECT_EQ(a.summary.at("monotonicity_violations"), 0);
}

TEST(Run, EveryKindRunsOnTinyInputs) {
  const std::vector<std::string> tiny = {
      R"({"experiment":"gff-covariance","dimension":2,"side":4,"replicas":50,"pairs":3})",
      R"({"experiment":"fpp-time-constant","dimension":2,"n_levels":[2,4],"replicas":3,"tail_C":1,"growth_q":2,
          "environment":{"type":"iid","law":"exponential","rate":1}})",
      R"({"experiment":"shape","dimension":2,"side":21,"t_levels":[2,4],"replicas":2,
          "environment":{"type":"gff","functional":{"type":"exp","gamma":1}}})",
      R"({"experiment":"crossing","dimension":2,"L_grid":[2],"h_grid":[0,0.5],"replicas":3})",
      R"({"experiment":"decoupling","dimension":2,"L":1,"separations":[2],"u":0.2,"u_hat":0,
          "f1":{"type":"min-above","h":-1},"f2":{"type":"one"},"replicas":5})",
      R"({"experiment":"green-decay","dimension":3,"side":12,"h_grid":[0.2],"r_min":2,
          "pairs":{"layout":"ray","source":[2,5,5],"distances":[2,3,4]},"snapshot":true})",
      R"({"experiment":"heat-kernel","dimension":2,"side":6,"t_grid":[1,4,16],"method":"exact-small"})",
      R"({"experiment":"heat-kernel","dimension":2,"side":5,"t_grid":[0.5],"method":"monte-carlo","walks":50})",
      R"({"experiment":"interlacement-occupation","dimension":3,"target_side":2,"ambient_margin":4,"u_grid":[1],"replicas":5})",
      R"({"experiment":"schedule-diagnostics","delta":1.5,"rho":2,"K":3,"L0":1,"k_max":5})"};
  int i = 0;
  for (const auto& s : tiny) {
    const auto dir = scratch("kind" + std::to_string(i++));
    const auto res = run_experiment(json::parse(s), {dir, 1, std::nullopt});
    ASSERT_EQ(res.exit_code, 0) << s << "\n" << res.error;
    const auto manifest = json::parse(slurp(dir / "manifest.json"));
    for (const auto& out : manifest.at("outputs")) {
      const auto name = out.get<std::string>();
      ASSERT_TRUE(fs::exists(dir / name)) << name;
      if (name.ends_with(".csv")) {
        const auto body = slurp(dir / name);
        EXPECT_EQ(body.rfind("config_hash,replicas,", 0), 0u) << name;
        EXPECT_NE(body.find(res.config_hash), std::string::npos) << name;
      }
    }
  }
}
