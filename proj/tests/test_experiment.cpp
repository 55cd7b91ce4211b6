#include "regtv/errors.hpp"
#include "regtv/experiment.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace regtv;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_e3() {
  ExperimentConfig c = default_config("E3");
  c.seed = 17;
  c.samples = 4000;
  c.n = {4, 8, 16};
  c.n_ref = 64;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Experiment, EmptyReportHasHeaderOnly) {
  Report r;
  r.experiment = "E1";
  EXPECT_EQ(to_csv(r), "experiment,params,lhs,lhs_se,rhs,rhs_se,fit_c,slope,slope_lo,slope_hi\n");
}

TEST(Experiment, ConfigValidation) {
  ExperimentConfig c = default_config("E2");
  EXPECT_THROW(c.validate(), ArgumentError);
  c.seed = 1;
  EXPECT_NO_THROW(c.validate());
  c.delta.clear();
  EXPECT_THROW(c.validate(), ArgumentError);
  c = default_config("E2");
  c.seed = 1;
  c.eta = {0.1, -0.2};
  EXPECT_THROW(c.validate(), ArgumentError);
  EXPECT_THROW(default_config("E9").validate(), ArgumentError);
  EXPECT_THROW(apply_setting(c, "alpha", "1"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "delta", "\"x\""), ArgumentError);
  EXPECT_THROW(apply_config_text(c, R"({"seed": 3, "kernel": {"a": 4}})"), ArgumentError);
  EXPECT_THROW(apply_config_text(c, "[1,2]"), ArgumentError);
  apply_config_text(c, R"({"seed": 3, "delta": [0.5, 0.25], "model": "linear-ou"})");
  EXPECT_EQ(*c.seed, 3u);
  EXPECT_EQ(c.delta, (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(c.models, std::vector<std::string>{"linear-ou"});
  apply_setting(c, "models", "elliptic-2d");
  EXPECT_EQ(c.models, std::vector<std::string>{"elliptic-2d"});
}

TEST(Experiment, CanonicalConfig) {
  ExperimentConfig a = small_e3();
  ExperimentConfig b = small_e3();
  b.out_dir = "/elsewhere";
  EXPECT_EQ(a.canonical_json(), b.canonical_json());
  b.seed = 18;
  EXPECT_NE(a.canonical_json(), b.canonical_json());
  EXPECT_FALSE(nlohmann::json::parse(a.canonical_json()).contains("out"));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Experiment, RunIsReproducible) {
  const Report a = run(small_e3());
  const Report b = run(small_e3());
  EXPECT_EQ(to_csv(a), to_csv(b));
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_TRUE(a.failures.empty());

  int rate_rows = 0;
  for (const ReportRow& row : a.rows) {
    if (row.params.find("tv_rate") == std::string::npos) continue;
    ++rate_rows;
    ASSERT_TRUE(row.slope && row.slope_lo && row.slope_hi);
    EXPECT_LE(*row.slope_lo, *row.slope);
    EXPECT_GE(*row.slope_hi, *row.slope);
  }
  EXPECT_EQ(rate_rows, 2);
  const nlohmann::json j = nlohmann::json::parse(to_json(a));
  EXPECT_EQ(j["config_hash"], fnv1a_hex(small_e3().canonical_json()));
}

TEST(Experiment, WritesArtifacts) {
  const fs::path dir = fresh_dir("regtv_exp_artifacts");
  const Report r = run(small_e3());
  write_report(r, dir.string());
  for (const char* f : {"E3.csv", "E3.json", "E3.timing.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_FALSE(fs::exists(dir / "E3.failures.json"));
  EXPECT_EQ(slurp(dir / "E3.csv"), to_csv(r));
  fs::remove_all(dir);
}

TEST(Experiment, GridFailuresAreCollected) {
  const fs::path dir = fresh_dir("regtv_exp_failures");
  ExperimentConfig c = default_config("E1");
  c.seed = 5;
  c.samples = 100;
  c.eta = {1e-12};
  const Report r = run(c);
  ASSERT_FALSE(r.failures.empty());
  EXPECT_FALSE(r.passed());
  EXPECT_NE(r.failures[0].grid_point.find("eta"), std::string::npos);
  write_report(r, dir.string());
  const nlohmann::json f = nlohmann::json::parse(slurp(dir / "E1.failures.json"));
  EXPECT_FALSE(f.empty());
  fs::remove_all(dir);
}

TEST(Experiment, UnknownModelIsRejected) {
  ExperimentConfig c = small_e3();
  c.models = {"nope"};
  EXPECT_THROW(c.validate(), ModelError);
  EXPECT_THROW(run(c), ModelError);
}
