#pragma once

#include "regtv/superkernel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace regtv {

struct ExperimentConfig {
  std::string experiment;  // E1..E5
  std::optional<std::uint64_t> seed;
  std::size_t samples = 0;  // 0: experiment default
  std::string out_dir = ".";
  std::vector<std::string> models;
  std::vector<double> delta;
  std::vector<double> eta;
  std::vector<double> s;
  std::vector<int> q;
  std::vector<int> n;
  std::vector<int> m;
  int n_ref = 1024;
  double epsilon = 0.1;
  double band = 0.0;
  std::size_t det_paths = 2000;
  KernelParams kernel;

  // Throws ArgumentError on empty or nonpositive grids and a missing seed.
  void validate() const;
  // Canonical flat JSON (sorted keys, output directory excluded).
  std::string canonical_json() const;
};

// Experiment defaults for every grid; seed stays unset.
ExperimentConfig default_config(const std::string& experiment);
// key = JSON value text, e.g. ("delta", "[0.1,0.05]") or ("seed", "42").
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value_json);
// Flat JSON object; every key goes through apply_setting.
void apply_config_text(ExperimentConfig& config, const std::string& json_text);

struct ReportRow {
  std::string params;  // "key=value;key=value"
  std::optional<double> lhs, lhs_se, rhs, rhs_se, fit_c, slope, slope_lo, slope_hi;
  bool lhs_exact = false;
  bool rhs_exact = false;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Failure {
  std::string grid_point;
  std::string error;
};

struct Report {
  std::string experiment;
  std::string config_json;
  std::string config_hash;
  std::vector<ReportRow> rows;
  std::vector<Check> checks;
  std::vector<Failure> failures;
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;

  bool passed() const;
};

Report run(const ExperimentConfig& config);

// CSV header: experiment,params,lhs,lhs_se,rhs,rhs_se,fit_c,slope,slope_lo,slope_hi
std::string to_csv(const Report& report);
std::string to_json(const Report& report);
// Writes <id>.csv and <id>.json (deterministic), <id>.timing.json, and
// <id>.failures.json when any grid point failed. Throws IoError.
void write_report(const Report& report, const std::string& dir);

std::string fnv1a_hex(const std::string& text);

}  // namespace regtv
