#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gfcond/grid.hpp"
#include "gfcond/kernels.hpp"

namespace gfcond {

// Scenario file: a single JSON document describing grid, subset, kernel,
// observation, tolerances, and Monte Carlo settings. See README for the
// format.
struct ScenarioConfig {
  double t_min = 0.0;
  double t_max = 1.0;
  int n = 2;
  std::vector<std::pair<double, double>> subset;
  KernelSpec kernel;

  enum class ObsKind { None, Inline, File, Sample };
  ObsKind obs_kind = ObsKind::None;
  Eigen::VectorXd obs_inline;
  std::string obs_file;
  std::uint64_t obs_seed = 0;

  double tol_psd = 1e-10;
  double tol_cutoff = 1e-10;
  double tol_identity = 1e-8;

  int mc_n_outer = 2000;
  int mc_n_inner = 50;
  std::uint64_t mc_seed = 1;

  std::string outputs = "out";
  std::string outputs_override;  // set by the CLI --out flag; wins over env

  bool has_probe = false;
  std::vector<double> probe_points;
  double probe_delta = 0.05;
  int probe_n = 200000;
  std::vector<double> probe_eval_points;

  std::string base_dir;  // directory of the config file, for relative paths
};

// Parses and validates a scenario file. Raises config-invalid with a message
// naming the offending field.
ScenarioConfig load_scenario(const std::string& path);

// Assembled problem pieces shared by the commands.
struct Problem {
  Grid grid;
  SubsetMask mask;
  CovarianceMatrix cov;
};

Problem build_problem(const ScenarioConfig& config);

// Observation vector over S per the config (inline values, CSV file, or a
// restricted prior draw for "sample(seed)").
Eigen::VectorXd resolve_observation(const ScenarioConfig& config, const Problem& problem);

// CLI exit codes (a stable contract).
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitYNotInY0 = 3;
inline constexpr int kExitIdentityFailed = 4;
inline constexpr int kExitStatisticalFailure = 5;

// Commands: run the pipeline, write output files into the resolved output
// directory, print a one-line summary, and return the exit code.
int cmd_condition(const ScenarioConfig& config);
int cmd_m(const ScenarioConfig& config);
int cmd_sample(const ScenarioConfig& config, const std::string& law, int n, std::uint64_t seed);
int cmd_verify(const ScenarioConfig& config);
int cmd_demo_minfinity(const ScenarioConfig& config, double ratio, int max_bumps);

}  // namespace gfcond
