#include "gfcond/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "gfcond/conditioning.hpp"
#include "gfcond/csv.hpp"
#include "gfcond/errors.hpp"
#include "gfcond/montecarlo.hpp"
#include "gfcond/oracle.hpp"

namespace gfcond {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& why) {
  fail("config-invalid", "config field '" + field + "': " + why);
}

std::string resolve_path(const ScenarioConfig& config, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || config.base_dir.empty()) return path;
  return (fs::path(config.base_dir) / p).string();
}

KernelSpec parse_kernel(const json& j, const std::string& base_dir) {
  if (!j.contains("kernel") || !j["kernel"].is_object()) {
    config_error("kernel", "missing or not an object");
  }
  const json& k = j["kernel"];
  const std::string type = k.value("type", "");
  try {
    if (type == "brownian") return KernelSpec::brownian();
    if (type == "ornstein_uhlenbeck") {
      if (!k.contains("length_scale")) config_error("kernel.length_scale", "required");
      return KernelSpec::ornstein_uhlenbeck(k["length_scale"].get<double>());
    }
    if (type == "squared_exponential") {
      if (!k.contains("length_scale")) config_error("kernel.length_scale", "required");
      return KernelSpec::squared_exponential(k["length_scale"].get<double>());
    }
    if (type == "rank_one") {
      return KernelSpec::rank_one(k.value("profile", "linear"));
    }
    if (type == "constant") {
      return KernelSpec::constant(k.value("level", 1.0));
    }
    if (type == "bumps") {
      return KernelSpec::bumps(k.value("n_bumps", 1), k.value("height_ratio", 2.0),
                               k.value("decay", 0.5));
    }
    if (type == "custom_matrix") {
      if (k.contains("matrix")) {
        const auto rows = k["matrix"].get<std::vector<std::vector<double>>>();
        if (rows.empty()) config_error("kernel.matrix", "empty");
        Eigen::MatrixXd m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != rows.front().size()) config_error("kernel.matrix", "ragged rows");
          for (std::size_t c = 0; c < rows[i].size(); ++c) m(i, c) = rows[i][c];
        }
        return KernelSpec::custom_matrix(std::move(m));
      }
      if (k.contains("path")) {
        fs::path p(k["path"].get<std::string>());
        if (!p.is_absolute() && !base_dir.empty()) p = fs::path(base_dir) / p;
        if (!fs::exists(p)) config_error("kernel.path", "file '" + p.string() + "' not found");
        return KernelSpec::custom_matrix(read_matrix_csv(p.string()));
      }
      config_error("kernel", "custom_matrix needs 'matrix' or 'path'");
    }
  } catch (const Error& e) {
    if (e.code() == "config-invalid" || e.code() == "csv-parse") throw;
    config_error("kernel", e.what());
  } catch (const json::exception& e) {
    config_error("kernel", e.what());
  }
  config_error("kernel.type", "unknown kernel '" + type + "'");
}

}  // namespace

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config-invalid", "cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("config-invalid", std::string("scenario is not valid JSON: ") + e.what());
  }

  ScenarioConfig config;
  config.base_dir = fs::path(path).parent_path().string();

  try {
    if (!j.contains("grid")) config_error("grid", "required");
    config.t_min = j["grid"].at("t_min").get<double>();
    config.t_max = j["grid"].at("t_max").get<double>();
    config.n = j["grid"].at("n").get<int>();

    if (!j.contains("subset") || !j["subset"].is_array() || j["subset"].empty()) {
      config_error("subset", "required nonempty array of [lo, hi] intervals");
    }
    for (const auto& entry : j["subset"]) {
      const auto pair = entry.get<std::vector<double>>();
      if (pair.size() != 2) config_error("subset", "intervals must be [lo, hi]");
      config.subset.emplace_back(pair[0], pair[1]);
    }

    config.kernel = parse_kernel(j, config.base_dir);

    if (j.contains("observation")) {
      const json& obs = j["observation"];
      if (obs.is_array()) {
        const auto vals = obs.get<std::vector<double>>();
        config.obs_kind = ScenarioConfig::ObsKind::Inline;
        config.obs_inline = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
      } else if (obs.is_string()) {
        const std::string s = obs.get<std::string>();
        if (s.rfind("sample(", 0) == 0 && s.back() == ')') {
          config.obs_kind = ScenarioConfig::ObsKind::Sample;
          try {
            config.obs_seed = std::stoull(s.substr(7, s.size() - 8));
          } catch (const std::exception&) {
            config_error("observation", "bad sample(seed) form '" + s + "'");
          }
        } else {
          config.obs_kind = ScenarioConfig::ObsKind::File;
          config.obs_file = s;
          if (!fs::exists(resolve_path(config, s))) {
            config_error("observation", "file '" + s + "' not found");
          }
        }
      } else {
        config_error("observation", "must be an array, a file path, or sample(seed)");
      }
    }

    if (j.contains("tolerances")) {
      const json& t = j["tolerances"];
      config.tol_psd = t.value("psd", config.tol_psd);
      config.tol_cutoff = t.value("cutoff", config.tol_cutoff);
      config.tol_identity = t.value("identity", config.tol_identity);
      if (!(config.tol_psd > 0.0 && config.tol_cutoff > 0.0 && config.tol_identity > 0.0)) {
        config_error("tolerances", "all tolerances must be positive");
      }
    }

    if (j.contains("mc")) {
      const json& mc = j["mc"];
      config.mc_n_outer = mc.value("n_outer", config.mc_n_outer);
      config.mc_n_inner = mc.value("n_inner", config.mc_n_inner);
      config.mc_seed = mc.value("seed", config.mc_seed);
      if (config.mc_n_outer < 1 || config.mc_n_inner < 1) {
        config_error("mc", "n_outer and n_inner must be at least 1");
      }
    }

    config.outputs = j.value("outputs", config.outputs);

    if (j.contains("probe")) {
      const json& p = j["probe"];
      config.has_probe = true;
      config.probe_points = p.at("points").get<std::vector<double>>();
      config.probe_delta = p.value("delta", config.probe_delta);
      config.probe_n = p.value("n", config.probe_n);
      if (p.contains("eval_points")) {
        config.probe_eval_points = p["eval_points"].get<std::vector<double>>();
      }
      if (config.probe_points.empty() || config.probe_points.size() > 5) {
        config_error("probe.points", "need 1..5 probe points");
      }
      if (!(config.probe_delta > 0.0)) config_error("probe.delta", "must be positive");
    }
  } catch (const json::exception& e) {
    fail("config-invalid", std::string("scenario parse: ") + e.what());
  }
  return config;
}

Problem build_problem(const ScenarioConfig& config) {
  Problem p;
  p.grid = build_grid(config.t_min, config.t_max, config.n);
  p.mask = mask_from_intervals(p.grid, config.subset);
  p.cov = assemble(config.kernel, p.grid, p.mask);
  p.cov.psd_tolerance = config.tol_psd;
  const KernelValidation v = validate(p.cov);
  if (!v.pass()) {
    fail("validation-failed",
         "kernel failed validation: min eigenvalue " + std::to_string(v.min_eigenvalue) +
             ", schwarz violation " + std::to_string(v.schwarz_violation));
  }
  return p;
}

Eigen::VectorXd resolve_observation(const ScenarioConfig& config, const Problem& problem) {
  switch (config.obs_kind) {
    case ScenarioConfig::ObsKind::None:
      fail("config-invalid", "config field 'observation': required by this command");
    case ScenarioConfig::ObsKind::Inline: {
      if (config.obs_inline.size() != problem.mask.size()) {
        fail("config-invalid", "config field 'observation': has " +
                                   std::to_string(config.obs_inline.size()) + " values, subset has " +
                                   std::to_string(problem.mask.size()) + " points");
      }
      return config.obs_inline;
    }
    case ScenarioConfig::ObsKind::File: {
      const Eigen::MatrixXd m = read_matrix_csv(resolve_path(config, config.obs_file));
      Eigen::VectorXd y;
      if (m.cols() == 1) {
        y = m.col(0);
      } else if (m.rows() == 1) {
        y = m.row(0).transpose();
      } else {
        fail("config-invalid", "config field 'observation': file must hold a single row or column");
      }
      if (y.size() != problem.mask.size()) {
        fail("config-invalid", "config field 'observation': file has " + std::to_string(y.size()) +
                                   " values, subset has " + std::to_string(problem.mask.size()) +
                                   " points");
      }
      return y;
    }
    case ScenarioConfig::ObsKind::Sample: {
      const HilbertFactor factor = factorize(problem.cov, problem.mask, config.tol_cutoff);
      const SampleBatch batch = sample_prior(factor, 1, config.obs_seed);
      return restrict_to(batch.paths.row(0).transpose(), problem.mask);
    }
  }
  fail("config-invalid", "config field 'observation': unreachable kind");
}

namespace {

std::string output_dir(const ScenarioConfig& config) {
  std::string dir = config.outputs;
  if (const char* env = std::getenv("GFCOND_OUT"); env != nullptr && *env != '\0') dir = env;
  if (!config.outputs_override.empty()) dir = config.outputs_override;
  fs::create_directories(dir);
  return dir;
}

json to_json(const MRatioReport& r) {
  json j;
  j["m_delta"] = r.m_delta;
  j["witness"] = r.m_delta_witness;
  j["m_opnorm_lower"] = r.m_opnorm_lower;
  if (r.m_opnorm_rowsum.has_value()) {
    j["m_opnorm_rowsum"] = *r.m_opnorm_rowsum;
  } else {
    j["m_opnorm_rowsum"] = nullptr;
  }
  j["skipped_rows"] = r.skipped_rows;
  return j;
}

json to_json(const IdentityCheck& c) {
  return json{{"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}};
}

json to_json(const IdentityReport& r) {
  json j;
  j["a_cov_dominated"] = to_json(r.a_cov_dominated);
  j["b_mean_consistency"] = to_json(r.b_mean_consistency);
  j["c_kernel_rows_vanish"] = to_json(r.c_kernel_rows_vanish);
  j["d_interpolation"] = to_json(r.d_interpolation);
  j["e_bounded_extension"] = to_json(r.e_bounded_extension);
  j["m_bound_used"] = r.m_bound_used;
  j["pass"] = r.all_pass();
  return j;
}

json to_json(const StatReport& r) {
  json j;
  j["name"] = r.name;
  j["estimate"] = r.estimate;
  j["reference"] = r.reference;
  j["stderr"] = r.stderr_est;
  j["z_score"] = std::isfinite(r.z_score) ? json(r.z_score) : json("inf");
  j["pass"] = r.pass;
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail("io-error", "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

int exit_code_for(const Error& e) {
  if (e.code() == "y-not-in-Y0") return kExitYNotInY0;
  if (e.code() == "identity-check-failed") return kExitIdentityFailed;
  if (e.code() == "statistical-failure" || e.code() == "too-few-acceptances") {
    return kExitStatisticalFailure;
  }
  return kExitConfigInvalid;
}

template <typename Fn>
int run_command(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

ConditionOptions make_options(const ScenarioConfig& config) {
  ConditionOptions opts;
  opts.cutoff = config.tol_cutoff;
  opts.tol = config.tol_identity;
  opts.seed = config.mc_seed;
  return opts;
}

}  // namespace

int cmd_condition(const ScenarioConfig& config) {
  return run_command([&]() {
    const Problem p = build_problem(config);
    const Eigen::VectorXd y = resolve_observation(config, p);
    const ConditionalLaw law = condition(p.cov, p.mask, y, make_options(config));
    const IdentityReport identities = verify_identities(law, p.cov, p.mask, config.tol_identity);

    const std::string dir = output_dir(config);
    write_series_csv(dir + "/mean.csv", p.grid.points, law.mean);
    write_matrix_csv(dir + "/cond_cov.csv", law.cond_cov);
    write_envelope_csv(dir + "/envelope.csv", p.grid.points, law.mean, law.cond_cov.diagonal());

    json report;
    report["schema_version"] = 1;
    report["m"] = to_json(law.m_report);
    report["identities"] = to_json(identities);
    report["projection_residual"] = law.projection_residual;
    report["pass"] = identities.all_pass();
    write_json(dir + "/report.json", report);

    std::cout << "condition: m_delta=" << law.m_report.m_delta
              << " residual=" << law.projection_residual
              << (identities.all_pass() ? " [ok]" : " [identity-check-failed]") << '\n';
    return identities.all_pass() ? kExitOk : kExitIdentityFailed;
  });
}

int cmd_m(const ScenarioConfig& config) {
  return run_command([&]() {
    const Problem p = build_problem(config);
    const MRatioReport report =
        compute_m_opnorm(p.cov, p.mask, 200, config.mc_seed);
    const std::string dir = output_dir(config);
    json j = to_json(report);
    j["schema_version"] = 1;
    write_json(dir + "/m_report.json", j);
    std::cout << "m: m_delta=" << report.m_delta << " witness=" << report.m_delta_witness
              << '\n';
    return kExitOk;
  });
}

int cmd_sample(const ScenarioConfig& config, const std::string& law_name, int n,
               std::uint64_t seed) {
  return run_command([&]() {
    if (n < 0) fail("config-invalid", "sample count must be nonnegative");
    const Problem p = build_problem(config);
    SampleBatch batch;
    if (law_name == "prior") {
      const HilbertFactor factor = factorize(p.cov, p.mask, config.tol_cutoff);
      batch = sample_prior(factor, n, seed);
    } else if (law_name == "conditional") {
      const Eigen::VectorXd y = resolve_observation(config, p);
      const ConditionalLaw law = condition(p.cov, p.mask, y, make_options(config));
      batch = sample_conditional(law, n, seed);
    } else {
      fail("config-invalid", "law must be 'prior' or 'conditional', got '" + law_name + "'");
    }
    const std::string dir = output_dir(config);
    write_paths_csv(dir + "/samples.csv", p.grid.points, batch.paths);
    std::cout << "sample: wrote " << batch.count() << " " << batch.law_tag << " paths\n";
    return kExitOk;
  });
}

int cmd_verify(const ScenarioConfig& config) {
  return run_command([&]() {
    const Problem p = build_problem(config);
    const int n = p.grid.size();
    const std::string dir = output_dir(config);

    json out;
    out["schema_version"] = 1;
    std::vector<std::string> warnings;
    if (config.mc_n_outer < 2) {
      warnings.push_back("stderr-unreliable: mc.n_outer < 2");
    }
    bool all_pass = true;

    // observation: configured, or a restricted prior draw
    Eigen::VectorXd y;
    if (config.obs_kind == ScenarioConfig::ObsKind::None) {
      ScenarioConfig sampled = config;
      sampled.obs_kind = ScenarioConfig::ObsKind::Sample;
      sampled.obs_seed = config.mc_seed;
      y = resolve_observation(sampled, p);
    } else {
      y = resolve_observation(config, p);
    }

    // disintegration equation over the functional library
    {
      const int last = n - 1;
      Eigen::VectorXd w(n);
      for (int i = 0; i < n; ++i) w[i] = ((i % 2 == 0) ? 1.0 : -1.0) / n;
      const std::vector<PathFunctional> functionals = {
          constant_functional(1.0), coordinate_functional(last),
          squared_coordinate_functional(last), tanh_linear_functional(w),
          supnorm_clipped_functional(2.0)};
      const std::vector<StatReport> reports = check_disintegration(
          p.cov, p.mask, functionals, config.mc_n_outer, config.mc_n_inner, config.mc_seed);
      json arr = json::array();
      for (const auto& r : reports) {
        arr.push_back(to_json(r));
        if (!r.pass) all_pass = false;
      }
      out["disintegration"] = arr;
    }

    // exact total-variance identity at the matrix level
    {
      const HilbertFactor factor = factorize(p.cov, p.mask, config.tol_cutoff);
      const Eigen::MatrixXd mean_map = conditional_mean_map(factor, p.cov, p.mask);
      const Eigen::MatrixXd cov = conditional_cov(factor, p.cov, p.mask);
      Eigen::MatrixXd css(p.mask.size(), p.mask.size());
      for (int a = 0; a < p.mask.size(); ++a)
        for (int b = 0; b < p.mask.size(); ++b)
          css(a, b) = p.cov.entries(p.mask.indices[a], p.mask.indices[b]);
      const Eigen::VectorXd explained = (mean_map * css * mean_map.transpose()).diagonal();
      const double worst =
          (p.cov.entries.diagonal() - cov.diagonal() - explained).cwiseAbs().maxCoeff();
      const double threshold =
          config.tol_identity * std::max(1.0, p.cov.entries.cwiseAbs().maxCoeff());
      const bool pass = worst <= threshold;
      if (!pass) all_pass = false;
      out["total_variance"] = json{{"value", worst}, {"threshold", threshold}, {"pass", pass}};
    }

    // weak continuity of the conditional law in the observation
    {
      const ContinuityReport rep = check_weak_continuity(
          p.cov, p.mask, project_onto_observable(p.cov, p.mask, y, config.tol_cutoff),
          {1e-1, 1e-2, 1e-3}, config.mc_seed, config.tol_identity);
      if (!rep.pass) all_pass = false;
      out["weak_continuity"] = json{{"scales", rep.scales},
                                    {"ratios", rep.ratios},
                                    {"bound", rep.bound},
                                    {"cov_identical", rep.cov_identical},
                                    {"pass", rep.pass}};
    }

    // independent conditioning oracle (small grids)
    if (n <= 64) {
      const ConditionalLaw law = condition(p.cov, p.mask, y, make_options(config));
      const OracleResult oracle = schur_condition(p.cov, p.mask, y);
      const double mean_diff = (law.mean - oracle.mean).cwiseAbs().maxCoeff();
      const double cov_diff = (law.cond_cov - oracle.cov).cwiseAbs().maxCoeff();
      const double scale = std::max(1.0, p.cov.entries.cwiseAbs().maxCoeff());
      const double mean_tol = config.tol_identity * (1.0 + y.cwiseAbs().maxCoeff());
      const double cov_tol = config.tol_identity * scale;
      const bool pass = mean_diff <= mean_tol && cov_diff <= cov_tol;
      if (!pass) all_pass = false;
      out["oracle"] = json{{"mean_diff", mean_diff},
                           {"mean_tol", mean_tol},
                           {"cov_diff", cov_diff},
                           {"cov_tol", cov_tol},
                           {"method", oracle.method_tag},
                           {"pass", pass}};
    } else {
      out["oracle"] = nullptr;
    }

    // rejection sampler oracle, when a probe is configured
    if (config.has_probe) {
      std::vector<int> probe_idx;
      for (double t : config.probe_points) {
        const int idx = p.grid.find(t);
        if (idx < 0 || !p.mask.contains(idx)) {
          fail("config-invalid",
               "config field 'probe.points': " + std::to_string(t) + " is not a subset node");
        }
        probe_idx.push_back(idx);
      }
      std::vector<int> eval_idx;
      for (double t : config.probe_eval_points) {
        const int idx = p.grid.find(t);
        if (idx < 0) {
          fail("config-invalid",
               "config field 'probe.eval_points': " + std::to_string(t) + " is not a grid node");
        }
        eval_idx.push_back(idx);
      }
      if (eval_idx.empty()) eval_idx.push_back(n - 1);
      const std::vector<StatReport> reports =
          rejection_oracle(p.cov, p.mask, y, config.probe_delta, probe_idx, eval_idx,
                           config.probe_n, config.mc_seed);
      json arr = json::array();
      for (const auto& r : reports) {
        arr.push_back(to_json(r));
        if (!r.pass) all_pass = false;
      }
      out["rejection"] = arr;
    } else {
      out["rejection"] = nullptr;
    }

    out["warnings"] = warnings;
    out["pass"] = all_pass;
    write_json(dir + "/verify.json", out);
    std::cout << "verify: " << (all_pass ? "all checks passed" : "statistical failure") << '\n';
    return all_pass ? kExitOk : kExitStatisticalFailure;
  });
}

int cmd_demo_minfinity(const ScenarioConfig& config, double ratio, int max_bumps) {
  return run_command([&]() {
    if (!(ratio > 1.0)) fail("config-invalid", "demo-minfinity: --ratio must exceed 1");
    if (max_bumps < 1) fail("config-invalid", "demo-minfinity: --max-bumps must be at least 1");
    Problem p;
    p.grid = build_grid(config.t_min, config.t_max, config.n);
    p.mask = mask_from_intervals(p.grid, config.subset);

    std::vector<int> range(max_bumps);
    for (int i = 0; i < max_bumps; ++i) range[i] = i + 1;
    const std::vector<DivergenceRow> rows =
        divergence_demo(ratio, range, p.grid, p.mask, config.mc_seed);

    const std::string dir = output_dir(config);
    json out;
    out["schema_version"] = 1;
    out["height_ratio"] = ratio;
    json arr = json::array();
    for (const auto& row : rows) {
      arr.push_back(json{{"n_bumps", row.n_bumps},
                         {"m_delta", row.m_delta},
                         {"y_norm", row.y_norm},
                         {"mean_norm", row.mean_norm}});
    }
    out["rows"] = arr;
    write_json(dir + "/divergence.json", out);

    std::ofstream csv(dir + "/divergence.csv");
    if (!csv) fail("io-error", "cannot open divergence.csv for writing");
    csv << "n_bumps,m_delta,y_norm,mean_norm\n";
    for (const auto& row : rows) {
      csv << row.n_bumps << ',' << format_double(row.m_delta) << ',' << format_double(row.y_norm)
          << ',' << format_double(row.mean_norm) << '\n';
    }

    std::cout << "demo-minfinity: m_delta grows to " << rows.back().m_delta
              << " while ||y|| shrinks to " << rows.back().y_norm << '\n';
    return kExitOk;
  });
}

}  // namespace gfcond
