#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gfcond/errors.hpp"
#include "gfcond/scenario.hpp"

namespace {

gfcond::ScenarioConfig load_or_exit(const std::string& path, const std::string& out_override) {
  gfcond::ScenarioConfig config = gfcond::load_scenario(path);
  config.outputs_override = out_override;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condition Gaussian random fields on observations over sub-regions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  app.add_option("--out", out_override, "override the output directory (also: GFCOND_OUT)");

  auto* cmd_condition = app.add_subcommand("condition", "conditional mean, covariance, and report");
  cmd_condition->add_option("config", config_path, "scenario JSON file")->required();

  auto* cmd_m = app.add_subcommand("m", "sup-ratio criterion and operator-norm bounds");
  cmd_m->add_option("config", config_path, "scenario JSON file")->required();

  auto* cmd_sample = app.add_subcommand("sample", "draw prior or conditional paths");
  std::string law = "prior";
  int n_paths = 10;
  std::uint64_t seed = 1;
  bool seed_given = false;
  cmd_sample->add_option("config", config_path, "scenario JSON file")->required();
  cmd_sample->add_option("--law", law, "prior or conditional")->check(CLI::IsMember({"prior", "conditional"}));
  cmd_sample->add_option("-n,--num", n_paths, "number of paths");
  cmd_sample->add_option("--seed", seed, "sampling seed (defaults to mc.seed)")
      ->each([&seed_given](const std::string&) { seed_given = true; });

  auto* cmd_verify = app.add_subcommand("verify", "statistical and oracle verification");
  cmd_verify->add_option("config", config_path, "scenario JSON file")->required();

  auto* cmd_demo = app.add_subcommand("demo-minfinity", "criterion divergence along the bumps family");
  double ratio = 2.0;
  int max_bumps = 6;
  cmd_demo->add_option("config", config_path, "scenario JSON file")->required();
  cmd_demo->add_option("--ratio", ratio, "bump height ratio (> 1)");
  cmd_demo->add_option("--max-bumps", max_bumps, "largest bump count");

  CLI11_PARSE(app, argc, argv);

  try {
    const gfcond::ScenarioConfig config = load_or_exit(config_path, out_override);
    if (cmd_condition->parsed()) return gfcond::cmd_condition(config);
    if (cmd_m->parsed()) return gfcond::cmd_m(config);
    if (cmd_sample->parsed()) {
      return gfcond::cmd_sample(config, law, n_paths, seed_given ? seed : config.mc_seed);
    }
    if (cmd_verify->parsed()) return gfcond::cmd_verify(config);
    if (cmd_demo->parsed()) return gfcond::cmd_demo_minfinity(config, ratio, max_bumps);
  } catch (const gfcond::Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
    return gfcond::kExitConfigInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gfcond::kExitFailure;
  }
  return gfcond::kExitFailure;
}
