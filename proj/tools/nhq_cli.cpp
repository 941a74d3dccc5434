// nhq: simulate non-Hermitian two-level dynamics and correlation functions.
//
//   nhq run       --model ed --a2 1 --init x --tmax 5          wide CSV on stdout (or --out)
//   nhq verify    --model dph --gamma 1 --init z              numeric vs closed form, exit 0/1
//   nhq sweep     --model ed --init z --param nu --values 0,0.5,1
//   nhq asymptote --model pd --init z --nu 1                   long-time limits
//
// Exit codes: 0 success, 1 verification failure, 2 runtime singularity, 3 config error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nhq/config.hpp"
#include "nhq/runner.hpp"

namespace {

struct Overrides {
  std::string config_path;
  // flag name -> value given on the command line
  std::map<std::string, std::optional<std::string>> values;
};

const std::vector<std::pair<std::string, std::string>> kFlagKeys = {
    {"model", "scenario.model"},       {"delta", "scenario.delta"},    {"a2", "scenario.a2"},
    {"gamma", "scenario.gamma"},       {"nu", "scenario.nu"},          {"init", "scenario.init"},
    {"dim", "scenario.dim"},           {"h-plus", "scenario.h_plus"},  {"gamma-op", "scenario.gamma_op"},
    {"rho0", "scenario.rho0"},         {"tmax", "time.tmax"},          {"stride", "time.stride"},
    {"method", "propagation.method"},  {"dt", "propagation.dt"},       {"averages", "outputs.averages"},
    {"pairs", "outputs.pairs"},        {"kind", "outputs.kind"},       {"delta-c", "outputs.delta_c"},
    {"ratio", "outputs.ratio"},        {"rtol", "verify.rtol"},        {"out", "outputs.out"},
};

void add_common(CLI::App* sub, Overrides& ov) {
  sub->add_option("-c,--config", ov.config_path, "INI config file ([scenario] [time] [propagation] [outputs] [verify])");
  for (const auto& [flag, key] : kFlagKeys) {
    auto& slot = ov.values[flag];
    sub->add_option_function<std::string>(
        "--" + flag, [&slot](const std::string& v) { slot = v; }, "overrides " + key);
  }
}

nhq::RunConfig build_config(const Overrides& ov) {
  nhq::RunConfig cfg;
  if (!ov.config_path.empty()) nhq::load_config_file(cfg, ov.config_path);
  // kFlagKeys lists model first so that "raw" scenarios pick up their matrix keys
  for (const auto& [flag, key] : kFlagKeys) {
    const auto it = ov.values.find(flag);
    if (it != ov.values.end() && it->second) nhq::apply_setting(cfg, key, *it->second, "--" + flag);
  }
  return cfg;
}

int emit(const nhq::CommandResult& r, const std::string& out_path) {
  if (!r.diagnostics.empty()) std::cerr << r.diagnostics;
  if (r.exit_code == nhq::kExitConfig || r.exit_code == nhq::kExitSingularity) return r.exit_code;
  if (out_path.empty()) {
    std::cout << r.output;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) {
      std::cerr << "config error: cannot write '" << out_path << "'\n";
      return nhq::kExitConfig;
    }
    f << r.output;
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-Hermitian density-matrix dynamics and two-time correlation functions"};
  app.require_subcommand(1);

  Overrides run_ov;
  Overrides verify_ov;
  Overrides sweep_ov;
  Overrides asym_ov;
  auto* run_cmd = app.add_subcommand("run", "simulate and write the requested series as CSV");
  auto* verify_cmd = app.add_subcommand("verify", "compare numerics with the closed-form solutions");
  auto* sweep_cmd = app.add_subcommand("sweep", "stacked runs over one parameter");
  auto* asym_cmd = app.add_subcommand("asymptote", "print the long-time limit values");
  add_common(run_cmd, run_ov);
  add_common(verify_cmd, verify_ov);
  add_common(sweep_cmd, sweep_ov);
  add_common(asym_cmd, asym_ov);

  std::string sweep_param;
  std::vector<double> sweep_values;
  sweep_cmd->add_option("--param", sweep_param, "nu, a2, gamma or delta")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nhq::kExitConfig;
  }

  auto guarded = [](const Overrides& ov, auto&& command) {
    try {
      const nhq::RunConfig cfg = build_config(ov);
      return emit(command(cfg), cfg.out);
    } catch (const nhq::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return static_cast<int>(nhq::kExitConfig);
    } catch (const nhq::InputError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return static_cast<int>(nhq::kExitConfig);
    }
  };

  if (*run_cmd) return guarded(run_ov, [](const nhq::RunConfig& c) { return nhq::run(c); });
  if (*verify_cmd) return guarded(verify_ov, [](const nhq::RunConfig& c) { return nhq::verify(c); });
  if (*sweep_cmd)
    return guarded(sweep_ov, [&](const nhq::RunConfig& c) { return nhq::sweep(c, sweep_param, sweep_values); });
  return guarded(asym_ov, [](const nhq::RunConfig& c) { return nhq::asymptote(c); });
}
