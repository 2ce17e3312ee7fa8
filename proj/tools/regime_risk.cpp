// regime-risk: command-line front end for the regime-switching entropic
// risk library.
//
//   regime-risk calibrate <prices.csv> [--dt <years>] [--reject-unit-root] [--out <dir>]
//   regime-risk simulate|risk|sweep|yield-sweep --config <file>
//               [--seed <u64>] [--paths <n>] [--threads <n>] [--mc] [--out <dir>]

#include "regime_risk/app/commands.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace regime_risk;
using namespace regime_risk::app;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  bool mc = false;
};

void add_common(CLI::App* sub, Overrides& o, bool config_required) {
  auto* c = sub->add_option("--config", o.config, "Run configuration (JSON)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Random seed (overrides mc.seed)");
  sub->add_option("--paths", o.paths, "Monte-Carlo paths (overrides mc.n_paths)")->check(CLI::Range(2ul, ~0ul));
  sub->add_option("--threads", o.threads, "Worker threads for Monte Carlo (0 = all cores)");
  sub->add_option("--out", o.out, "Output directory (overrides output.dir)");
}

RunConfig load(const Overrides& o) {
  auto cfg = load_config(o.config);
  if (o.seed) cfg.mc.seed = *o.seed;
  if (o.paths) cfg.mc.n_paths = *o.paths;
  if (o.threads) cfg.mc.threads = *o.threads;
  if (o.out) cfg.output_dir = *o.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime-switching entropic risk for commodity claims"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Overrides o;
  std::string csv;
  std::optional<double> dt;

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit OU parameters to a date,price CSV");
  calibrate_cmd->add_option("csv", csv, "Price history (date,price)");
  calibrate_cmd->add_option("--dt", dt, "Years between observations (default 1/252)");
  bool strict = false;
  calibrate_cmd->add_flag("--reject-unit-root", strict,
                          "Fail unless the Dickey-Fuller statistic rejects a random walk at 5%");
  add_common(calibrate_cmd, o, false);

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate spot, regime and yield paths");
  add_common(simulate_cmd, o, true);

  auto* risk_cmd = app.add_subcommand("risk", "Per-regime entropic risk of the configured claim");
  add_common(risk_cmd, o, true);
  risk_cmd->add_flag("--mc", o.mc, "Cross-check against Monte Carlo");

  auto* sweep_cmd = app.add_subcommand("sweep", "Risk over the gamma x horizon grid");
  add_common(sweep_cmd, o, true);
  sweep_cmd->add_flag("--mc", o.mc, "Cross-check every cell against Monte Carlo");

  auto* yield_cmd = app.add_subcommand("yield-sweep", "Future risk over time per convenience-yield level");
  add_common(yield_cmd, o, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate_cmd->parsed()) {
      fs::path out = o.out ? fs::path(*o.out) : fs::path("out");
      double step = dt.value_or(1.0 / kTradingDaysPerYear);
      fs::path input = csv;
      if (input.empty()) {
        if (o.config.empty()) throw ConfigError("calibrate needs a CSV path or --config with ou.calibrate_from");
        const auto root = nlohmann::json::parse(app::detail::read_file(o.config), nullptr, true, true);
        const auto& ou = root.at("ou");
        if (!ou.contains("calibrate_from")) throw ConfigError("config has no ou.calibrate_from");
        input = app::detail::resolve(fs::path(o.config).parent_path(), ou.at("calibrate_from").get<std::string>());
        if (!dt && ou.contains("dt")) step = ou.at("dt").get<double>();
        if (!o.out && root.contains("output") && root.at("output").contains("dir"))
          out = root.at("output").at("dir").get<std::string>();
      }
      cmd_calibrate(input, step, out, std::cout, CalibrationOptions{strict});
    } else if (simulate_cmd->parsed()) {
      cmd_simulate(load(o), std::cout);
    } else if (risk_cmd->parsed()) {
      cmd_risk(load(o), o.mc, std::cout);
    } else if (sweep_cmd->parsed()) {
      const auto table = cmd_sweep(load(o), o.mc, std::cout);
      if (table.flagged > 0) return 3;
    } else if (yield_cmd->parsed()) {
      cmd_yield_sweep(load(o), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
