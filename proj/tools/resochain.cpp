#include <CLI11.hpp>
#include <iostream>

#include "resochain/errors.hpp"
#include "resochain/experiment/commands.hpp"

namespace rx = resochain::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear resonator chains: simulation, dispersion and optimization under uncertainty"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed = 0;
  double scale = 1.0;
  std::string out, state;
  bool quiet = false;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "Time-domain response of the configured chain"},
      {"dispersion", "Amplitude-dependent dispersion curves and band gaps"},
      {"optimize", "Surrogate-based optimization under uncertainty"},
      {"validate", "Compare the surrogate estimate at the optimum with the actual model"},
      {"robustness", "Response distributions around the optimum vs. uniform designs"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Override optimizer.seed");
    sub->add_option("--scale", scale, "Shrink chain, time window and budgets by this factor")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--out", out, "Output directory (overrides output_dir)");
    if (name == "validate" || name == "robustness") {
      sub->add_option("--state", state, "Optimization result (default <out>/result.json)");
    }
    sub->add_flag("-q,--quiet", quiet, "No progress log");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    rx::RunOptions opts;
    if (app.get_subcommands().front()->count("--seed")) opts.seed = seed;
    opts.scale = scale;
    if (!out.empty()) opts.out = out;
    if (!state.empty()) opts.state = state;
    if (!quiet) opts.log = &std::cerr;
    const std::string cmd = app.get_subcommands().front()->get_name();
    rx::ExperimentConfig cfg = rx::load_config(config_path);
    rx::RunReport report;
    if (cmd == "simulate") report = rx::cmd_simulate(cfg, opts);
    else if (cmd == "dispersion") report = rx::cmd_dispersion(cfg, opts);
    else if (cmd == "optimize") report = rx::cmd_optimize(cfg, opts);
    else if (cmd == "validate") report = rx::cmd_validate(cfg, opts);
    else report = rx::cmd_robustness(cfg, opts);
    std::cout << report.summary.dump(2) << "\n";
    return 0;
  } catch (const resochain::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const resochain::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
