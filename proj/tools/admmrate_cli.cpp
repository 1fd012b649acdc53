// Command-line front end: rate, sweep, run, optimal-rho, gen-topology.

#include "admmrate/error.hpp"
#include "admmrate/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kValidation = 2, kNumerical = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed ADMM simulator and exact convergence-rate analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "Output path for the main artifact");
    sub->add_option("--seed", seed, "Override the config's top-level seed");
  };

  auto* rate = app.add_subcommand("rate", "Exact rate alpha at the configured rho");
  auto* sweep = app.add_subcommand("sweep", "Rate over a grid of rho values (CSV)");
  auto* run = app.add_subcommand("run", "Simulate ADMM and fit the empirical rate");
  auto* optimal = app.add_subcommand("optimal-rho", "Minimize alpha over rho");
  auto* gen = app.add_subcommand("gen-topology", "Write the configured topology as JSON");
  for (auto* sub : {rate, sweep, run, optimal, gen}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  using admmrate::ExperimentConfig;
  try {
    ExperimentConfig config = admmrate::load_config(config_path);
    for (auto* sub : {rate, sweep, run, optimal, gen}) {
      if (sub->parsed() && sub->count("--seed")) admmrate::override_seed(config, seed);
    }
    std::optional<std::filesystem::path> out;
    if (!out_path.empty()) out = out_path;

    if (rate->parsed()) {
      admmrate::cmd_rate(config, out, std::cout);
    } else if (sweep->parsed()) {
      admmrate::cmd_sweep(config, out, std::cout);
    } else if (run->parsed()) {
      admmrate::cmd_run(config, out, std::cout);
    } else if (optimal->parsed()) {
      admmrate::cmd_optimal_rho(config, out, std::cout);
    } else if (gen->parsed()) {
      admmrate::cmd_gen_topology(config, out, std::cout);
    }
  } catch (const admmrate::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const admmrate::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
