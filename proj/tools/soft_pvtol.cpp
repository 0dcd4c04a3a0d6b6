// Batch front-end: simulate scenarios, run the verification suites, dump
// kernel tables.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "soft_pvtol/cli.hpp"

namespace {

const std::map<std::string, soft_pvtol::KernelMode> kModes = {
    {"CONSTANT_LIMIT", soft_pvtol::KernelMode::kConstantLimit},
    {"SERIES", soft_pvtol::KernelMode::kSeries},
};

}  // namespace

int main(int argc, char** argv) {
  namespace cli = soft_pvtol::cli;
  CLI::App app{"Soft-PVTOL dynamics, control and allocation toolkit"};
  app.require_subcommand(1);

  cli::SimulateOptions sim;
  soft_pvtol::KernelMode sim_mode{};
  auto* simulate = app.add_subcommand("simulate", "run a closed-loop scenario");
  simulate->add_option("--config", sim.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  simulate->add_option("--output", sim.output_path,
                       "log CSV path (summary goes to <output>.summary.txt)");
  auto* sim_mode_opt =
      simulate->add_option("--mode", sim_mode, "kernel mode near q = 0")
          ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
  simulate->add_flag("--ideal-wrench", sim.ideal_wrench,
                     "apply the controller's tau directly");
  unsigned sim_seed = 0;
  simulate->add_option("--seed", sim_seed,
                       "accepted for symmetry; simulations are deterministic");

  cli::VerifyCommandOptions ver;
  soft_pvtol::KernelMode ver_mode{};
  auto* verify = app.add_subcommand("verify", "run the invariant suites");
  verify->add_option("--seed", ver.seed, "random seed")->capture_default_str();
  verify->add_option("--config", ver.config_path,
                     "take params, gains and kernel settings from a config")
      ->check(CLI::ExistingFile);
  auto* ver_mode_opt =
      verify->add_option("--mode", ver_mode, "kernel mode near q = 0")
          ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));

  cli::KernelTableOptions tab;
  std::string table_out, limits_out;
  auto* kernels = app.add_subcommand("kernels", "print kernel values as CSV");
  kernels->add_option("--q-min", tab.q_min)->capture_default_str();
  kernels->add_option("--q-max", tab.q_max)->capture_default_str();
  kernels->add_option("--samples", tab.samples)->capture_default_str();
  kernels->add_option("--delta", tab.delta, "band half-width")
      ->capture_default_str();
  kernels->add_flag("--approx", tab.with_approx,
                    "append a cos(q/2) column for comparison with SINC");
  kernels->add_option("--output", table_out, "sample CSV path (default stdout)");
  kernels->add_option("--limits", limits_out,
                      "limit table path (default: after the samples)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }

  if (simulate->parsed()) {
    if (*sim_mode_opt) sim.mode = sim_mode;
    return cli::simulate(sim, std::cout, std::cerr);
  }
  if (verify->parsed()) {
    if (*ver_mode_opt) ver.mode = ver_mode;
    return cli::verify(ver, std::cout, std::cerr);
  }
  std::ofstream table_file, limits_file;
  std::ostream* out = &std::cout;
  if (!table_out.empty()) {
    table_file.open(table_out, std::ios::binary);
    if (!table_file) {
      std::cerr << "cannot write " << table_out << '\n';
      return cli::kConfigError;
    }
    out = &table_file;
  }
  std::ostream* limits = nullptr;
  if (!limits_out.empty()) {
    limits_file.open(limits_out, std::ios::binary);
    if (!limits_file) {
      std::cerr << "cannot write " << limits_out << '\n';
      return cli::kConfigError;
    }
    limits = &limits_file;
  }
  return cli::kernels(tab, *out, std::cerr, limits);
}
