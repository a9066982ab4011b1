#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "combcast/sim.hpp"

namespace {

struct Cli {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool credit_streams = false;
  int threads = 1;
  double spf_uni = 3.0;
  double spf_bc = 1.0;
};

void add_common(CLI::App* sub, Cli& cli) {
  sub->add_option("--config", cli.config_path, "Config file (key = value)")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", cli.seed, "Override the master seed");
  sub->add_option("--out", cli.out_dir, "Output directory");
  sub->add_flag("--credit-streams", cli.credit_streams,
                "Credit all concurrent unicast streams in the delivery-time "
                "model (multiplies the unicast efficiency by n_bs)");
}

void add_spf(CLI::App* sub, Cli& cli) {
  sub->add_option("--spf-uni", cli.spf_uni,
                  "Unicast spectral efficiency in b/s/Hz")
      ->check(CLI::PositiveNumber);
  sub->add_option("--spf-bc", cli.spf_bc,
                  "Broadcast spectral efficiency in b/s/Hz")
      ->check(CLI::PositiveNumber);
}

combcast::sim::SimConfig load_config(const CLI::App* sub, const Cli& cli) {
  combcast::sim::SimConfig config;
  if (!cli.config_path.empty()) {
    config = combcast::sim::parse_config(cli.config_path);
  }
  if (sub->count("--seed") > 0) config.seed = cli.seed;
  if (!cli.out_dir.empty()) config.out_dir = cli.out_dir;
  config.credit_streams = cli.credit_streams;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Coordinated-multipoint unicast/broadcast delivery-time simulator"};
  app.require_subcommand(1);
  Cli cli;

  CLI::App* simulate = app.add_subcommand(
      "simulate",
      "Run the Monte Carlo pipeline: estimate spectral efficiencies, then "
      "derive thresholds, cost curves, and the demand profile");
  add_common(simulate, cli);
  simulate->add_option("--threads", cli.threads, "Worker threads")
      ->check(CLI::Range(1, 256));

  CLI::App* threshold = app.add_subcommand(
      "threshold",
      "Threshold analysis from supplied spectral efficiencies; writes "
      "run_report.txt, cost_curves.csv, and demand_profile.csv");
  add_common(threshold, cli);
  add_spf(threshold, cli);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Write the delivery-time curves (cost_curves.csv) only");
  add_common(sweep, cli);
  add_spf(sweep, cli);

  CLI::App* demand = app.add_subcommand(
      "demand",
      "Write the per-rank demand split (demand_profile.csv) only");
  add_common(demand, cli);
  add_spf(demand, cli);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      combcast::sim::run_simulate(load_config(simulate, cli), cli.threads);
    } else if (threshold->parsed()) {
      combcast::sim::run_threshold(load_config(threshold, cli), cli.spf_uni,
                                   cli.spf_bc);
    } else if (sweep->parsed()) {
      combcast::sim::run_sweep(load_config(sweep, cli), cli.spf_uni,
                               cli.spf_bc);
    } else {
      combcast::sim::run_demand(load_config(demand, cli), cli.spf_uni,
                                cli.spf_bc);
    }
  } catch (const combcast::sim::SolverBudgetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const combcast::sim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
