// Command-line driver: figure1, run, fit, gen-network, gen-demand, gen-choices.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "modrel/commands.hpp"

namespace {

// Reads a config file when given so generator flags can default from it.
std::optional<modrel::ExperimentConfig> maybe_config(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return modrel::load_experiment_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Displayed-wait-time optimization for mobility-on-demand services"};
  app.require_subcommand(1);

  // figure1
  modrel::Figure1Args fig;
  auto* figure1 = app.add_subcommand("figure1", "Choice probability vs. displayed wait percentile");
  figure1->add_option("--sigma", fig.sigmas, "Log-scale standard deviations")->expected(1, -1);
  figure1->add_option("--mean", fig.mean, "Mean wait of the regular service (minutes)");
  figure1->add_option("--reliable-wait", fig.reliable_wait, "Wait of the reliable service (minutes)");
  figure1->add_option("--pct-low", fig.percentile_low, "Lowest percentile (integer)");
  figure1->add_option("--pct-high", fig.percentile_high, "Highest percentile (integer)");
  figure1->add_option("--pct-step", fig.percentile_step, "Percentile step (integer)");
  figure1->add_option("--out", fig.out_dir, "Output directory");

  // run
  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_out;
  auto* run = app.add_subcommand("run", "Simulate the fleet, then optimize the displayed wait");
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--seed", run_seed, "Seed for simulation and optimizer streams");
  run->add_option("--out", run_out, "Output directory");

  // fit
  std::string fit_data;
  std::string fit_out = ".";
  auto* fit = app.add_subcommand("fit", "Estimate the reliability logit from choice data");
  fit->add_option("dataset", fit_data, "Choice CSV")->required();
  fit->add_option("--out", fit_out, "Output directory");

  // gen-network
  std::string net_config;
  std::optional<std::size_t> side;
  std::optional<double> tmin, tmax;
  std::optional<std::uint64_t> net_seed;
  std::string net_out = ".";
  auto* gen_net = app.add_subcommand("gen-network", "Write a grid network as an edge list");
  gen_net->add_option("--config", net_config, "Take network.grid from this config");
  gen_net->add_option("--side", side, "Grid side length");
  gen_net->add_option("--time-min", tmin, "Smallest edge mean time (minutes)");
  gen_net->add_option("--time-max", tmax, "Largest edge mean time (minutes)");
  gen_net->add_option("--seed", net_seed, "Generator seed");
  gen_net->add_option("--out", net_out, "Output directory");

  // gen-demand
  std::string dem_config;
  std::optional<std::size_t> nodes, max_requests;
  std::optional<double> rate, duration;
  std::optional<std::uint64_t> dem_seed;
  std::string dem_out = ".";
  auto* gen_dem = app.add_subcommand("gen-demand", "Write Poisson demand as a demand CSV");
  gen_dem->add_option("--config", dem_config, "Take demand.poisson and the network from this config");
  gen_dem->add_option("--nodes", nodes, "Number of network nodes");
  gen_dem->add_option("--rate", rate, "Requests per minute");
  gen_dem->add_option("--duration", duration, "Horizon (minutes)");
  gen_dem->add_option("--max-requests", max_requests, "Stop after this many requests (0 = no cap)");
  gen_dem->add_option("--seed", dem_seed, "Generator seed");
  gen_dem->add_option("--out", dem_out, "Output directory");

  // gen-choices
  std::size_t n_choices = 1956;
  std::uint64_t choice_seed = 1;
  std::string choice_out = ".";
  modrel::ChoiceCoefficients coeffs;
  auto* gen_choices =
      app.add_subcommand("gen-choices", "Simulate choices over the experiment's attribute grid");
  gen_choices->add_option("--n", n_choices, "Number of observations");
  gen_choices->add_option("--seed", choice_seed, "Seed");
  gen_choices->add_option("--asc", coeffs.asc_regular, "Regular-service constant");
  gen_choices->add_option("--beta-log-wait", coeffs.beta_log_wait, "Log-wait coefficient");
  gen_choices->add_option("--beta-exp-reldelay", coeffs.beta_exp_reldelay,
                          "Relative-delay coefficient");
  gen_choices->add_option("--out", choice_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : modrel::kExitValidation;
  }

  if (*figure1) return modrel::cmd_figure1(fig);
  if (*run) return modrel::cmd_run(run_config, {run_seed, run_out});
  if (*fit) return modrel::cmd_fit(fit_data, fit_out);

  if (*gen_net) {
    modrel::GridSpec spec;
    const int rc = modrel::guarded(std::cerr, [&] {
      if (auto cfg = maybe_config(net_config); cfg && cfg->network.grid) spec = *cfg->network.grid;
    });
    if (rc != 0) return rc;
    if (side) spec.side = *side;
    if (tmin) spec.time_min = *tmin;
    if (tmax) spec.time_max = *tmax;
    if (net_seed) spec.seed = *net_seed;
    return modrel::cmd_gen_network(spec, net_out);
  }

  if (*gen_dem) {
    modrel::PoissonDemandSpec spec;
    std::size_t node_count = 0;
    const int rc = modrel::guarded(std::cerr, [&] {
      if (auto cfg = maybe_config(dem_config)) {
        if (cfg->demand.poisson) spec = *cfg->demand.poisson;
        node_count = modrel::build_network(cfg->network).node_count();
      }
      if (nodes) node_count = *nodes;
      if (node_count == 0) throw modrel::validation_error("nodes", "give --nodes or --config");
    });
    if (rc != 0) return rc;
    if (rate) spec.rate_per_minute = *rate;
    if (duration) spec.duration_minutes = *duration;
    if (max_requests) spec.max_requests = *max_requests;
    if (dem_seed) spec.seed = *dem_seed;
    return modrel::cmd_gen_demand(node_count, spec, dem_out);
  }

  return modrel::cmd_gen_choices(coeffs, n_choices, choice_seed, choice_out);
}
