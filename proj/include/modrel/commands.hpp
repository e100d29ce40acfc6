#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "modrel/choice.hpp"
#include "modrel/config.hpp"
#include "modrel/demand.hpp"
#include "modrel/dist.hpp"
#include "modrel/estimate.hpp"
#include "modrel/io.hpp"
#include "modrel/network.hpp"
#include "modrel/optimize.hpp"
#include "modrel/sim.hpp"

namespace modrel {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Runs `body`, reporting exceptions on `err` and mapping them to exit codes.
inline int guarded(std::ostream& err, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const estimation_error& e) {
    err << "estimation error: " << e.what() << "\n  log-likelihood trace:";
    for (double ll : e.trace()) err << ' ' << ll;
    err << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw domain_error(path + ": cannot open file");
  return in;
}

struct Figure1Args {
  std::vector<double> sigmas{0.4, 0.7, 1.0};
  double mean = 1.5;
  double reliable_wait = 2.7;
  int percentile_low = 1;
  int percentile_high = 99;
  int percentile_step = 1;
  ChoiceCoefficients coefficients;
  std::string out_dir = ".";
};

inline json to_json(const Figure1Args& a) {
  return {{"command", "figure1"},
          {"sigmas", a.sigmas},
          {"mean", a.mean},
          {"reliable_wait", a.reliable_wait},
          {"percentile_range", json::array({a.percentile_low, a.percentile_high})},
          {"percentile_step", a.percentile_step},
          {"coefficients", to_json(a.coefficients)}};
}

/// Probability-vs-percentile rows for every sigma, as CSV text.
inline std::string figure1_csv(const Figure1Args& a) {
  if (a.sigmas.empty()) throw validation_error("sigma", "at least one value required");
  if (a.percentile_low < 1 || a.percentile_high > 99 || a.percentile_low > a.percentile_high ||
      a.percentile_step < 1)
    throw validation_error("percentiles", "require 1 <= low <= high <= 99 and step >= 1");
  if (!(a.mean > 0.0)) throw validation_error("mean", "must be positive");
  if (!(a.reliable_wait > 0.0)) throw validation_error("reliable_wait", "must be positive");
  std::vector<double> grid;
  for (int p = a.percentile_low; p <= a.percentile_high; p += a.percentile_step)
    grid.push_back(p / 100.0);
  std::ostringstream out;
  out << "# config: " << to_json(a).dump() << '\n';
  out << "sigma,percentile,displayed_wait,avg_delay,prob_regular\n";
  for (double sigma : a.sigmas) {
    if (!(sigma > 0.0)) throw validation_error("sigma", "must be positive");
    const auto dist = lognormal_from_mean(a.mean, sigma);
    for (const auto& row : prob_curve(a.coefficients, a.reliable_wait, dist, grid))
      out << format_real(sigma) << ',' << format_real(row.percentile) << ','
          << format_real(row.displayed_wait) << ',' << format_real(row.avg_delay) << ','
          << format_real(row.probability) << '\n';
  }
  return out.str();
}

inline int cmd_figure1(const Figure1Args& args, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    write_file(std::filesystem::path(args.out_dir) / "figure1.csv", figure1_csv(args));
  });
}

inline Network build_network(const NetworkSource& src) {
  if (src.grid) {
    const auto& g = *src.grid;
    return grid_network(g.side, g.time_min, g.time_max, g.seed);
  }
  auto in = open_input(*src.edge_list);
  auto net = load_edge_list(in, *src.edge_list);
  if (src.coordinates) {
    auto cin = open_input(*src.coordinates);
    net.set_coordinates(load_node_coordinates(cin, net.node_count(), *src.coordinates));
  }
  return net;
}

inline std::vector<TripRequest> build_demand(const DemandSource& src, const Network& net) {
  if (src.poisson) return poisson_demand(net.node_count(), *src.poisson);
  if (src.csv) {
    auto in = open_input(*src.csv);
    return load_demand_csv(in, *src.csv);
  }
  if (net.coordinates().empty())
    throw validation_error("demand.taxi", "network has no node coordinates");
  auto in = open_input(*src.taxi);
  return load_taxi_demand(in, net.coordinates(), nullptr, *src.taxi);
}

struct ExperimentResult {
  std::vector<Step1Output> step1;
  std::vector<AcceptanceReport> reports;
};

/// Both steps for every configured sigma range. The range drives the
/// realized waits of the simulation and the sigma draws of the optimizer.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Network& net,
                                       std::span<const TripRequest> demand) {
  if (demand.empty()) throw validation_error("demand", "no trip requests");
  ExperimentResult result;
  for (const auto& range : cfg.sigma_ranges) {
    auto sim = cfg.sim_config;
    sim.sigma_range = range;
    auto opt = cfg.optimizer_config;
    opt.sigma_range = range;
    result.step1.push_back(run_step1(net, demand, cfg.coefficients, sim));
    if (result.step1.back().pmfs.empty())
      throw std::runtime_error("no request was accepted; nothing to optimize");
    result.reports.push_back(acceptance_rates(result.step1.back(), opt, cfg.coefficients));
  }
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto net = build_network(cfg.network);
  const auto demand = build_demand(cfg.demand, net);
  return run_experiment(cfg, net, demand);
}

struct RunOverrides {
  std::optional<std::uint64_t> seed;  // replaces sim and optimizer seeds
  std::optional<std::string> out_dir;
};

inline void apply_overrides(ExperimentConfig& cfg, const RunOverrides& o) {
  if (o.seed) {
    cfg.sim_config.seed = *o.seed;
    cfg.optimizer_config.seed = *o.seed;
  }
  if (o.out_dir) cfg.output_dir = *o.out_dir;
}

/// Writes step1_<k>.json per sigma range, report.json and report.csv.
inline void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result) {
  const std::filesystem::path dir(cfg.output_dir);
  const auto echo = to_json(cfg);
  for (std::size_t k = 0; k < result.step1.size(); ++k)
    write_file(dir / ("step1_" + std::to_string(k) + ".json"),
               to_json(result.step1[k], echo).dump(1) + "\n");
  json reports = json::array();
  for (const auto& r : result.reports) reports.push_back(to_json(r));
  write_file(dir / "report.json", json{{"config", echo}, {"reports", reports}}.dump(1) + "\n");
  std::ostringstream csv;
  write_report_csv(csv, result.reports, echo);
  write_file(dir / "report.csv", csv.str());
}

inline int cmd_run(const std::string& config_path, const RunOverrides& overrides,
                   std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    auto cfg = load_experiment_config(config_path);
    apply_overrides(cfg, overrides);
    const auto result = run_experiment(cfg);
    write_experiment(cfg, result);
    out << "sigma_range        rate_ewt  rate_opt  gain     mean_pct\n";
    for (const auto& r : result.reports)
      out << '[' << r.sigma_range.low << ", " << r.sigma_range.high << "]\t" << r.baseline_rate_ewt
          << '\t' << r.optimized_rate << '\t' << r.gain << '\t' << r.mean_optimal_percentile << '\n';
  });
}

inline int cmd_fit(const std::string& dataset, const std::string& out_dir,
                   std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    auto in = open_input(dataset);
    const auto data = read_choices_csv(in, dataset);
    const auto fit = fit_binary_logit(data);
    auto j = to_json(fit);
    json doc = {{"config", {{"command", "fit"}, {"dataset", dataset}}}};
    doc.update(j);
    write_file(std::filesystem::path(out_dir) / "fit.json", doc.dump(1) + "\n");
    const auto& c = fit.coefficients;
    out << "asc_regular        " << c.asc_regular << " (" << fit.std_errors[0] << ")\n"
        << "beta_log_wait      " << c.beta_log_wait << " (" << fit.std_errors[1] << ")\n"
        << "beta_exp_reldelay  " << c.beta_exp_reldelay << " (" << fit.std_errors[2] << ")\n"
        << "loglik " << fit.statistics.loglik << "  bic " << fit.statistics.bic << "  n "
        << fit.statistics.n_obs << '\n';
  });
}

inline int cmd_gen_network(const GridSpec& spec, const std::string& out_dir,
                           std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto net = grid_network(spec.side, spec.time_min, spec.time_max, spec.seed);
    const json echo = {{"command", "gen-network"},
                       {"grid",
                        {{"side", spec.side},
                         {"time_min", spec.time_min},
                         {"time_max", spec.time_max},
                         {"seed", spec.seed}}}};
    std::ostringstream edges;
    edges << "# config: " << echo.dump() << '\n';
    write_edge_list(edges, net);
    std::ostringstream nodes;
    nodes << "# config: " << echo.dump() << '\n' << "node,x,y\n";
    for (std::size_t i = 0; i < net.node_count(); ++i)
      nodes << i << ',' << format_real(net.coordinates()[i].x) << ','
            << format_real(net.coordinates()[i].y) << '\n';
    const std::filesystem::path dir(out_dir);
    write_file(dir / "network.csv", edges.str());
    write_file(dir / "nodes.csv", nodes.str());
  });
}

inline int cmd_gen_demand(std::size_t node_count, const PoissonDemandSpec& spec,
                          const std::string& out_dir, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto demand = poisson_demand(node_count, spec);
    const json echo = {{"command", "gen-demand"},
                       {"nodes", node_count},
                       {"poisson",
                        {{"rate_per_minute", spec.rate_per_minute},
                         {"duration_minutes", spec.duration_minutes},
                         {"max_requests", spec.max_requests},
                         {"seed", spec.seed}}}};
    std::ostringstream csv;
    csv << "# config: " << echo.dump() << '\n';
    write_demand_csv(csv, demand);
    write_file(std::filesystem::path(out_dir) / "demand.csv", csv.str());
  });
}

inline int cmd_gen_choices(const ChoiceCoefficients& coeffs, std::size_t n, std::uint64_t seed,
                           const std::string& out_dir, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto design = experiment_design();
    const auto data = simulate_choices(coeffs, design, n, seed);
    const json echo = {{"command", "gen-choices"},
                       {"coefficients", to_json(coeffs)},
                       {"n", n},
                       {"seed", seed}};
    std::ostringstream csv;
    csv << "# config: " << echo.dump() << '\n';
    write_choices_csv(csv, data);
    write_file(std::filesystem::path(out_dir) / "choices.csv", csv.str());
  });
}

}  // namespace modrel
