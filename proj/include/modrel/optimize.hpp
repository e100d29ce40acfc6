#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "modrel/choice.hpp"
#include "modrel/dist.hpp"
#include "modrel/errors.hpp"
#include "modrel/rng.hpp"
#include "modrel/sim.hpp"

namespace modrel {

struct OptimizerConfig {
  int percentile_low = 20;
  int percentile_high = 80;
  int percentile_step = 1;
  SigmaRange sigma_range{0.1, 1.0};
  double reliable_wait = 2.0;
  bool include_mean_percentile = true;
  std::uint64_t seed = 1;

  void validate() const {
    if (percentile_low < 1 || percentile_high > 99 || percentile_low >= percentile_high)
      throw validation_error("optimizer_config.percentile_range", "require 1 <= low < high <= 99");
    if (percentile_step < 1)
      throw validation_error("optimizer_config.percentile_step", "must be at least 1");
    sigma_range.validate("optimizer_config.sigma_range");
    if (!(reliable_wait > 0.0))
      throw validation_error("optimizer_config.reliable_wait", "must be positive");
  }
};

struct DisplayCandidate {
  double percentile;  // fraction
  double displayed_wait;
};

/// Candidate displays in increasing percentile order. With
/// include_mean_percentile the mean itself (percentile Phi(sigma/2)) is
/// added, displayed as exactly dist.mean().
inline std::vector<DisplayCandidate> candidate_displays(const LognormalDist& dist,
                                                        const OptimizerConfig& cfg) {
  std::vector<DisplayCandidate> out;
  for (int p = cfg.percentile_low; p <= cfg.percentile_high; p += cfg.percentile_step) {
    const double frac = p / 100.0;
    out.push_back({frac, quantile(dist, frac)});
  }
  if (cfg.include_mean_percentile) {
    const DisplayCandidate mean{percentile_of_mean(dist), dist.mean()};
    auto pos = std::lower_bound(
        out.begin(), out.end(), mean,
        [](const DisplayCandidate& a, const DisplayCandidate& b) { return a.percentile < b.percentile; });
    out.insert(pos, mean);
  }
  return out;
}

struct DisplayOptimum {
  double percentile = 0.0;
  double displayed_wait = 0.0;
  double avg_delay = 0.0;
  double probability = 0.0;
};

/// Enumerates candidate percentiles of the wait distribution and keeps the
/// one with the highest acceptance probability (lowest percentile on ties).
inline DisplayOptimum optimal_display(const LognormalDist& dist, const OptimizerConfig& cfg,
                                      const ChoiceCoefficients& coeffs) {
  const ServiceOffer reliable{cfg.reliable_wait, 0.0};
  DisplayOptimum best;
  bool first = true;
  for (const auto& c : candidate_displays(dist, cfg)) {
    const double delay = expected_delay(dist, c.displayed_wait);
    const double p = prob_regular(coeffs, reliable, {c.displayed_wait, delay});
    if (first || p > best.probability) {
      best = {c.percentile, c.displayed_wait, delay, p};
      first = false;
    }
  }
  return best;
}

// Acceptance probability when the expected wait is displayed.
inline double ewt_probability(const LognormalDist& dist, double reliable_wait,
                              const ChoiceCoefficients& coeffs) {
  const double mean = dist.mean();
  return prob_regular(coeffs, {reliable_wait, 0.0}, {mean, expected_delay(dist, mean)});
}

struct NodeOptimum {
  NodeId node = 0;
  std::int64_t bin = 0;
  double mass = 0.0;
  double mean_wait = 0.0;
  double sigma = 0.0;
  double optimal_percentile = 0.0;
  double optimal_display = 0.0;
  double probability = 0.0;
  double ewt_probability = 0.0;
};

struct NodeExpectation {
  NodeId node = 0;
  double expected_probability = 0.0;
  double expected_probability_ewt = 0.0;
  double demand_weight = 0.0;
  double mean_optimal_percentile = 0.0;
  std::vector<NodeOptimum> bins;
};

// Sigma for one (node, bin) cell; keyed so every cell is reproducible on its own.
inline double cell_sigma(const OptimizerConfig& cfg, NodeId node, std::int64_t bin) {
  RandomStream rng(
      derive_seed(cfg.seed, {static_cast<std::uint64_t>(node), static_cast<std::uint64_t>(bin)}));
  return cfg.sigma_range.draw(rng);
}

/// Expected acceptance probability at one origin under the optimal display:
/// the pmf-weighted sum of per-bin optima, with the bin midpoint as the mean
/// wait.
inline NodeExpectation expected_prob_node(const WaitTimePmf& pmf, const OptimizerConfig& cfg,
                                          const ChoiceCoefficients& coeffs,
                                          double demand_weight = 0.0) {
  cfg.validate();
  if (pmf.mass.empty() || std::abs(pmf.total_mass() - 1.0) > 1e-9)
    throw domain_error("expected_prob_node: pmf for node " + std::to_string(pmf.node) +
                       " is not normalized");
  NodeExpectation out;
  out.node = pmf.node;
  out.demand_weight = demand_weight;
  for (const auto& [bin, mass] : pmf.mass) {
    if (mass < 0.0) throw domain_error("expected_prob_node: negative mass");
    NodeOptimum cell;
    cell.node = pmf.node;
    cell.bin = bin;
    cell.mass = mass;
    cell.mean_wait = pmf.bin_midpoint(bin);
    cell.sigma = cell_sigma(cfg, pmf.node, bin);
    const auto dist = lognormal_from_mean(cell.mean_wait, cell.sigma);
    const auto opt = optimal_display(dist, cfg, coeffs);
    cell.optimal_percentile = opt.percentile;
    cell.optimal_display = opt.displayed_wait;
    cell.probability = opt.probability;
    cell.ewt_probability = ewt_probability(dist, cfg.reliable_wait, coeffs);
    out.expected_probability += mass * cell.probability;
    out.expected_probability_ewt += mass * cell.ewt_probability;
    out.mean_optimal_percentile += mass * cell.optimal_percentile;
    out.bins.push_back(cell);
  }
  return out;
}

struct AcceptanceReport {
  SigmaRange sigma_range;
  double baseline_rate_ewt = 0.0;
  double optimized_rate = 0.0;
  double gain = 0.0;
  double mean_optimal_percentile = 0.0;             // demand-weighted, fraction
  double unweighted_mean_optimal_percentile = 0.0;  // plain mean over nodes
  std::vector<NodeExpectation> nodes;
};

/// Demand-weighted acceptance rates over all nodes with a pmf; the weight
/// of a node is its request count in the simulation.
inline AcceptanceReport acceptance_rates(const Step1Output& step1, const OptimizerConfig& cfg,
                                         const ChoiceCoefficients& coeffs) {
  cfg.validate();
  AcceptanceReport rep;
  rep.sigma_range = cfg.sigma_range;
  double total = 0.0;
  for (const auto& [node, pmf] : step1.pmfs) {
    auto it = step1.counts.find(node);
    const double weight = it == step1.counts.end() ? 0.0 : static_cast<double>(it->second.requests);
    rep.nodes.push_back(expected_prob_node(pmf, cfg, coeffs, weight));
    total += weight;
  }
  if (!(total > 0.0)) throw domain_error("acceptance_rates: total demand is zero");
  for (const auto& n : rep.nodes) {
    rep.optimized_rate += n.demand_weight * n.expected_probability;
    rep.baseline_rate_ewt += n.demand_weight * n.expected_probability_ewt;
    rep.mean_optimal_percentile += n.demand_weight * n.mean_optimal_percentile;
    rep.unweighted_mean_optimal_percentile += n.mean_optimal_percentile;
  }
  rep.optimized_rate /= total;
  rep.baseline_rate_ewt /= total;
  rep.mean_optimal_percentile /= total;
  rep.unweighted_mean_optimal_percentile /= static_cast<double>(rep.nodes.size());
  rep.gain = rep.optimized_rate - rep.baseline_rate_ewt;
  return rep;
}

}  // namespace modrel
