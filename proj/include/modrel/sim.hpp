#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "modrel/choice.hpp"
#include "modrel/demand.hpp"
#include "modrel/dist.hpp"
#include "modrel/errors.hpp"
#include "modrel/network.hpp"
#include "modrel/rng.hpp"

namespace modrel {

// Floor on the displayed wait; the log-wait utility is undefined at zero.
inline constexpr double kMinDisplayedWait = 0.1;

struct Vehicle {
  std::int64_t id = 0;
  NodeId current_node = 0;  // where it is, or will be, once idle
  double available_at = 0.0;

  friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

struct SigmaRange {
  double low = 0.1;
  double high = 1.0;

  void validate(const char* field) const {
    if (!(low > 0.0) || !(high >= low) || !std::isfinite(high))
      throw validation_error(field, "require 0 < low <= high");
  }
  double draw(RandomStream& rng) const { return low == high ? low : rng.uniform(low, high); }

  friend bool operator==(const SigmaRange&, const SigmaRange&) = default;
};

struct SimConfig {
  std::size_t fleet_size = 40;
  double reliable_wait = 2.0;
  double bin_width = 0.1;
  SigmaRange sigma_range{0.1, 1.0};
  double max_dispatch_mean = 30.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (fleet_size < 1) throw validation_error("sim_config.fleet_size", "must be at least 1");
    if (!(reliable_wait > 0.0))
      throw validation_error("sim_config.reliable_wait", "must be positive");
    if (!(bin_width > 0.0)) throw validation_error("sim_config.bin_width", "must be positive");
    sigma_range.validate("sim_config.sigma_range");
    if (!(max_dispatch_mean > 0.0))
      throw validation_error("sim_config.max_dispatch_mean", "must be positive");
  }
};

struct Assignment {
  std::size_t vehicle;  // index into the fleet
  double mean_wait;     // shortest-path mean time, vehicle -> origin
};

enum class NoAssignment { none_idle, unreachable, too_far };

/// Dispatch against precomputed times-to-origin: the idle vehicle with the
/// smallest mean time to the origin, lowest id on ties.
inline std::optional<Assignment> assign_vehicle(std::span<const Vehicle> fleet,
                                                const TripRequest& request,
                                                std::span<const double> times_to_origin,
                                                double max_dispatch_mean,
                                                NoAssignment* reason = nullptr) {
  std::optional<Assignment> best;
  bool any_idle = false;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const auto& v = fleet[i];
    if (v.available_at > request.request_time) continue;
    any_idle = true;
    const double t = times_to_origin[v.current_node];
    if (std::isinf(t)) continue;
    if (!best || t < best->mean_wait || (t == best->mean_wait && v.id < fleet[best->vehicle].id))
      best = Assignment{i, t};
  }
  if (!best) {
    if (reason) *reason = any_idle ? NoAssignment::unreachable : NoAssignment::none_idle;
    return std::nullopt;
  }
  if (best->mean_wait > max_dispatch_mean) {
    if (reason) *reason = NoAssignment::too_far;
    return std::nullopt;
  }
  return best;
}

inline std::optional<Assignment> assign_vehicle(std::span<const Vehicle> fleet,
                                                const TripRequest& request, const Network& net,
                                                double max_dispatch_mean,
                                                NoAssignment* reason = nullptr) {
  const auto times = shortest_times(net, request.origin, Direction::to_target);
  return assign_vehicle(fleet, request, times, max_dispatch_mean, reason);
}

/// Empirical distribution of binned mean waits at one origin node. Bin k
/// covers [k w, (k+1) w) and is represented by its midpoint.
struct WaitTimePmf {
  NodeId node = 0;
  double bin_width = 0.1;
  std::map<std::int64_t, double> mass;
  std::size_t served = 0;

  double bin_midpoint(std::int64_t bin) const { return (static_cast<double>(bin) + 0.5) * bin_width; }

  double total_mass() const {
    double s = 0.0;
    for (const auto& [bin, m] : mass) s += m;
    return s;
  }
};

inline std::int64_t wait_bin(double t, double bin_width) {
  // nudge so values on a bin edge (0.3 / 0.1 = 2.9999...) land in that bin
  return static_cast<std::int64_t>(std::floor(t / bin_width + 1e-9));
}

inline std::map<NodeId, WaitTimePmf> record_pmf(const std::map<NodeId, std::vector<double>>& served,
                                                double bin_width) {
  if (!(bin_width > 0.0)) throw domain_error("record_pmf: bin_width must be positive");
  std::map<NodeId, WaitTimePmf> out;
  for (const auto& [node, waits] : served) {
    if (waits.empty()) continue;
    WaitTimePmf pmf;
    pmf.node = node;
    pmf.bin_width = bin_width;
    pmf.served = waits.size();
    std::map<std::int64_t, std::size_t> counts;
    for (double t : waits) {
      if (!(t >= 0.0)) throw domain_error("record_pmf: waits must be non-negative");
      ++counts[wait_bin(t, bin_width)];
    }
    for (const auto& [bin, c] : counts)
      pmf.mass[bin] = static_cast<double>(c) / static_cast<double>(waits.size());
    out.emplace(node, std::move(pmf));
  }
  return out;
}

enum class Outcome { accepted, rejected, unassignable };

struct EventRecord {
  std::int64_t request_id = 0;
  NodeId origin = 0;
  NodeId destination = 0;
  double request_time = 0.0;
  Outcome outcome = Outcome::unassignable;
  std::optional<NoAssignment> reason;  // set when unassignable
  std::int64_t vehicle = -1;
  double mean_wait = 0.0;
  double displayed_wait = 0.0;
  double probability = 0.0;
  double sigma = 0.0;
  double realized_wait = 0.0;
  double trip_time = 0.0;
  double available_at = 0.0;  // when the vehicle becomes idle again (accepted only)
};

struct NodeCounts {
  std::size_t requests = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t unassignable = 0;
};

struct Step1Output {
  SimConfig config;
  std::map<NodeId, WaitTimePmf> pmfs;
  std::map<NodeId, NodeCounts> counts;
  NodeCounts totals;
  double acceptance_share = 0.0;      // accepted / all requests
  double expected_acceptances = 0.0;  // sum of p over assigned requests
  double acceptance_variance = 0.0;   // sum of p (1 - p) over assigned requests
  std::vector<EventRecord> events;
  std::vector<Vehicle> initial_fleet;
};

// Fleet placed uniformly at random over the nodes.
inline std::vector<Vehicle> place_fleet(const Network& net, std::size_t fleet_size,
                                        std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, {4}));
  std::vector<Vehicle> fleet(fleet_size);
  for (std::size_t i = 0; i < fleet_size; ++i)
    fleet[i] = {static_cast<std::int64_t>(i), static_cast<NodeId>(rng.below(net.node_count())), 0.0};
  return fleet;
}

/// Week-long dispatch simulation that produces per-origin pmfs of mean wait.
///
/// Each request: nearest idle vehicle is dispatched; the passenger sees the
/// mean wait t (floored at kMinDisplayedWait) with no delay and accepts with
/// the logit probability against the reliable competitor. An accepting
/// passenger is picked up after a lognormal wait with mean t and a
/// per-request sigma, then carried along the shortest path; the vehicle goes
/// idle at the destination. Rejected requests leave the vehicle in place.
///
/// Random streams derived from config.seed: 1 acceptance draws, 2 sigma per
/// request, 3 realized waits, 4 fleet placement.
inline Step1Output run_step1(const Network& net, std::span<const TripRequest> demand,
                             const ChoiceCoefficients& coeffs, const SimConfig& cfg,
                             std::optional<std::vector<Vehicle>> initial_fleet = std::nullopt) {
  cfg.validate();
  coeffs.validate();
  validate_demand(demand, net);

  Step1Output out;
  out.config = cfg;
  if (demand.empty()) return out;

  const auto comp = strong_components(net);
  const auto main_comp = comp[demand.front().origin];
  for (const auto& r : demand)
    if (comp[r.origin] != main_comp || comp[r.destination] != main_comp)
      throw domain_error("run_step1: demand nodes are not strongly connected (request " +
                         std::to_string(r.id) + ")");

  std::vector<Vehicle> fleet =
      initial_fleet ? std::move(*initial_fleet) : place_fleet(net, cfg.fleet_size, cfg.seed);
  for (const auto& v : fleet)
    if (!net.contains(v.current_node)) throw domain_error("run_step1: vehicle off the network");
  out.initial_fleet = fleet;

  RandomStream accept_rng(derive_seed(cfg.seed, {1}));
  RandomStream sigma_rng(derive_seed(cfg.seed, {2}));
  RandomStream wait_rng(derive_seed(cfg.seed, {3}));
  const ServiceOffer reliable{cfg.reliable_wait, 0.0};

  std::map<NodeId, std::vector<double>> served;
  out.events.reserve(demand.size());
  for (const auto& req : demand) {
    EventRecord ev;
    ev.request_id = req.id;
    ev.origin = req.origin;
    ev.destination = req.destination;
    ev.request_time = req.request_time;
    ev.sigma = cfg.sigma_range.draw(sigma_rng);
    auto& node_counts = out.counts[req.origin];
    ++node_counts.requests;

    NoAssignment reason{};
    const auto a = assign_vehicle(fleet, req, net, cfg.max_dispatch_mean, &reason);
    if (!a) {
      ev.outcome = Outcome::unassignable;
      ev.reason = reason;
      ++node_counts.unassignable;
      out.events.push_back(ev);
      continue;
    }
    auto& vehicle = fleet[a->vehicle];
    ev.vehicle = vehicle.id;
    ev.mean_wait = a->mean_wait;
    ev.displayed_wait = std::max(a->mean_wait, kMinDisplayedWait);
    ev.probability = prob_regular(coeffs, reliable, {ev.displayed_wait, 0.0});
    out.expected_acceptances += ev.probability;
    out.acceptance_variance += ev.probability * (1.0 - ev.probability);

    if (accept_rng.uniform() < ev.probability) {
      ev.outcome = Outcome::accepted;
      ++node_counts.accepted;
      ev.realized_wait =
          a->mean_wait > 0.0 ? sample(lognormal_from_mean(a->mean_wait, ev.sigma), wait_rng) : 0.0;
      ev.trip_time = shortest_path_mean(net, req.origin, req.destination).mean_time;
      vehicle.available_at = req.request_time + ev.realized_wait + ev.trip_time;
      vehicle.current_node = req.destination;
      ev.available_at = vehicle.available_at;
      served[req.origin].push_back(a->mean_wait);
    } else {
      ev.outcome = Outcome::rejected;
      ++node_counts.rejected;
    }
    out.events.push_back(ev);
  }

  for (const auto& [node, c] : out.counts) {
    out.totals.requests += c.requests;
    out.totals.accepted += c.accepted;
    out.totals.rejected += c.rejected;
    out.totals.unassignable += c.unassignable;
  }
  out.acceptance_share =
      static_cast<double>(out.totals.accepted) / static_cast<double>(out.totals.requests);
  out.pmfs = record_pmf(served, cfg.bin_width);
  return out;
}

}  // namespace modrel
