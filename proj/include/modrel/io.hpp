#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>

#include "modrel/config.hpp"
#include "modrel/estimate.hpp"
#include "modrel/optimize.hpp"
#include "modrel/sim.hpp"

namespace modrel {

// Shortest decimal that round-trips.
inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::accepted: return "accepted";
    case Outcome::rejected: return "rejected";
    case Outcome::unassignable: return "unassignable";
  }
  return "?";
}

inline const char* to_string(NoAssignment r) {
  switch (r) {
    case NoAssignment::none_idle: return "none_idle";
    case NoAssignment::unreachable: return "unreachable";
    case NoAssignment::too_far: return "too_far";
  }
  return "?";
}

inline json to_json(const NodeCounts& c) {
  return {{"requests", c.requests},
          {"accepted", c.accepted},
          {"rejected", c.rejected},
          {"unassignable", c.unassignable}};
}

inline json to_json(const WaitTimePmf& pmf) {
  json bins = json::array();
  for (const auto& [bin, mass] : pmf.mass)
    bins.push_back({{"bin", bin}, {"mean_wait", pmf.bin_midpoint(bin)}, {"mass", mass}});
  return {{"node", pmf.node}, {"bin_width", pmf.bin_width}, {"served", pmf.served}, {"bins", bins}};
}

inline json to_json(const EventRecord& e) {
  json j = {{"request", e.request_id},   {"origin", e.origin},
            {"destination", e.destination}, {"time", e.request_time},
            {"outcome", to_string(e.outcome)}};
  if (e.reason) j["reason"] = to_string(*e.reason);
  if (e.outcome != Outcome::unassignable) {
    j["vehicle"] = e.vehicle;
    j["mean_wait"] = e.mean_wait;
    j["displayed_wait"] = e.displayed_wait;
    j["probability"] = e.probability;
  }
  j["sigma"] = e.sigma;
  if (e.outcome == Outcome::accepted) {
    j["realized_wait"] = e.realized_wait;
    j["trip_time"] = e.trip_time;
    j["available_at"] = e.available_at;
  }
  return j;
}

/// Step-1 artifact. `echo` is the effective experiment configuration.
inline json to_json(const Step1Output& s, const json& echo = json()) {
  json nodes = json::array();
  for (const auto& [node, c] : s.counts) {
    json n = {{"node", node}, {"counts", to_json(c)}};
    if (auto it = s.pmfs.find(node); it != s.pmfs.end()) n["pmf"] = to_json(it->second);
    nodes.push_back(n);
  }
  json events = json::array();
  for (const auto& e : s.events) events.push_back(to_json(e));
  json j;
  if (!echo.is_null()) j["config"] = echo;
  j["sim_config"] = to_json(s.config);
  j["seed"] = s.config.seed;
  j["totals"] = to_json(s.totals);
  j["acceptance_share"] = s.acceptance_share;
  j["expected_acceptances"] = s.expected_acceptances;
  j["nodes"] = nodes;
  j["events"] = events;
  return j;
}

inline json to_json(const AcceptanceReport& r, bool with_nodes = true) {
  json j = {{"sigma_range", to_json(r.sigma_range)},
            {"rate_ewt", r.baseline_rate_ewt},
            {"rate_optimal", r.optimized_rate},
            {"gain", r.gain},
            {"mean_optimal_percentile", r.mean_optimal_percentile},
            {"unweighted_mean_optimal_percentile", r.unweighted_mean_optimal_percentile}};
  if (with_nodes) {
    json nodes = json::array();
    for (const auto& n : r.nodes) {
      json bins = json::array();
      for (const auto& b : n.bins)
        bins.push_back({{"bin", b.bin},
                        {"mass", b.mass},
                        {"mean_wait", b.mean_wait},
                        {"sigma", b.sigma},
                        {"optimal_percentile", b.optimal_percentile},
                        {"optimal_display", b.optimal_display},
                        {"probability", b.probability},
                        {"ewt_probability", b.ewt_probability}});
      nodes.push_back({{"node", n.node},
                       {"demand", n.demand_weight},
                       {"expected_probability", n.expected_probability},
                       {"expected_probability_ewt", n.expected_probability_ewt},
                       {"mean_optimal_percentile", n.mean_optimal_percentile},
                       {"bins", bins}});
    }
    j["nodes"] = nodes;
  }
  return j;
}

inline json to_json(const FitResult& f) {
  const auto& s = f.statistics;
  return {{"coefficients", to_json(f.coefficients)},
          {"std_errors",
           {{"asc_regular", f.std_errors[0]},
            {"beta_log_wait", f.std_errors[1]},
            {"beta_exp_reldelay", f.std_errors[2]}}},
          {"statistics",
           {{"loglik", s.loglik},
            {"null_loglik", s.null_loglik},
            {"bic", s.bic},
            {"mcfadden_r2", s.mcfadden_r2},
            {"n_obs", s.n_obs},
            {"k_params", s.k_params}}},
          {"iterations", f.iterations}};
}

/// One row per sigma range, preceded by a '#' line carrying the configuration.
inline void write_report_csv(std::ostream& out, std::span<const AcceptanceReport> reports,
                             const json& echo) {
  out << "# config: " << echo.dump() << '\n';
  out << "sigma_low,sigma_high,rate_ewt,rate_optimal,gain,mean_optimal_percentile\n";
  for (const auto& r : reports)
    out << format_real(r.sigma_range.low) << ',' << format_real(r.sigma_range.high) << ','
        << format_real(r.baseline_rate_ewt) << ',' << format_real(r.optimized_rate) << ','
        << format_real(r.gain) << ',' << format_real(r.mean_optimal_percentile) << '\n';
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace modrel
