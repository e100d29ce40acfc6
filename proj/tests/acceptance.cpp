// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "modrel/commands.hpp"
#include "modrel/io.hpp"
#include "modrel/modrel.hpp"
#include "oracles.hpp"

using namespace modrel;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Reported loglikelihood -2343.6 with 3 parameters and 1956 observations; printed BIC 4709.9.
Verdict bic_identity() {
  const double got = bic(-2343.6, 3, 1956);
  return {std::abs(got - 4709.9) <= 0.1, fmt("BIC %.4f vs 4709.9", got)};
}

// Reliable: wait 10, no delay. Regular: wait 8, average delay 5.
Verdict example_probability() {
  // by hand from the printed coefficients
  const double v_reg = -1.55 - 3.88 * std::log(8.0) - 0.78 * std::exp(5.0 / 8.0);
  const double v_rel = -3.88 * std::log(10.0) - 0.78 * std::exp(0.0);
  const double by_hand = 1.0 / (1.0 + std::exp(v_rel - v_reg));
  const double got = prob_regular(ChoiceCoefficients{}, {10.0, 0.0}, {8.0, 5.0});
  const bool ok = std::abs(by_hand - 0.204) <= 0.001 && std::abs(got - 0.204) <= 0.001 &&
                  std::abs(got - by_hand) <= 1e-12;
  return {ok, fmt("P %.6f, by hand %.6f", got, by_hand)};
}

Verdict probability_curves() {
  std::vector<double> pct;
  for (int p = 1; p <= 99; ++p) pct.push_back(p / 100.0);
  std::vector<double> argmax;
  bool interior = true;
  for (double sigma : {0.4, 0.7, 1.0}) {
    const auto rows = prob_curve(ChoiceCoefficients{}, 2.7, lognormal_from_mean(1.5, sigma), pct);
    const auto best = std::max_element(rows.begin(), rows.end(),
                                       [](const auto& a, const auto& b) { return a.probability < b.probability; });
    argmax.push_back(best->percentile);
    if (sigma > 0.5) {
      const bool inside = best != rows.begin() && best + 1 != rows.end() &&
                          best->probability > rows.front().probability &&
                          best->probability > rows.back().probability;
      interior = interior && inside;
    }
  }
  const bool ok = argmax[0] < argmax[1] && argmax[1] < argmax[2] && interior;
  return {ok, fmt("argmax %.2f < %.2f < %.2f, interior maxima %s", argmax[0], argmax[1], argmax[2],
                  interior ? "yes" : "no")};
}

Verdict reliable_wait_derivation() {
  const auto d = lognormal_from_mean(1.5, 0.7);
  const double v = d.mean() + d.stddev();
  return {std::abs(v - 2.69) <= 0.01, fmt("mean + sd = %.5f", v)};
}

Verdict delay_quadrature() {
  double worst = 0.0;
  for (double mean : {1.5, 5.0}) {
    for (int s10 = 1; s10 <= 15; ++s10) {
      const auto d = lognormal_from_mean(mean, s10 / 10.0);
      for (int w10 = 1; w10 <= 100; ++w10) {
        const double shown = w10 / 10.0;
        const double q = oracle::expected_delay_quadrature(d.mu_log(), d.sigma_log(), shown);
        if (!(q > 0.0)) return {false, fmt("quadrature returned %g", q)};
        worst = std::max(worst, std::abs(expected_delay(d, shown) - q) / q);
      }
    }
  }
  return {worst < 1e-6, fmt("worst relative error %.3g over 3000 points", worst)};
}

Verdict parameter_recovery() {
  const ChoiceCoefficients truth;
  const auto design = experiment_design();
  const auto data = simulate_choices(truth, design, 50000, 2024);
  const auto fit = fit_binary_logit(data);
  const double t[3] = {truth.asc_regular, truth.beta_log_wait, truth.beta_exp_reldelay};
  const double e[3] = {fit.coefficients.asc_regular, fit.coefficients.beta_log_wait,
                       fit.coefficients.beta_exp_reldelay};
  bool ok = true;
  std::ostringstream detail;
  for (int i = 0; i < 3; ++i) {
    const double tol = std::max(0.05, 2.0 * fit.std_errors[i]);
    ok = ok && std::abs(e[i] - t[i]) <= tol;
    detail << (i ? ", " : "") << fmt("%.4f (tol %.4f)", e[i], tol);
  }
  return {ok, detail.str()};
}

Verdict desk_trends() {
  auto cfg = load_experiment_config(std::string(MODREL_SOURCE_DIR) + "/configs/desk_scale.json");
  const auto net = build_network(cfg.network);
  const auto demand = build_demand(cfg.demand, net);
  bool dominance = true, positive = true, increasing = true;
  double min_gain = INFINITY;
  std::vector<double> pct_seed1;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    apply_overrides(cfg, {seed, std::nullopt});
    const auto result = run_experiment(cfg, net, demand);
    double prev = -1.0;
    for (const auto& r : result.reports) {
      dominance = dominance && r.optimized_rate >= r.baseline_rate_ewt;
      positive = positive && r.gain > 0.0;
      increasing = increasing && r.mean_optimal_percentile > prev;
      prev = r.mean_optimal_percentile;
      min_gain = std::min(min_gain, r.gain);
      if (seed == 1) pct_seed1.push_back(r.mean_optimal_percentile);
    }
  }
  const bool ok = dominance && positive && increasing && pct_seed1.size() == 3;
  return {ok, fmt("10 seeds x 3 ranges: dominance %s, min gain %.4f, percentiles (seed 1) %.3f < %.3f < %.3f%s",
                  dominance ? "yes" : "no", min_gain, pct_seed1[0], pct_seed1[1], pct_seed1[2],
                  increasing ? "" : " [not increasing for some seed]")};
}

Verdict conservation_determinism() {
  const auto cfg = load_experiment_config(std::string(MODREL_SOURCE_DIR) + "/configs/desk_scale.json");
  const auto net = build_network(cfg.network);
  const auto demand = build_demand(cfg.demand, net);
  const auto a = run_step1(net, demand, cfg.coefficients, cfg.sim_config);
  const auto b = run_step1(net, demand, cfg.coefficients, cfg.sim_config);
  bool conserved = a.totals.accepted + a.totals.rejected + a.totals.unassignable == demand.size() &&
                   a.totals.requests == demand.size();
  for (const auto& [node, c] : a.counts) conserved = conserved && c.accepted + c.rejected + c.unassignable == c.requests;
  const std::string ja = modrel::to_json(a, modrel::to_json(cfg)).dump(1);
  const std::string jb = modrel::to_json(b, modrel::to_json(cfg)).dump(1);
  return {conserved && ja == jb,
          fmt("%zu = %zu + %zu + %zu, JSON %zu bytes, identical %s", demand.size(), a.totals.accepted,
              a.totals.rejected, a.totals.unassignable, ja.size(), ja == jb ? "yes" : "no")};
}

Verdict dispatch_oracle() {
  RandomStream rng(derive_seed(9, {6}));
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Edge> edges;
    std::vector<oracle::SimpleEdge> simple;
    for (NodeId a = 0; a < 6; ++a)
      for (NodeId b = 0; b < 6; ++b)
        if (a != b && rng.uniform() < 0.45) {
          const double w = std::round(rng.uniform(1.0, 5.0) * 2.0) / 2.0;
          edges.push_back({a, b, w});
          simple.push_back({a, b, w});
        }
    const Network net(6, edges);
    std::vector<Vehicle> fleet;
    for (std::int64_t v = 0, n = 1 + static_cast<std::int64_t>(rng.below(6)); v < n; ++v)
      fleet.push_back({v, static_cast<NodeId>(rng.below(6)), rng.uniform() < 0.25 ? 99.0 : rng.uniform(0.0, 3.0)});
    const TripRequest req{trial, static_cast<NodeId>(rng.below(6)), 0, 3.0};
    const double cap = rng.uniform(1.0, 10.0);

    std::optional<std::size_t> best;
    double best_t = INFINITY;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      if (fleet[i].available_at > req.request_time) continue;
      const double t = oracle::brute_force_shortest(simple, 6, fleet[i].current_node, req.origin);
      if (t < best_t) {
        best_t = t;
        best = i;
      }
    }
    const auto got = assign_vehicle(fleet, req, net, cap);
    const bool expect_none = !best || best_t > cap;
    if (expect_none ? !got : (got && got->vehicle == *best && std::abs(got->mean_wait - best_t) <= 1e-12)) ++agree;
  }
  return {agree == 100, fmt("%d/100 instances agree", agree)};
}

Verdict ordered_logit() {
  double worst_sum = 0.0;
  bool monotone = true;
  for (const auto& model : {OrderedBlameModel::driver_responsible(), OrderedBlameModel::service_responsible()}) {
    // eta driven through the covariate path: only pct_diff varies
    const double beta = model.coefficients.at("pct_diff");
    std::optional<BlameProbabilities> prev;
    for (int k = -2000; k <= 2000; ++k) {
      const double eta = k / 200.0;
      std::map<std::string, double> cov;
      for (const auto& [name, b] : model.coefficients) cov[name] = 0.0;
      cov["pct_diff"] = eta / beta;
      const auto p = blame_probabilities(model, cov);
      worst_sum = std::max(worst_sum, std::abs(p.yes + p.maybe + p.no - 1.0));
      if (prev) monotone = monotone && p.yes <= prev->yes && p.no >= prev->no;
      prev = p;
    }
  }
  return {worst_sum <= 1e-12 && monotone,
          fmt("max |sum - 1| %.3g, monotone %s, both models", worst_sum, monotone ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"BIC identity", bic_identity},
      {"example choice probability", example_probability},
      {"probability curves vs percentile", probability_curves},
      {"reliable wait from mean + sd", reliable_wait_derivation},
      {"expected delay vs quadrature", delay_quadrature},
      {"parameter recovery", parameter_recovery},
      {"desk-scale acceptance trends", desk_trends},
      {"simulator conservation and determinism", conservation_determinism},
      {"dispatch oracle", dispatch_oracle},
      {"ordered logit validity", ordered_logit},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("AC%-2d %s  %s: %s (%.2fs)\n", index, v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
    failed += !v.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
