#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "modrel/dist.hpp"
#include "modrel/errors.hpp"

namespace modrel {

/// Binary logit utility parameters for the regular service vs. a perfectly
/// reliable competitor. Defaults are the published estimates.
struct ChoiceCoefficients {
  double asc_regular = -1.55;        // constant on the regular service
  double beta_log_wait = -3.88;      // ln(displayed wait, minutes)
  double beta_exp_reldelay = -0.78;  // exp(average delay / displayed wait)

  void validate() const {
    if (!std::isfinite(asc_regular) || !std::isfinite(beta_log_wait) ||
        !std::isfinite(beta_exp_reldelay))
      throw domain_error("ChoiceCoefficients: coefficients must be finite");
  }
};

// What a passenger sees: displayed wait and average pick-up delay, minutes.
struct ServiceOffer {
  double displayed_wait = 1.0;
  double avg_delay = 0.0;

  void validate() const {
    if (!(displayed_wait > 0.0) || !std::isfinite(displayed_wait))
      throw domain_error("ServiceOffer: displayed_wait must be positive");
    if (!(avg_delay >= 0.0) || !std::isfinite(avg_delay))
      throw domain_error("ServiceOffer: avg_delay must be non-negative");
  }
};

enum class Alternative { reliable, regular };

inline double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ln(1 + e^x) without overflow.
inline double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double utility(const ChoiceCoefficients& coeffs, const ServiceOffer& offer,
                      Alternative alt) {
  offer.validate();
  const double asc = alt == Alternative::regular ? coeffs.asc_regular : 0.0;
  return asc + coeffs.beta_log_wait * std::log(offer.displayed_wait) +
         coeffs.beta_exp_reldelay * std::exp(offer.avg_delay / offer.displayed_wait);
}

/// Probability of choosing the regular service over the reliable one.
inline double prob_regular(const ChoiceCoefficients& coeffs, const ServiceOffer& reliable,
                           const ServiceOffer& regular) {
  if (reliable.avg_delay != 0.0)
    throw domain_error("prob_regular: the reliable offer must carry zero delay");
  const double v_reliable = utility(coeffs, reliable, Alternative::reliable);
  const double v_regular = utility(coeffs, regular, Alternative::regular);
  // log-sum-exp shift
  const double top = std::max(v_reliable, v_regular);
  const double e_reg = std::exp(v_regular - top);
  const double e_rel = std::exp(v_reliable - top);
  return e_reg / (e_reg + e_rel);
}

struct ProbCurveRow {
  double percentile;  // fraction in (0, 1)
  double displayed_wait;
  double avg_delay;
  double probability;
};

/// Choice probability when the regular service displays each given
/// percentile of its wait-time distribution, against a zero-delay reliable
/// service with wait `reliable_wait`.
inline std::vector<ProbCurveRow> prob_curve(const ChoiceCoefficients& coeffs, double reliable_wait,
                                            const LognormalDist& dist,
                                            std::span<const double> percentiles) {
  if (percentiles.empty()) throw domain_error("prob_curve: percentile list is empty");
  for (std::size_t i = 0; i < percentiles.size(); ++i) {
    if (!(percentiles[i] > 0.0 && percentiles[i] < 1.0))
      throw domain_error("prob_curve: percentiles must lie in (0, 1)");
    if (i > 0 && !(percentiles[i] > percentiles[i - 1]))
      throw domain_error("prob_curve: percentiles must be strictly increasing");
  }
  const ServiceOffer reliable{reliable_wait, 0.0};
  std::vector<ProbCurveRow> rows;
  rows.reserve(percentiles.size());
  for (double p : percentiles) {
    const double shown = quantile(dist, p);
    const double delay = expected_delay(dist, shown);
    rows.push_back({p, shown, delay, prob_regular(coeffs, reliable, {shown, delay})});
  }
  return rows;
}

/// Propensity to switch provider after a late pick-up, as a function of the
/// ratio of actual delay to displayed wait.
struct SwitchModel {
  double intercept = 0.43;
  double beta_log_pctdiff = 0.31;
};

inline double switch_probability(const SwitchModel& model, double pct_diff) {
  if (!(pct_diff > 0.0)) throw domain_error("switch_probability: pct_diff must be positive");
  return logistic(model.intercept + model.beta_log_pctdiff * std::log(pct_diff));
}

struct BlameProbabilities {
  double yes;
  double maybe;
  double no;
};

/// Ordered logit over {yes < may be < no}.
///
/// Convention: P(Y <= k) = logistic(c_k - eta) with eta = sum of
/// coefficient * covariate. A positive eta shifts mass toward "no".
struct OrderedBlameModel {
  std::map<std::string, double> coefficients;
  double cut_yes_maybe = 0.0;
  double cut_maybe_no = 0.0;

  // "Is the driver responsible?" Covariates log_income and log_age are
  // taken as already-transformed values.
  static OrderedBlameModel driver_responsible() {
    return {{{"pct_diff", -0.73}, {"log_income", -0.19}, {"log_age", 0.92}, {"bachelor", -0.33}},
            0.38,
            2.63};
  }

  // "Is the service provider responsible?"
  static OrderedBlameModel service_responsible() {
    return {{{"pct_diff", -0.44}, {"log_income", -0.12}, {"bachelor", -0.27}, {"male", -0.21}},
            -2.88,
            -0.88};
  }
};

inline BlameProbabilities blame_probabilities_at(const OrderedBlameModel& model, double eta) {
  if (!(model.cut_yes_maybe < model.cut_maybe_no))
    throw domain_error("OrderedBlameModel: cutoffs must be strictly increasing");
  const double le_yes = logistic(model.cut_yes_maybe - eta);
  const double le_maybe = logistic(model.cut_maybe_no - eta);
  const double no = logistic(eta - model.cut_maybe_no);  // 1 - le_maybe without cancellation
  return {le_yes, std::max(le_maybe - le_yes, 0.0), no};
}

inline BlameProbabilities blame_probabilities(const OrderedBlameModel& model,
                                              const std::map<std::string, double>& covariates) {
  if (covariates.size() != model.coefficients.size())
    throw domain_error("blame_probabilities: covariates must match the model's names exactly");
  double eta = 0.0;
  for (const auto& [name, beta] : model.coefficients) {
    auto it = covariates.find(name);
    if (it == covariates.end()) throw domain_error("blame_probabilities: missing covariate " + name);
    eta += beta * it->second;
  }
  return blame_probabilities_at(model, eta);
}

}  // namespace modrel
