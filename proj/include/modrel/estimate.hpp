#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modrel/choice.hpp"
#include "modrel/csv.hpp"
#include "modrel/errors.hpp"
#include "modrel/rng.hpp"

namespace modrel {

struct ChoiceObservation {
  ServiceOffer reliable;
  ServiceOffer regular;
  bool chose_regular = false;
};

struct FitStatistics {
  double loglik = 0.0;
  double null_loglik = 0.0;  // equal-shares model, n ln 0.5
  double bic = 0.0;
  double mcfadden_r2 = 0.0;
  std::size_t n_obs = 0;
  std::size_t k_params = 3;
};

struct FitResult {
  ChoiceCoefficients coefficients;
  FitStatistics statistics;
  std::array<double, 3> std_errors{};  // asc, log wait, exp relative delay
  std::size_t iterations = 0;
  std::vector<double> trace;  // log-likelihood per accepted iterate
};

inline double bic(double loglik, std::size_t k_params, std::size_t n_obs) {
  return -2.0 * loglik + static_cast<double>(k_params) * std::log(static_cast<double>(n_obs));
}

inline double mcfadden_r2(double loglik, double null_loglik) { return 1.0 - loglik / null_loglik; }

namespace detail {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

// Utility difference regular - reliable is linear in the parameters with
// these regressors.
inline Vec3 regressors(const ChoiceObservation& obs) {
  return {1.0, std::log(obs.regular.displayed_wait) - std::log(obs.reliable.displayed_wait),
          std::exp(obs.regular.avg_delay / obs.regular.displayed_wait) -
              std::exp(obs.reliable.avg_delay / obs.reliable.displayed_wait)};
}

inline Vec3 as_vector(const ChoiceCoefficients& c) {
  return {c.asc_regular, c.beta_log_wait, c.beta_exp_reldelay};
}

inline ChoiceCoefficients as_coefficients(const Vec3& v) { return {v[0], v[1], v[2]}; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Neumaier compensated sum. Near the optimum, log-likelihood differences
// between Newton iterates fall below naive summation error.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Inverse of a symmetric 3x3 matrix by cofactors. Returns false if singular.
inline bool invert(const Mat3& m, Mat3& inv) {
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  double scale = 0.0;
  for (const auto& row : m)
    for (double x : row) scale = std::max(scale, std::abs(x));
  if (!(std::abs(det) > 1e-14 * scale * scale * scale)) return false;
  inv[0][0] = c00 / det;
  inv[1][0] = c01 / det;
  inv[2][0] = c02 / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return true;
}

}  // namespace detail

/// Log-likelihood of the binary logit. Observations are summed in order so
/// repeated calls are bit-identical.
inline double log_likelihood(const ChoiceCoefficients& coeffs,
                             std::span<const ChoiceObservation> data) {
  const auto theta = detail::as_vector(coeffs);
  detail::CompensatedSum ll;
  for (const auto& obs : data) {
    const double v = detail::dot(theta, detail::regressors(obs));
    ll.add(-(obs.chose_regular ? softplus(-v) : softplus(v)));
  }
  return ll.value();
}

inline std::array<double, 3> log_likelihood_gradient(const ChoiceCoefficients& coeffs,
                                                     std::span<const ChoiceObservation> data) {
  const auto theta = detail::as_vector(coeffs);
  std::array<detail::CompensatedSum, 3> g;
  for (const auto& obs : data) {
    const auto x = detail::regressors(obs);
    const double resid = (obs.chose_regular ? 1.0 : 0.0) - logistic(detail::dot(theta, x));
    for (int j = 0; j < 3; ++j) g[j].add(resid * x[j]);
  }
  return {g[0].value(), g[1].value(), g[2].value()};
}

namespace detail {

inline Mat3 hessian(const Vec3& theta, std::span<const ChoiceObservation> data) {
  std::array<std::array<CompensatedSum, 3>, 3> acc;
  for (const auto& obs : data) {
    const auto x = regressors(obs);
    const double p = logistic(dot(theta, x));
    const double w = p * (1.0 - p);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) acc[a][b].add(-w * x[a] * x[b]);
  }
  Mat3 h{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) h[a][b] = acc[a][b].value();
  return h;
}

inline double max_abs(const Vec3& v) {
  return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
}

}  // namespace detail

struct FitOptions {
  std::size_t max_iterations = 100;
  double gradient_tolerance = 1e-8;
};

/// Maximum-likelihood fit of the reliability logit by Newton-Raphson with
/// step halving, starting from zero.
inline FitResult fit_binary_logit(std::span<const ChoiceObservation> data, FitOptions opts = {}) {
  if (data.size() < 10) throw domain_error("fit_binary_logit: need at least 10 observations");
  std::size_t n_regular = 0;
  for (const auto& obs : data) {
    obs.reliable.validate();
    obs.regular.validate();
    n_regular += obs.chose_regular ? 1 : 0;
  }
  if (n_regular == 0 || n_regular == data.size())
    throw domain_error("fit_binary_logit: both choice outcomes must be present");
  for (int j = 1; j < 3; ++j) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& obs : data) {
      const double x = detail::regressors(obs)[j];
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (!(hi - lo > 1e-12))
      throw domain_error(j == 1 ? "fit_binary_logit: log-wait regressor is constant"
                                : "fit_binary_logit: relative-delay regressor is constant");
  }

  detail::Vec3 theta{};
  double ll = log_likelihood(detail::as_coefficients(theta), data);
  FitResult result;
  result.trace.push_back(ll);
  bool converged = false;

  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    const auto g = log_likelihood_gradient(detail::as_coefficients(theta), data);
    if (detail::max_abs(g) < opts.gradient_tolerance) {
      converged = true;
      break;
    }
    detail::Mat3 inv;
    if (!detail::invert(detail::hessian(theta, data), inv))
      throw estimation_error("fit_binary_logit: singular information matrix", result.trace);
    detail::Vec3 step{};
    for (int a = 0; a < 3; ++a) step[a] = -detail::dot(inv[a], g);

    double t = 1.0;
    detail::Vec3 next{};
    double next_ll = -INFINITY;
    for (int halvings = 0; halvings < 50; ++halvings, t *= 0.5) {
      for (int a = 0; a < 3; ++a) next[a] = theta[a] + t * step[a];
      next_ll = log_likelihood(detail::as_coefficients(next), data);
      if (next_ll >= ll) break;
    }
    if (!(next_ll >= ll)) {
      // No ascent left in floating point; accept if the gradient is at rounding level.
      if (detail::max_abs(g) < 1e-6 * static_cast<double>(data.size())) {
        converged = true;
        break;
      }
      throw estimation_error("fit_binary_logit: line search failed", result.trace);
    }
    theta = next;
    ll = next_ll;
    result.trace.push_back(ll);
    result.iterations = it + 1;
    if (detail::max_abs(theta) > 1e4)
      throw estimation_error("fit_binary_logit: coefficients diverge (separated data)",
                             result.trace);
  }
  if (!converged)
    throw estimation_error("fit_binary_logit: no convergence after " +
                               std::to_string(opts.max_iterations) + " iterations",
                           result.trace);

  // Complete separation: the likelihood supremum is approached only at
  // infinity and every outcome ends up predicted with near certainty.
  double worst = 0.0;
  for (const auto& obs : data) {
    const double v = detail::dot(theta, detail::regressors(obs));
    worst = std::max(worst, obs.chose_regular ? softplus(-v) : softplus(v));
  }
  if (worst < 1e-6)
    throw estimation_error("fit_binary_logit: data are perfectly separated", result.trace);

  detail::Mat3 cov;
  if (!detail::invert(detail::hessian(theta, data), cov))
    throw estimation_error("fit_binary_logit: singular information matrix at optimum",
                           result.trace);
  for (int a = 0; a < 3; ++a) result.std_errors[a] = std::sqrt(std::max(-cov[a][a], 0.0));

  result.coefficients = detail::as_coefficients(theta);
  auto& st = result.statistics;
  st.loglik = ll;
  st.n_obs = data.size();
  st.k_params = 3;
  st.null_loglik = static_cast<double>(data.size()) * std::log(0.5);
  st.bic = bic(st.loglik, st.k_params, st.n_obs);
  st.mcfadden_r2 = mcfadden_r2(st.loglik, st.null_loglik);
  return result;
}

using OfferPair = std::pair<ServiceOffer, ServiceOffer>;  // (reliable, regular)

/// Full factorial over the experiment's attribute levels: reliable wait
/// {5,10,15,20,25} with no delay; regular wait {3,5,8,10,13,15,20} and
/// delay {3,5,8,10,13}.
inline std::vector<OfferPair> experiment_design() {
  std::vector<OfferPair> design;
  for (double rel : {5.0, 10.0, 15.0, 20.0, 25.0})
    for (double reg : {3.0, 5.0, 8.0, 10.0, 13.0, 15.0, 20.0})
      for (double delay : {3.0, 5.0, 8.0, 10.0, 13.0})
        design.push_back({ServiceOffer{rel, 0.0}, ServiceOffer{reg, delay}});
  return design;
}

/// Draws n choices, cycling through the design, each Bernoulli(prob_regular).
inline std::vector<ChoiceObservation> simulate_choices(const ChoiceCoefficients& coeffs,
                                                       std::span<const OfferPair> design,
                                                       std::size_t n, std::uint64_t seed) {
  if (n == 0) throw domain_error("simulate_choices: n must be at least 1");
  if (design.empty()) throw domain_error("simulate_choices: design is empty");
  coeffs.validate();
  RandomStream rng(seed);
  std::vector<ChoiceObservation> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [reliable, regular] = design[i % design.size()];
    const double p = prob_regular(coeffs, reliable, regular);
    out.push_back({reliable, regular, rng.uniform() < p});
  }
  return out;
}

inline std::vector<ChoiceObservation> read_choices_csv(std::istream& in,
                                                       const std::string& source = "choices") {
  csv::Reader reader(in, source);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header row");
  reader.expect_header(
      f, {"reliable_wait", "reliable_delay", "regular_wait", "regular_delay", "chose_regular"});
  std::vector<ChoiceObservation> out;
  while (reader.next(f)) {
    reader.expect_columns(f, 5);
    ChoiceObservation obs;
    obs.reliable = {reader.real(f[0], "reliable_wait"), reader.real(f[1], "reliable_delay")};
    obs.regular = {reader.real(f[2], "regular_wait"), reader.real(f[3], "regular_delay")};
    const auto y = reader.integer(f[4], "chose_regular");
    if (y != 0 && y != 1) reader.fail("chose_regular must be 0 or 1");
    obs.chose_regular = y == 1;
    try {
      obs.reliable.validate();
      obs.regular.validate();
    } catch (const domain_error& e) {
      reader.fail(e.what());
    }
    out.push_back(obs);
  }
  return out;
}

inline void write_choices_csv(std::ostream& out, std::span<const ChoiceObservation> data) {
  out << "reliable_wait,reliable_delay,regular_wait,regular_delay,chose_regular\n";
  for (const auto& obs : data)
    out << obs.reliable.displayed_wait << ',' << obs.reliable.avg_delay << ','
        << obs.regular.displayed_wait << ',' << obs.regular.avg_delay << ','
        << (obs.chose_regular ? 1 : 0) << '\n';
}

}  // namespace modrel
