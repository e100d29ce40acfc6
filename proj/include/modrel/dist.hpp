#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "modrel/errors.hpp"
#include "modrel/normal.hpp"
#include "modrel/rng.hpp"

namespace modrel {

/// Lognormal wait-time distribution: ln W ~ Normal(mu_log, sigma_log^2),
/// wait in minutes.
class LognormalDist {
 public:
  static LognormalDist from_log_params(double mu_log, double sigma_log) {
    if (!std::isfinite(mu_log)) throw domain_error("LognormalDist: mu_log must be finite");
    if (!(sigma_log > 0.0) || !std::isfinite(sigma_log))
      throw domain_error("LognormalDist: sigma_log must be positive and finite");
    return LognormalDist(mu_log, sigma_log);
  }

  double mu_log() const noexcept { return mu_log_; }
  double sigma_log() const noexcept { return sigma_log_; }

  double mean() const noexcept { return std::exp(mu_log_ + 0.5 * sigma_log_ * sigma_log_); }
  double median() const noexcept { return std::exp(mu_log_); }
  double stddev() const noexcept {
    return mean() * std::sqrt(std::expm1(sigma_log_ * sigma_log_));
  }

  double pdf(double w) const noexcept {
    if (w <= 0.0) return 0.0;
    const double z = (std::log(w) - mu_log_) / sigma_log_;
    return normal_pdf(z) / (sigma_log_ * w);
  }

  double cdf(double w) const noexcept {
    if (w <= 0.0) return 0.0;
    return normal_cdf((std::log(w) - mu_log_) / sigma_log_);
  }

 private:
  LognormalDist(double mu, double sigma) : mu_log_(mu), sigma_log_(sigma) {}

  double mu_log_;
  double sigma_log_;
};

/// Lognormal with the given mean and log-scale standard deviation:
/// mu_log = ln(mean) - sigma_log^2 / 2.
inline LognormalDist lognormal_from_mean(double mean, double sigma_log) {
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw domain_error("lognormal_from_mean: mean must be positive and finite");
  if (!(sigma_log > 0.0)) throw domain_error("lognormal_from_mean: sigma_log must be positive");
  return LognormalDist::from_log_params(std::log(mean) - 0.5 * sigma_log * sigma_log, sigma_log);
}

inline double quantile(const LognormalDist& dist, double p) {
  if (!(p > 0.0 && p < 1.0)) throw domain_error("quantile: p must lie in (0, 1)");
  return std::exp(dist.mu_log() + dist.sigma_log() * normal_quantile(p));
}

// The mean sits at percentile Phi(sigma/2) of its own distribution.
inline double percentile_of_mean(const LognormalDist& dist) noexcept {
  return normal_cdf(0.5 * dist.sigma_log());
}

/// Expected pick-up delay E[(W - d)^+] when d is displayed, i.e. the
/// integral of f(w) (w - d) over w > d.
///
/// Closed form for d > 0 (lognormal partial expectation):
///   mean * Phi((mu + s^2 - ln d) / s) - d * Phi((mu - ln d) / s).
/// Returns the full mean at d = 0. The result is clamped to [0, mean] to
/// absorb rounding in the far tail.
inline double expected_delay(const LognormalDist& dist, double displayed_wait) {
  if (!(displayed_wait >= 0.0)) throw domain_error("expected_delay: displayed wait must be >= 0");
  const double mean = dist.mean();
  if (displayed_wait == 0.0) return mean;
  if (std::isinf(displayed_wait)) return 0.0;
  const double s = dist.sigma_log();
  const double z = (dist.mu_log() - std::log(displayed_wait)) / s;
  const double value = mean * normal_cdf(z + s) - displayed_wait * normal_cdf(z);
  return std::clamp(value, 0.0, mean);
}

/// Same quantity parameterized by mean and sigma_log, accepting sigma_log = 0
/// for a point mass at the mean, where the delay is max(mean - d, 0).
inline double expected_delay(double mean, double sigma_log, double displayed_wait) {
  if (!(displayed_wait >= 0.0)) throw domain_error("expected_delay: displayed wait must be >= 0");
  if (sigma_log == 0.0) {
    if (!(mean > 0.0)) throw domain_error("expected_delay: mean must be positive");
    return std::max(mean - displayed_wait, 0.0);
  }
  return expected_delay(lognormal_from_mean(mean, sigma_log), displayed_wait);
}

inline double sample(const LognormalDist& dist, RandomStream& rng) {
  return std::exp(dist.mu_log() + dist.sigma_log() * rng.normal());
}

}  // namespace modrel
