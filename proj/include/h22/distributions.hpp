#pragma once

#include <cmath>
#include <stdexcept>

namespace h22 {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

/// Inverse Gaussian IG(mu, lambda) in the mean/shape parameterization:
/// pdf(y) = sqrt(lambda/(2 pi y^3)) exp(-lambda (y-mu)^2 / (2 mu^2 y)).
inline double inverse_gaussian_pdf(double y, double mu, double lambda) {
  if (y <= 0.0) return 0.0;
  return std::sqrt(lambda / (2.0 * M_PI * y * y * y)) *
         std::exp(-lambda * (y - mu) * (y - mu) / (2.0 * mu * mu * y));
}

inline double inverse_gaussian_cdf(double y, double mu, double lambda) {
  if (y <= 0.0) return 0.0;
  const double s = std::sqrt(lambda / y);
  return normal_cdf(s * (y / mu - 1.0)) +
         std::exp(2.0 * lambda / mu) * normal_cdf(-s * (y / mu + 1.0));
}

/// Gamma(1/2, scale 1) distribution function: P(X <= t) = erf(sqrt(t)).
inline double gamma_half_cdf(double t) { return t <= 0.0 ? 0.0 : std::erf(std::sqrt(t)); }

/// Law of 1/(2 gamma) with gamma ~ Gamma(1/2, scale 1) ("inverse Gamma(1/2)").
inline double inv_gamma_half_cdf(double x) {
  return x <= 0.0 ? 0.0 : std::erfc(std::sqrt(0.5 / x));
}

/// chi^2_1 distribution function.
inline double chi_square_1_cdf(double t) { return t <= 0.0 ? 0.0 : std::erf(std::sqrt(0.5 * t)); }

/// Density of the pinned u-field on the one-edge graph {1, i0} with edge
/// weight w: f(u) = sqrt(w/(2 pi)) exp(-u/2 - w (cosh u - 1)). This is the
/// law of the log total mass at the cascade root.
inline double root_u_log_density(double u, double w) {
  return -0.5 * u - w * (std::cosh(u) - 1.0);
}

inline double root_u_density(double u, double w) {
  return std::sqrt(w / (2.0 * M_PI)) * std::exp(root_u_log_density(u, w));
}

/// Truncation half-width that keeps the neglected root_u_density tails below
/// ~1e-300.
inline double root_u_cutoff(double w) {
  double c = std::log(1400.0 / w + 4.0) + 4.0;
  return c;
}

}  // namespace h22
