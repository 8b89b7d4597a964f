#pragma once

#include <cmath>
#include <functional>

namespace sgldlab::num {

// Powers and geometric sums of a factor lambda = 1 - d where d can be as small
// as ~1e-8. Everything is expressed through d and log1p(-d) so no precision is
// lost to the representation of lambda itself.
struct ContractionFactor {
  double d;        // 1 - lambda, kept at full precision
  double log_lam;  // log(lambda) = log1p(-d)

  static ContractionFactor from_one_minus(double d) {
    return ContractionFactor{d, std::log1p(-d)};
  }
  double value() const { return 1.0 - d; }
  // lambda^m = exp(m * log1p(-d))
  double pow(double m) const { return std::exp(m * log_lam); }
  // sum_{i=0}^{m-1} lambda^i  = (1 - lambda^m) / d
  double geom_sum(double m) const { return -std::expm1(m * log_lam) / d; }
  // sum_{i=0}^{m-1} lambda^{2i} = (1 - lambda^{2m}) / (d * (2 - d))
  double geom_sum_sq(double m) const {
    return -std::expm1(2.0 * m * log_lam) / (d * (2.0 - d));
  }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
// Upper tail P(Z > x); erfc keeps relative accuracy far into the tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Inverse standard normal CDF, Wichura's AS 241 (PPND16). Relative error is
// about 1e-15 over (0, 1), which makes seeded draws reproducible bit-for-bit
// across platforms (unlike std::normal_distribution).
double inverse_normal_cdf(double p);

// Adaptive Simpson quadrature with absolute tolerance; used by the test
// oracles (density integrals, divergence integrals).
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth = 40);

// Volume of the d-dimensional Euclidean ball of radius r.
double ball_volume(int dim, double radius);

}  // namespace sgldlab::num
