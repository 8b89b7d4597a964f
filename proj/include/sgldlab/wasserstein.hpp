#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "sgldlab/errors.hpp"

namespace sgldlab {

// Density sampled on a regular lattice. Verification is capped at dim <= 3
// (ball-mask quadrature cost); the analytic volume-ratio diagnostic has no
// cap. values are row-major over the axes in order.
struct GriddedDensity {
  int dim = 1;
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  double spacing = 1.0;
  std::array<int, 3> shape{1, 1, 1};
  std::vector<double> values;
  double lipschitz = 0.0;

  std::size_t cell_count() const;
  double cell_volume() const;
  // Trapezoid-rule total mass.
  double total_mass() const;
  // Largest axis-aligned finite-difference slope on the lattice.
  double max_finite_difference_slope() const;
  // Checks shape/values consistency, unit mass within 1e-6, and that the
  // declared constant dominates the lattice slopes.
  void validate() const;
};

struct SmoothingConfig {
  double radius = 0.5;     // ball radius of the smoothing operator
  double w2_budget = 0.1;  // assumed bound: W2(p, q) < w2_budget^2

  void validate() const;
};

// r^d * pi^(d/2) / Gamma(d/2 + 1)
double ball_volume(int dim, double radius);

// Ball average of the density at every lattice point (partial masks at the
// boundary), renormalized to unit mass. The pre-normalization mass is
// reported through `mass_before_renorm` when non-null.
GriddedDensity smooth(const GriddedDensity& density, double radius,
                      double* mass_before_renorm = nullptr);

// Pointwise bound the smoothed p must satisfy:
//   ratio * q_s(x) + (ratio - 1) * 2*radius*L + budget/vol_d(radius - budget)
// where ratio = vol_d(radius)/vol_d(radius - budget). The proof-shaped
// variant groups the middle term as Delta/vol_d(radius - budget); the two are
// algebraically identical and both exposed for comparison.
double theorem2_rhs(double q_smoothed_value, const SmoothingConfig& config,
                    int dim, double lipschitz, bool proof_form = false);

// (1 + budget/(radius - budget))^d for d = 1..max_dim.
std::vector<double> volume_ratio_curve(const SmoothingConfig& config,
                                       int max_dim);

struct VerificationReport {
  long long checked_points = 0;
  long long excluded_boundary_points = 0;
  long long violations = 0;
  double max_violation = 0.0;  // largest p_s - rhs among violations
  double min_slack = 0.0;      // smallest rhs - p_s among passing points
  double max_slack = 0.0;
  long long ball_checks = 0;
  long long ball_violations = 0;
  double ball_min_slack = 0.0;
};

nlohmann::json report_json(const VerificationReport& report,
                           const std::vector<double>& ratio_curve);

// Checks the smoothed-density bound at every interior lattice point and the
// ball-probability inequality p(B_r(x)) <= q(B_{r+eps}(x)) + eps on a
// deterministic subsample of (x, r) pairs. Violations are report content: a
// violation falsifies the supplied budget or Lipschitz constant.
VerificationReport verify_bound(const GriddedDensity& p,
                                const GriddedDensity& q,
                                const SmoothingConfig& config);

}  // namespace sgldlab
