#include "sgldlab/posterior_privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sgldlab {

Gaussian1D posterior(const SufficientStats& stats, const ModelParams& model) {
  model.validate();
  const double precision = model.alpha + model.beta * stats.z;
  return Gaussian1D{model.beta * stats.q / precision, 1.0 / precision};
}

Gaussian1D posterior(const Dataset& data, const ModelParams& model) {
  return posterior(SufficientStats::of(data), model);
}

double renyi_divergence_gaussians(const Gaussian1D& p, const Gaussian1D& q,
                                  double nu) {
  if (!(nu > 1.0)) throw ConfigError("renyi divergence: order nu must exceed 1");
  const double var_star = nu * q.variance + (1.0 - nu) * p.variance;
  if (!(var_star > 0.0))
    throw DivergenceUndefined(
        "renyi divergence: nu*var_q + (1-nu)*var_p is nonpositive");
  const double gap = p.mean - q.mean;
  return 0.5 * std::log(q.variance / p.variance) +
         std::log(q.variance / var_star) / (2.0 * (nu - 1.0)) +
         nu * gap * gap / (2.0 * var_star);
}

bool rdp_hypothesis_holds(const DomainSpec& spec, const ModelParams& model,
                          double nu) {
  const double ratio = (spec.x_h * spec.x_h) / (spec.x_l * spec.x_l);
  const double n = static_cast<double>(spec.n);
  return n > 1.0 + 10.0 * ratio * nu / model.beta && n > 1.0 + nu * ratio;
}

RdpTermBreakdown posterior_rdp_terms(const DomainSpec& spec,
                                     const ModelParams& model, double nu) {
  spec.validate(model);
  if (!(nu > 1.0)) throw ConfigError("posterior_rdp_terms: nu must exceed 1");
  const double n = static_cast<double>(spec.n);
  const double ratio = (spec.x_h * spec.x_h) / (spec.x_l * spec.x_l);
  if (!(n > 1.0 + 10.0 * ratio * nu / model.beta))
    throw HypothesisViolated("n <= 1 + 10*(x_h^2/x_l^2)*(nu/beta)");
  if (!(n > 1.0 + nu * ratio))
    throw HypothesisViolated("n <= 1 + nu*x_h^2/x_l^2");

  const double xh2 = spec.x_h * spec.x_h;
  const double xl2 = spec.x_l * spec.x_l;
  const double xh4 = xh2 * xh2;
  const double a = model.alpha, b = model.beta;
  const double slope_pow = std::exp(spec.gamma1 * std::log(n));  // n^gamma1
  const double mixed = xh2 * a + xh4 * b;
  const double nine_tenths = 0.9;

  RdpTermBreakdown out;
  out.terms[0] = xh2 / (2.0 * (n - 1.0) * xl2);
  out.terms[1] = 0.5 * (nu - 1.0) * nu * xh2 / ((n - 1.0) * xl2 - nu * xh2);
  out.terms[2] = 2.0 * nu * b * xh4 /
                 (nine_tenths * std::exp((1.0 - 2.0 * spec.gamma1) * std::log(n)) * xl2);
  out.terms[3] = 2.0 * nu * b * (xh2 * b) * mixed /
                 (nine_tenths * (xl2 * b) * (xl2 * b)) * (spec.c + slope_pow) /
                 std::exp((2.0 - spec.gamma1) * std::log(n));
  out.terms[4] = 0.5 * nu * mixed * mixed /
                 (nine_tenths * xl2 * xl2 * xl2 * b) *
                 (spec.c + slope_pow) * (spec.c + slope_pow) / (n * n * n);
  out.total = 0.0;
  for (double t : out.terms) out.total += t;
  return out;
}

RdpBound posterior_rdp_epsilon(const DomainSpec& spec, const ModelParams& model,
                               double nu) {
  return RdpBound{nu, posterior_rdp_terms(spec, model, nu).total};
}

PrivacyBudget rdp_to_adp(const RdpBound& bound, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("rdp_to_adp: delta must lie in (0, 1)");
  return PrivacyBudget{bound.epsilon1 + std::log(1.0 / delta) / (bound.nu - 1.0),
                       delta};
}

AdpResult posterior_adp(const DomainSpec& spec, const ModelParams& model,
                        double delta, double eps_ref) {
  if (!(delta > 0.0 && delta < 0.5))
    throw ConfigError("posterior_adp: delta must lie in (0, 0.5)");
  if (!(eps_ref > 0.0)) throw ConfigError("posterior_adp: eps_ref must be > 0");
  const double log_inv_delta = std::log(1.0 / delta);

  std::vector<double> orders;
  for (int k = -10; k <= 20; ++k)
    orders.push_back(1.0 + std::ldexp(log_inv_delta / eps_ref, k));
  orders.push_back(1.0 + 2.0 * log_inv_delta / eps_ref);

  bool found = false;
  AdpResult best;
  for (double nu : orders) {
    if (!(nu > 1.0) || !rdp_hypothesis_holds(spec, model, nu)) continue;
    const RdpTermBreakdown terms = posterior_rdp_terms(spec, model, nu);
    const double eps = terms.total + log_inv_delta / (nu - 1.0);
    if (!found || eps < best.budget.epsilon) {
      best.budget = PrivacyBudget{eps, delta};
      best.bound = RdpBound{nu, terms.total};
      best.terms = terms;
      found = true;
    }
  }
  if (!found)
    throw NoAdmissibleNu("posterior_adp: no order on the grid satisfies the"
                         " admissibility hypothesis for n = " +
                         std::to_string(spec.n));
  return best;
}

double worst_case_renyi_oracle(const DomainSpec& spec, const ModelParams& model,
                               double nu, int grid_size) {
  spec.validate(model);
  if (grid_size < 2) throw ConfigError("worst_case_renyi_oracle: grid_size >= 2");
  const double tol = spec.slope_tolerance();
  const double slope_lo = std::max(spec.c - tol, 1e-12);
  const double slope_hi = spec.c + tol;

  std::vector<DataPoint> grid;
  grid.reserve(static_cast<std::size_t>(grid_size) * grid_size + 1);
  for (int i = 0; i < grid_size; ++i) {
    const double x = spec.x_l + (spec.x_h - spec.x_l) * i / (grid_size - 1);
    for (int j = 0; j < grid_size; ++j) {
      const double s = slope_lo + (slope_hi - slope_lo) * j / (grid_size - 1);
      grid.push_back(DataPoint{x, s * x});
    }
  }
  grid.push_back(DataPoint{0.0, 0.0});  // record removal

  const DataPoint corners[4] = {{spec.x_l, slope_lo * spec.x_l},
                                {spec.x_l, slope_hi * spec.x_l},
                                {spec.x_h, slope_lo * spec.x_h},
                                {spec.x_h, slope_hi * spec.x_h}};
  double worst = 0.0;
  for (const DataPoint& base : corners) {
    SufficientStats common;
    common.z = (spec.n - 1) * base.x * base.x;
    common.q = (spec.n - 1) * base.x * base.y;
    for (const DataPoint& p : grid) {
      SufficientStats sp = common;
      sp.add(p);
      const Gaussian1D post_p = posterior(sp, model);
      for (const DataPoint& q : grid) {
        if (p.x == q.x && p.y == q.y) continue;
        SufficientStats sq = common;
        sq.add(q);
        const Gaussian1D post_q = posterior(sq, model);
        worst = std::max(worst, renyi_divergence_gaussians(post_p, post_q, nu));
      }
    }
  }
  return worst;
}

nlohmann::json adp_report_json(const AdpResult& result, double delta) {
  return nlohmann::json{{"epsilon", result.budget.epsilon},
                        {"delta", delta},
                        {"nu", result.bound.nu},
                        {"epsilon1", result.bound.epsilon1},
                        {"terms", result.terms.terms}};
}

}  // namespace sgldlab
