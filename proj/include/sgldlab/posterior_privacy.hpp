#pragma once

#include <array>

#include <json.hpp>

#include "sgldlab/core_model.hpp"

namespace sgldlab {

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

// (nu, epsilon1) Renyi privacy bound, nu > 1.
struct RdpBound {
  double nu = 2.0;
  double epsilon1 = 0.0;
};

// Conjugate posterior of the scalar linear model:
//   N( beta*q / (alpha + beta*z), 1 / (alpha + beta*z) ).
Gaussian1D posterior(const SufficientStats& stats, const ModelParams& model);
Gaussian1D posterior(const Dataset& data, const ModelParams& model);

// Renyi divergence of order nu > 1 between one-dimensional Gaussians,
//   D_nu(p||q) = ln(sd_q/sd_p) + ln(var_q/var*)/(2(nu-1)) + nu*(mean gap)^2/(2 var*),
// with var* = nu*var_q + (1-nu)*var_p. Throws DivergenceUndefined when
// var* <= 0.
double renyi_divergence_gaussians(const Gaussian1D& p, const Gaussian1D& q,
                                  double nu);

// The five-term closed-form bound on the worst-case order-nu divergence over
// adjacent databases in the domain. Valid only when
//   n > max{ 1 + 10*(x_h^2/x_l^2)*(nu/beta), 1 + nu*x_h^2/x_l^2 };
// otherwise HypothesisViolated names the failed bound.
struct RdpTermBreakdown {
  std::array<double, 5> terms{};
  double total = 0.0;
};
RdpTermBreakdown posterior_rdp_terms(const DomainSpec& spec,
                                     const ModelParams& model, double nu);
RdpBound posterior_rdp_epsilon(const DomainSpec& spec, const ModelParams& model,
                               double nu);

bool rdp_hypothesis_holds(const DomainSpec& spec, const ModelParams& model,
                          double nu);

// (nu, eps1)-RDP implies (eps1 + ln(1/delta)/(nu-1), delta)-DP.
PrivacyBudget rdp_to_adp(const RdpBound& bound, double delta);

// Minimizes eps1(nu) + ln(1/delta)/(nu-1) over a geometric grid of admissible
// orders nu = 1 + 2^k * ln(1/delta)/eps_ref, k = -10..20, plus the analytic
// point nu = 1 + 2 ln(1/delta)/eps_ref. Throws NoAdmissibleNu when the whole
// grid fails the hypothesis.
struct AdpResult {
  PrivacyBudget budget;
  RdpBound bound;
  RdpTermBreakdown terms;
};
AdpResult posterior_adp(const DomainSpec& spec, const ModelParams& model,
                        double delta, double eps_ref = 1.0);

// Brute-force check that the closed-form bound dominates reality: maximizes
// the divergence over adjacent pairs built from n-1 identical boundary points
// plus one grid-searched point, swapped against every grid point including the
// zero record (record removal).
double worst_case_renyi_oracle(const DomainSpec& spec, const ModelParams& model,
                               double nu, int grid_size);

// Machine-readable report: {epsilon, delta, nu, epsilon1, terms: [t1..t5]}.
nlohmann::json adp_report_json(const AdpResult& result, double delta);

}  // namespace sgldlab
