#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "sgldlab/core_model.hpp"
#include "sgldlab/numeric.hpp"
#include "sgldlab/posterior_privacy.hpp"

namespace sgldlab {

// Recurrence constants of the cyclic sampler on the canonical database pair,
// with the step size eta = 2/(alpha + n*x_h^2*beta)^2. The contraction
// deficits 1-lambda and 1-lambda_hat are kept explicitly because they are
// ~1e-6 at realistic sizes and all powers/sums must be formed from them.
struct SgldCoefficients {
  double eta = 0.0;
  num::ContractionFactor lam;      // per-step factor on the unmodified point
  num::ContractionFactor lam_hat;  // per-step factor on the modified point
  double rho = 0.0;                // drift on the unmodified point
  double rho_hat = 0.0;            // drift on the modified point (= rho/4)
  long long n = 0;

  double lambda() const { return lam.value(); }
  double lambda_hat() const { return lam_hat.value(); }
  // log of the per-epoch multiplier A = lambda_hat * lambda^(n-1)
  double log_epoch_factor() const {
    return lam_hat.log_lam + static_cast<double>(n - 1) * lam.log_lam;
  }
};

SgldCoefficients coefficients(const DomainSpec& spec, const ModelParams& model);

// Exact distribution of the iterate at an epoch boundary: a Gaussian on the
// uniform database and one Gaussian per cyclic position r of the modified
// record on the adjacent database.
struct EpochState {
  long long epoch = 0;
  Gaussian1D d1;
  std::vector<Gaussian1D> d2_components;  // index r-1, r = 1..n
};

EpochState prior_state(const DomainSpec& spec, const ModelParams& model);
EpochState advance_epoch(const EpochState& state, const SgldCoefficients& coeff,
                         const DomainSpec& spec);
EpochState state_at_epoch(long long k, const SgldCoefficients& coeff,
                          const DomainSpec& spec, const ModelParams& model);

// (1/n) * sum_r (mu - mu_r)^2 / var_r -- the separation indicator between the
// two sampling distributions.
double gap_metric(const EpochState& state);

struct CriticalEpochReport {
  double k_dot = 0.0;             // fractional critical epoch
  long long k_star = 0;           // ceil(k_dot)
  long long violation_step = 0;   // T = (k_star + 1) * n
  double v1 = 6.0;                // max{6, 1 + 2*exp(1/(x_h^2*beta))}
  std::optional<double> epsilon_prime;  // certified level, filled by callers
};

// Epoch at which the data-noise and prior contributions to the iterate
// variance are comparable. Throws HypothesisViolated when n is below one of
// the three lower bounds, NonPositiveKdot when the formula comes out <= 0.
CriticalEpochReport critical_epoch(const SgldCoefficients& coeff,
                                   const DomainSpec& spec,
                                   const ModelParams& model);

// Closed-form lower bound on min_r (mu - mu_r) at epoch k+1:
//   lambda^(n-1) * (n c x_h^2 b)/(a + n x_h^2 b) * lambda^(k(n-1))
//     * (lambda_hat^(k+1) - lambda^(k+1)).
double mean_gap_lower_bound(long long k, const SgldCoefficients& coeff,
                            const DomainSpec& spec, const ModelParams& model);

// Exponential bound on the adjacent-database mass above the uniform-database
// mean: (1/n) sum_r exp(-(mu-mu_r)^2/var_r), clamped to 1. This is the printed
// bound, without the conventional 1/2 in the exponent; the exact tail below
// makes the difference observable.
double chernoff_mass_bound(const EpochState& state);
double exact_tail_mass(const EpochState& state);

// Certified violation level at the critical step:
//   exp(-2/(x_h^2 b)) * (a/v1) * (3/(32 x_h^2 b))^2 * (c/n)^2 + ln(0.5-delta).
// Negative values mean nothing is certified at this size.
double violation_epsilon(const CriticalEpochReport& report,
                         const DomainSpec& spec, const ModelParams& model,
                         double delta);

struct CertificateResult {
  long long step = 0;
  double epsilon_tested = 0.0;
  double delta = 0.0;
  double p1 = 0.5;
  double p2_exact = 0.0;
  double p2_chernoff = 0.0;
  bool violated = false;           // p1 > e^eps * p2_exact + delta
  bool violated_chernoff = false;  // p1 > e^eps * p2_chernoff + delta
  double exact_margin = 0.0;       // p1 - e^eps * p2_exact - delta
  double chernoff_margin = 0.0;
};

// Evaluates the distinguishing set S = {s > mu_T} on the epoch-(k_star+1)
// state: exact masses on both databases plus the exponential bound.
CertificateResult certify_violation(const CriticalEpochReport& report,
                                    const EpochState& state_at_T,
                                    double epsilon, double delta);

// Construction of a full counterexample instance: a domain size n_p and slope
// center c_p = n_p^gamma2 such that one posterior sample is (epsilon, delta)-
// private while the chain at step T is not (epsilon_prime, delta)-private.
// All lower-bound terms are evaluated literally; x_l is fixed to x_h/2.
struct CounterexampleInstance {
  DomainSpec spec;
  CriticalEpochReport report;
  double nu1 = 0.0;
  double n1 = 0.0, n2 = 0.0, n3 = 0.0;  // the three groups of lower bounds
  double n_target = 0.0;                // the epsilon_prime-driven bound
};

// Size planning without building the instance: every lower bound evaluated
// literally, plus the size the requested violation level needs.
struct CounterexamplePlan {
  double nu1 = 0.0;
  double n1 = 0.0, n2 = 0.0, n3 = 0.0;
  double n_target = 0.0;   // bound driven by epsilon_prime
  double n_required = 0.0; // max of all bounds
};
CounterexamplePlan plan_counterexample(double epsilon, double epsilon_prime,
                                       double delta, const DomainSpec& base,
                                       const ModelParams& model);

CounterexampleInstance instantiate_counterexample(double epsilon,
                                                  double epsilon_prime,
                                                  double delta,
                                                  const DomainSpec& base,
                                                  const ModelParams& model,
                                                  double max_n = 1e7);

// Largest instance of the same construction that fits the cap, regardless of
// the certified-level formula (used when the requested epsilon_prime needs a
// size beyond the cap). Throws InfeasibleTarget when even the privacy lower
// bounds exceed the cap.
CounterexampleInstance instantiate_largest_within(double epsilon, double delta,
                                                  const DomainSpec& base,
                                                  const ModelParams& model,
                                                  double max_n = 1e7);

nlohmann::json certificate_json(const CertificateResult& cert,
                                double epsilon_prime);

// Per-epoch curve export: epoch,step,gap_metric,d1_mean,d1_var,
// min_component_mean,max_component_mean with step = epoch*n.
void write_gap_curve_csv(const std::filesystem::path& path,
                         const std::vector<EpochState>& states, long long n);

struct GapCurveRow {
  long long epoch = 0;
  long long step = 0;
  double gap = 0.0;
  double d1_mean = 0.0;
  double d1_var = 0.0;
  double min_component_mean = 0.0;
  double max_component_mean = 0.0;
};
GapCurveRow gap_curve_row(const EpochState& state, long long n);

}  // namespace sgldlab
