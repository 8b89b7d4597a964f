#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "sgldlab/core_model.hpp"
#include "sgldlab/rng.hpp"

namespace sgldlab {

// Parameters of the propose-test-sample mechanism. epsilon is the per-subquery
// budget (five noisy subqueries in total). strict_n_min keeps the literal
// size gate; the relaxed mode replaces it with the size-consistency term
// n1^(rho2/gamma1) alone, which is the desk-scale configuration used by the
// trend tests (the literal constants only bind asymptotically).
struct PtsParams {
  double epsilon = 1.0;
  double delta = 0.05;
  double x_l = 0.5;
  double x_h = 1.0;
  double alpha = 1.0;
  double beta = 3.0;
  double rho1 = 1.25;
  double rho2 = 0.45;
  double gamma1 = 0.49;
  bool strict_n_min = true;

  void validate() const;
};

enum class PtsOutcome { NullAtStep10, NullAtStep18, Sampled };

std::string to_string(PtsOutcome o);

// Audit trail of one run: raw and noisy counts, the raw and noisy slope, and
// the gate value the final noisy count was tested against.
struct PtsTrace {
  long long n1 = 0;        // input size
  double n1_noisy = 0.0;   // noisy size after the fixed downward shift
  long long v_size = 0;    // |V| after the slope cap
  double n2 = 0.0;         // noisy |V|
  double m = 0.0;          // least-squares slope over V
  double m_noisy = 0.0;
  long long w_size = 0;    // |W| after the slope window
  double n_w = 0.0;        // noisy |W|
  double n_min = 0.0;
  PtsOutcome outcome = PtsOutcome::NullAtStep10;
};

nlohmann::json trace_json(const PtsTrace& trace);

// One draw from Laplace(0, scale), deterministic given the generator state.
double laplace_sample(double scale, Rng& rng);

// Minimum cleaned-set size for the release gate. Every max-term is evaluated
// literally; the noisy slope feeds the two m-dependent terms.
double n_min(const PtsParams& params, long long n1, double m_noisy);

// Laplace scale numerator for the noisy slope:
//   n1_noisy^rho1 * (2(n2-1) x_h^2 x_l^2 + x_h^4) / (n2 (n2-1) x_l^4).
// Requires n2 > 1 (the mechanism already returned null otherwise).
double m_sensitivity(double n1_noisy, double n2, const PtsParams& params);

struct PtsResult {
  std::optional<double> sample;
  PtsTrace trace;
};

// The mechanism: clip x into [x_l, x_h] and y up to 0, privately estimate the
// size, cap the slopes, privately estimate the least-squares slope, keep the
// points near it, and release one exact posterior sample if the cleaned set is
// large enough. Null returns are values, not errors.
PtsResult propose_test_sample(const Dataset& data, const PtsParams& params,
                              Rng& rng);

// Same mechanism with the final exact draw replaced by a finite chain of
// `steps` noisy gradient updates at step size 1/(alpha + n1*x_h^2*beta)^2.
PtsResult propose_test_sample_sgld(const Dataset& data, const PtsParams& params,
                                   long long steps, Rng& rng);

}  // namespace sgldlab
