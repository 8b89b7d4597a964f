#include "sgldlab/dp_mechanisms.hpp"

#include <algorithm>
#include <cmath>

#include "sgldlab/monte_carlo.hpp"
#include "sgldlab/posterior_privacy.hpp"

namespace sgldlab {

void PtsParams::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("pts: epsilon must be > 0");
  if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("pts: delta must lie in (0, 0.5)");
  if (!(x_l > 0.0 && x_h > x_l)) throw ConfigError("pts: need 0 < x_l < x_h");
  if (!(alpha > 0.0)) throw ConfigError("pts: alpha must be > 0");
  if (!(beta >= 3.0 / (x_h * x_h))) throw ConfigError("pts: beta must be >= 3/x_h^2");
  if (!(rho1 > 1.0 && rho1 < 1.5)) throw ConfigError("pts: rho1 must lie in (1, 3/2)");
  if (!(rho2 > 0.0 && rho2 < 0.5)) throw ConfigError("pts: rho2 must lie in (0, 1/2)");
  if (!(gamma1 > rho2 && gamma1 < 0.5))
    throw ConfigError("pts: gamma1 must lie in (rho2, 1/2)");
}

std::string to_string(PtsOutcome o) {
  switch (o) {
    case PtsOutcome::NullAtStep10: return "null_at_step10";
    case PtsOutcome::NullAtStep18: return "null_at_step18";
    case PtsOutcome::Sampled: return "sampled";
  }
  return "?";
}

nlohmann::json trace_json(const PtsTrace& t) {
  return nlohmann::json{{"n1", t.n1},           {"n1_noisy", t.n1_noisy},
                        {"v_size", t.v_size},   {"n2", t.n2},
                        {"m", t.m},             {"m_noisy", t.m_noisy},
                        {"w_size", t.w_size},   {"n_w", t.n_w},
                        {"n_min", t.n_min},     {"outcome", to_string(t.outcome)}};
}

double laplace_sample(double scale, Rng& rng) {
  if (!(scale > 0.0)) throw ConfigError("laplace_sample: scale must be > 0");
  return rng.laplace(scale);
}

double n_min(const PtsParams& p, long long n1, double m_noisy) {
  p.validate();
  const double nu = 2.0 * std::log(1.0 / p.delta) / p.epsilon + 1.0;
  const double ratio = (p.x_h * p.x_h) / (p.x_l * p.x_l);
  const double xh2 = p.x_h * p.x_h;
  const double xh4 = xh2 * xh2;
  const double xl2 = p.x_l * p.x_l;
  const double mixed = xh2 * p.alpha + xh4 * p.beta;
  const double xl2b = xl2 * p.beta;
  const double slope_term = (xh2 * p.beta) * mixed / (0.9 * xl2b * xl2b);
  const double quad_term = mixed * mixed / (0.9 * xl2 * xl2 * xl2 * p.beta);
  // A negative noisy slope contributes no constraint through the m-terms.
  const double m_pos = std::max(m_noisy, 0.0);

  const double size_consistency =
      std::pow(static_cast<double>(n1), p.rho2 / p.gamma1);
  if (!p.strict_n_min) return size_consistency;

  const double nb1 = std::max(
      {1.0 + ratio * 8.0 / p.epsilon,
       1.0 + nu * ratio * (1.0 + 8.0 * (nu - 1.0) / p.epsilon),
       std::pow(16.0 * nu * p.beta * xh4 / (0.9 * p.epsilon * xl2),
                1.0 / (1.0 - 2.0 * p.gamma1)),
       std::pow((32.0 * nu * p.beta / p.epsilon) * slope_term * m_pos,
                1.0 / (2.0 - p.gamma1)),
       std::pow((32.0 * nu * p.beta / p.epsilon) * slope_term,
                1.0 / (2.0 - 2.0 * p.gamma1)),
       std::pow((8.0 * nu / p.epsilon) * quad_term * m_pos, 2.0 / 3.0),
       std::pow((8.0 * nu / p.epsilon) * quad_term, 1.0 / (3.0 - 2.0 * p.gamma1))});
  const double nb2 =
      std::max(1.0 + ratio * 10.0 * nu / p.beta, 1.0 + nu * ratio);
  return std::max({nb1, nb2, size_consistency});
}

double m_sensitivity(double n1_noisy, double n2, const PtsParams& p) {
  if (!(n2 > 1.0))
    throw DegenerateCount("m_sensitivity: noisy count n2 must exceed 1");
  const double cap = n1_noisy > 0.0 ? std::pow(n1_noisy, p.rho1) : 0.0;
  const double xh2 = p.x_h * p.x_h;
  const double xl2 = p.x_l * p.x_l;
  return cap * (2.0 * (n2 - 1.0) * xh2 * xl2 + xh2 * xh2) /
         (n2 * (n2 - 1.0) * xl2 * xl2);
}

namespace {

struct Steps1To18 {
  PtsTrace trace;
  Dataset cleaned;  // W, in input order
  bool released = false;
};

// The mechanism through the release gate; the two variants differ only in
// step 19, so they share every random draw up to here.
Steps1To18 run_steps_1_to_18(const Dataset& data, const PtsParams& p, Rng& rng) {
  p.validate();
  Steps1To18 out;
  PtsTrace& t = out.trace;
  t.n1 = static_cast<long long>(data.size());
  const double shift = std::log(1.0 / (2.0 * p.delta)) / p.epsilon;
  const double lap_scale = 1.0 / p.epsilon;

  // steps 2-4: clip x into [x_l, x_h] (max then min, as specified), y up to 0
  Dataset clipped = data;
  for (DataPoint& pt : clipped.points) {
    pt.x = std::max(pt.x, p.x_l);
    pt.x = std::min(pt.x, p.x_h);
    pt.y = std::max(pt.y, 0.0);
  }

  // step 6: noisy size
  t.n1_noisy = static_cast<double>(t.n1) - shift + rng.laplace(lap_scale);

  // step 7: one-sided slope cap (a nonpositive noisy size keeps nothing)
  const double cap = t.n1_noisy > 0.0 ? std::pow(t.n1_noisy, p.rho1) : -1.0;
  Dataset v;
  for (const DataPoint& pt : clipped.points)
    if (pt.y / pt.x <= cap) v.points.push_back(pt);
  t.v_size = static_cast<long long>(v.size());

  // steps 8-11: noisy filtered size, bail if degenerate
  t.n2 = static_cast<double>(t.v_size) - shift + rng.laplace(lap_scale);
  if (t.n2 <= 1.0) {
    t.outcome = PtsOutcome::NullAtStep10;
    return out;
  }

  // step 12: ratio-of-sums slope over V (0 when V is empty)
  const SufficientStats stats = SufficientStats::of(v);
  t.m = stats.z > 0.0 ? stats.q / stats.z : 0.0;

  // step 13: noisy slope
  const double sens = m_sensitivity(t.n1_noisy, t.n2, p);
  t.m_noisy = t.m + (sens > 0.0 ? rng.laplace(sens / p.epsilon) : 0.0);

  // step 14: slope window around the noisy slope
  const double window = std::pow(t.n2, p.rho2);
  for (const DataPoint& pt : v.points)
    if (std::fabs(pt.y / pt.x - t.m_noisy) <= window)
      out.cleaned.points.push_back(pt);
  t.w_size = static_cast<long long>(out.cleaned.size());

  // steps 15-18: noisy size against the release gate
  t.n_w = static_cast<double>(t.w_size) - shift + rng.laplace(lap_scale);
  t.n_min = n_min(p, t.n1, t.m_noisy);
  if (t.n_w < t.n_min) {
    t.outcome = PtsOutcome::NullAtStep18;
    return out;
  }
  t.outcome = PtsOutcome::Sampled;
  out.released = true;
  return out;
}

ModelParams pts_model(const PtsParams& p) { return ModelParams{p.alpha, p.beta}; }

}  // namespace

PtsResult propose_test_sample(const Dataset& data, const PtsParams& params,
                              Rng& rng) {
  Steps1To18 st = run_steps_1_to_18(data, params, rng);
  PtsResult res{std::nullopt, st.trace};
  if (!st.released) return res;
  // step 19: one exact posterior draw over the cleaned set
  const Gaussian1D post = posterior(st.cleaned, pts_model(params));
  res.sample = rng.normal(post.mean, post.stddev());
  return res;
}

PtsResult propose_test_sample_sgld(const Dataset& data, const PtsParams& params,
                                   long long steps, Rng& rng) {
  if (steps < 1) throw ConfigError("propose_test_sample_sgld: steps must be >= 1");
  Steps1To18 st = run_steps_1_to_18(data, params, rng);
  PtsResult res{std::nullopt, st.trace};
  if (!st.released) return res;
  if (st.cleaned.size() == 0) {  // empty release set: the chain is prior-only
    res.sample = rng.normal(0.0, std::sqrt(1.0 / params.alpha));
    return res;
  }
  ChainConfig cfg;
  const double big = params.alpha + static_cast<double>(data.size()) *
                                        params.x_h * params.x_h * params.beta;
  cfg.eta = 1.0 / (big * big);
  cfg.steps = steps;
  cfg.batch = 1;
  cfg.shuffle_once = true;  // cyclic order starts at a uniform position
  cfg.seed = rng.next_u64();
  res.sample = run_chain(st.cleaned, pts_model(params), cfg, /*stream=*/0);
  return res;
}

}  // namespace sgldlab
