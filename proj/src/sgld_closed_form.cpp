#include "sgldlab/sgld_closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sgldlab {

namespace {

double epoch_drift(const SgldCoefficients& co, long long r) {
  // Three segments of one epoch in r-order: r-1 unmodified points, the
  // modified point, n-r unmodified points. Every term is nonnegative.
  const double lam_nr = co.lam.pow(static_cast<double>(co.n - r));
  return co.rho * co.lambda_hat() * lam_nr * co.lam.geom_sum(static_cast<double>(r - 1)) +
         co.rho_hat * lam_nr +
         co.rho * co.lam.geom_sum(static_cast<double>(co.n - r));
}

double epoch_noise(const SgldCoefficients& co, long long r) {
  const double lam_nr = co.lam.pow(static_cast<double>(co.n - r));
  const double lh = co.lambda_hat();
  return co.eta * (lh * lh * lam_nr * lam_nr * co.lam.geom_sum_sq(static_cast<double>(r - 1)) +
                   lam_nr * lam_nr +
                   co.lam.geom_sum_sq(static_cast<double>(co.n - r)));
}

double xh2beta(const DomainSpec& spec, const ModelParams& model) {
  return spec.x_h * spec.x_h * model.beta;
}

}  // namespace

SgldCoefficients coefficients(const DomainSpec& spec, const ModelParams& model) {
  spec.validate(model);
  SgldCoefficients co;
  co.n = spec.n;
  const double s = xh2beta(spec, model);
  const double big = model.alpha + static_cast<double>(spec.n) * s;
  co.eta = 2.0 / (big * big);
  // 1 - lambda = (eta/2)(alpha + n x_h^2 beta) = 1/big exactly
  co.lam = num::ContractionFactor::from_one_minus(1.0 / big);
  co.lam_hat = num::ContractionFactor::from_one_minus(
      (model.alpha + static_cast<double>(spec.n) * s / 4.0) / (big * big));
  co.rho = (co.eta / 2.0) * static_cast<double>(spec.n) * spec.c * s;
  co.rho_hat = co.rho / 4.0;
  return co;
}

EpochState prior_state(const DomainSpec& spec, const ModelParams& model) {
  spec.validate(model);
  EpochState st;
  st.epoch = 0;
  st.d1 = Gaussian1D{0.0, 1.0 / model.alpha};
  st.d2_components.assign(static_cast<std::size_t>(spec.n),
                          Gaussian1D{0.0, 1.0 / model.alpha});
  return st;
}

EpochState advance_epoch(const EpochState& state, const SgldCoefficients& coeff,
                         const DomainSpec& spec) {
  if (state.d2_components.size() != static_cast<std::size_t>(spec.n))
    throw ConfigError("advance_epoch: state component count != n");
  EpochState next;
  next.epoch = state.epoch + 1;

  const double mult1 = coeff.lam.pow(static_cast<double>(coeff.n));
  next.d1.mean = mult1 * state.d1.mean +
                 coeff.rho * coeff.lam.geom_sum(static_cast<double>(coeff.n));
  next.d1.variance = mult1 * mult1 * state.d1.variance +
                     coeff.eta * coeff.lam.geom_sum_sq(static_cast<double>(coeff.n));

  const double mult2 = std::exp(coeff.log_epoch_factor());
  next.d2_components.resize(state.d2_components.size());
  for (long long r = 1; r <= coeff.n; ++r) {
    const Gaussian1D& prev = state.d2_components[static_cast<std::size_t>(r - 1)];
    Gaussian1D& out = next.d2_components[static_cast<std::size_t>(r - 1)];
    out.mean = mult2 * prev.mean + epoch_drift(coeff, r);
    out.variance = mult2 * mult2 * prev.variance + epoch_noise(coeff, r);
  }
  return next;
}

EpochState state_at_epoch(long long k, const SgldCoefficients& coeff,
                          const DomainSpec& spec, const ModelParams& model) {
  if (k < 0) throw ConfigError("state_at_epoch: k must be >= 0");
  EpochState st = prior_state(spec, model);
  st.epoch = k;
  if (k == 0) return st;

  const double kn = static_cast<double>(k) * static_cast<double>(coeff.n);
  st.d1.mean = coeff.rho * coeff.lam.geom_sum(kn);
  st.d1.variance = coeff.lam.pow(2.0 * kn) / model.alpha +
                   coeff.eta * coeff.lam.geom_sum_sq(kn);

  // Geometric sums of the per-epoch multiplier A = lambda_hat * lambda^(n-1).
  const double log_a = coeff.log_epoch_factor();
  const double kd = static_cast<double>(k);
  const double sum_a = -std::expm1(kd * log_a) / (-std::expm1(log_a));
  const double sum_a2 = -std::expm1(2.0 * kd * log_a) / (-std::expm1(2.0 * log_a));
  const double a_pow_2k = std::exp(2.0 * kd * log_a);

  for (long long r = 1; r <= coeff.n; ++r) {
    Gaussian1D& g = st.d2_components[static_cast<std::size_t>(r - 1)];
    g.mean = epoch_drift(coeff, r) * sum_a;
    g.variance = a_pow_2k / model.alpha + epoch_noise(coeff, r) * sum_a2;
  }
  return st;
}

double gap_metric(const EpochState& state) {
  if (state.d2_components.empty()) throw ConfigError("gap_metric: empty state");
  double acc = 0.0;
  for (const Gaussian1D& g : state.d2_components) {
    const double gap = state.d1.mean - g.mean;
    acc += gap * gap / g.variance;
  }
  return acc / static_cast<double>(state.d2_components.size());
}

CriticalEpochReport critical_epoch(const SgldCoefficients& coeff,
                                   const DomainSpec& spec,
                                   const ModelParams& model) {
  const double s = xh2beta(spec, model);
  const double a = model.alpha;
  const double n = static_cast<double>(spec.n);
  if (!(n > a / s)) throw HypothesisViolated("n <= alpha/(x_h^2*beta)");
  if (!(n > (a / s) * (std::exp(2.0 / s) - 2.0) + 1.0 / (2.0 * s)))
    throw HypothesisViolated(
        "n <= (alpha/(x_h^2*beta))*(e^{2/(x_h^2*beta)}-2) + 1/(2*x_h^2*beta)");
  if (!(n > 1.0 / (2.0 * a * s) - 1.0 / s))
    throw HypothesisViolated("n <= 1/(2*alpha*x_h^2*beta) - 1/(x_h^2*beta)");

  const double one_minus_lam_sq = coeff.lam.d * (2.0 - coeff.lam.d);
  const double arg = 1.0 / (1.0 + one_minus_lam_sq / (a * coeff.eta));
  const double k_dot =
      std::log(arg) / coeff.lam.log_lam / (2.0 * n) - 1.0;
  if (!(k_dot > 0.0))
    throw NonPositiveKdot("critical epoch evaluated to " + std::to_string(k_dot));

  CriticalEpochReport rep;
  rep.k_dot = k_dot;
  rep.k_star = static_cast<long long>(std::ceil(k_dot));
  rep.violation_step = (rep.k_star + 1) * spec.n;
  rep.v1 = std::max(6.0, 1.0 + 2.0 * std::exp(1.0 / s));
  return rep;
}

double mean_gap_lower_bound(long long k, const SgldCoefficients& coeff,
                            const DomainSpec& spec, const ModelParams& model) {
  if (k < 0) throw ConfigError("mean_gap_lower_bound: k must be >= 0");
  const double s = xh2beta(spec, model);
  const double n = static_cast<double>(spec.n);
  const double scale = n * spec.c * s / (model.alpha + n * s);
  const double kd = static_cast<double>(k);
  // lambda_hat^{k+1} - lambda^{k+1}, formed without cancellation
  const double diff = coeff.lam.pow(kd + 1.0) *
                      std::expm1((kd + 1.0) * (coeff.lam_hat.log_lam - coeff.lam.log_lam));
  return coeff.lam.pow(n - 1.0) * scale * coeff.lam.pow(kd * (n - 1.0)) * diff;
}

double chernoff_mass_bound(const EpochState& state) {
  double acc = 0.0;
  for (const Gaussian1D& g : state.d2_components) {
    const double gap = state.d1.mean - g.mean;
    const double expo = gap * gap / g.variance;
    acc += expo > 745.0 ? 0.0 : std::exp(-expo);
  }
  return std::min(1.0, acc / static_cast<double>(state.d2_components.size()));
}

double exact_tail_mass(const EpochState& state) {
  double acc = 0.0;
  for (const Gaussian1D& g : state.d2_components)
    acc += num::normal_sf((state.d1.mean - g.mean) / g.stddev());
  return acc / static_cast<double>(state.d2_components.size());
}

double violation_epsilon(const CriticalEpochReport& report,
                         const DomainSpec& spec, const ModelParams& model,
                         double delta) {
  if (!(delta < 0.5)) throw DeltaTooLarge("violation level needs delta < 0.5");
  const double s = xh2beta(spec, model);
  const double ratio = spec.c / static_cast<double>(spec.n);
  const double coeff = 3.0 / (32.0 * s);
  return std::exp(-2.0 / s) * (model.alpha / report.v1) * coeff * coeff * ratio *
             ratio +
         std::log(0.5 - delta);
}

CertificateResult certify_violation(const CriticalEpochReport& report,
                                    const EpochState& state_at_T,
                                    double epsilon, double delta) {
  if (!(delta > 0.0 && delta < 0.5))
    throw DeltaTooLarge("certificate needs delta in (0, 0.5)");
  CertificateResult cert;
  cert.step = report.violation_step;
  cert.epsilon_tested = epsilon;
  cert.delta = delta;
  cert.p1 = 0.5;  // the uniform-database iterate is Gaussian, S sits above its mean
  cert.p2_exact = exact_tail_mass(state_at_T);
  cert.p2_chernoff = chernoff_mass_bound(state_at_T);
  const double amp = std::exp(epsilon);
  cert.exact_margin = cert.p1 - amp * cert.p2_exact - delta;
  cert.chernoff_margin = cert.p1 - amp * cert.p2_chernoff - delta;
  cert.violated = cert.exact_margin > 0.0;
  cert.violated_chernoff = cert.chernoff_margin > 0.0;
  return cert;
}

namespace {

struct InstanceBounds {
  double nu1, n1, n2, n3;
};

InstanceBounds privacy_size_bounds(double epsilon, double delta, double gamma1,
                                   double gamma2, double x_h,
                                   const ModelParams& model) {
  const double a = model.alpha, b = model.beta;
  const double x_l = x_h / 2.0;
  const double s = x_h * x_h * b;
  const double ratio = (x_h * x_h) / (x_l * x_l);  // = 4 by construction
  const double nu = 2.0 * std::log(1.0 / delta) / epsilon + 1.0;

  const double n1 = std::max({1.0 / (2.0 * a * s) - 1.0 / s, a / s,
                              (a / s) * (std::exp(2.0 / s) - 2.0) + 1.0 / (2.0 * s)});

  const double xh4 = x_h * x_h * x_h * x_h;
  const double mixed = x_h * x_h * a + xh4 * b;
  const double xl2b = x_l * x_l * b;
  const double corr =
      1.0 + 1.0 / std::pow(1.0 + 10.0 * ratio * nu / b, gamma2 - gamma1);
  const double n2 = std::max(
      {1.0 + ratio * 8.0 / epsilon,
       1.0 + nu * ratio * (1.0 + 8.0 * (nu - 1.0) / epsilon),
       std::pow(16.0 * nu * b * xh4 / (0.9 * epsilon * x_l * x_l),
                1.0 / (1.0 - 2.0 * gamma1)),
       std::pow((16.0 * nu * b / epsilon) * ((x_h * x_h * b) * mixed / (0.9 * xl2b * xl2b)) * corr,
                1.0 / (2.0 - gamma1 - gamma2)),
       std::pow((4.0 * nu / epsilon) *
                    (mixed * mixed / (0.9 * x_l * x_l * x_l * x_l * x_l * x_l * b)) * corr,
                1.0 / (3.0 - 2.0 * gamma2))});

  const double n3 = std::max(1.0 + 10.0 * ratio * nu / b, 1.0 + nu * ratio);
  return InstanceBounds{nu, n1, n2, n3};
}

void check_instance_args(double epsilon, double delta, const DomainSpec& base,
                         const ModelParams& model) {
  model.validate();
  if (!(delta > 0.0 && delta < 0.5))
    throw DeltaTooLarge("counterexample instantiation needs delta in (0, 0.5)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!base.gamma2)
    throw ConfigError("counterexample instantiation needs gamma2 on the base spec");
  if (!(base.gamma1 > 0.0 && base.gamma1 < 0.5))
    throw ConfigError("gamma1 must lie in (0, 1/2)");
  if (!(*base.gamma2 > 1.0 + base.gamma1 && *base.gamma2 < 1.5))
    throw ConfigError("gamma2 must lie in (1 + gamma1, 3/2)");
  if (!(base.x_h * base.x_h * model.beta > 3.0))
    throw ConfigError("x_h^2 * beta must exceed 3");
}

CounterexampleInstance finish_instance(double n_real, double delta,
                                       const InstanceBounds& bounds,
                                       double n_target, const DomainSpec& base,
                                       const ModelParams& model) {
  CounterexampleInstance inst;
  inst.nu1 = bounds.nu1;
  inst.n1 = bounds.n1;
  inst.n2 = bounds.n2;
  inst.n3 = bounds.n3;
  inst.n_target = n_target;

  DomainSpec spec;
  spec.n = static_cast<long long>(std::ceil(n_real));
  spec.gamma1 = base.gamma1;
  spec.gamma2 = base.gamma2;
  spec.x_h = base.x_h;
  spec.x_l = base.x_h / 2.0;
  spec.c = std::pow(static_cast<double>(spec.n), *base.gamma2);
  spec.validate(model);
  inst.spec = spec;

  const SgldCoefficients co = coefficients(spec, model);
  inst.report = critical_epoch(co, spec, model);
  inst.report.epsilon_prime = violation_epsilon(inst.report, spec, model, delta);
  return inst;
}

}  // namespace

CounterexamplePlan plan_counterexample(double epsilon, double epsilon_prime,
                                       double delta, const DomainSpec& base,
                                       const ModelParams& model) {
  check_instance_args(epsilon, delta, base, model);
  if (!(epsilon_prime > epsilon))
    throw ConfigError("requested epsilon_prime must exceed epsilon");

  const double gamma2 = *base.gamma2;
  const InstanceBounds bounds =
      privacy_size_bounds(epsilon, delta, base.gamma1, gamma2, base.x_h, model);
  const double s = base.x_h * base.x_h * model.beta;
  const double v1 = std::max(6.0, 1.0 + 2.0 * std::exp(1.0 / s));
  const double factor = 32.0 * s / 3.0;

  CounterexamplePlan plan;
  plan.nu1 = bounds.nu1;
  plan.n1 = bounds.n1;
  plan.n2 = bounds.n2;
  plan.n3 = bounds.n3;
  plan.n_target =
      std::pow((epsilon_prime - std::log(0.5 - delta)) * std::exp(2.0 / s) *
                   factor * factor * (v1 / model.alpha),
               1.0 / (2.0 * (gamma2 - 1.0)));
  plan.n_required = std::max({bounds.n1, bounds.n2, bounds.n3, plan.n_target});
  return plan;
}

CounterexampleInstance instantiate_counterexample(double epsilon,
                                                  double epsilon_prime,
                                                  double delta,
                                                  const DomainSpec& base,
                                                  const ModelParams& model,
                                                  double max_n) {
  const CounterexamplePlan plan =
      plan_counterexample(epsilon, epsilon_prime, delta, base, model);
  if (!(plan.n_required <= max_n))
    throw InfeasibleTarget("counterexample needs n = " +
                           std::to_string(plan.n_required) + " > cap " +
                           std::to_string(max_n));
  return finish_instance(plan.n_required, delta,
                         InstanceBounds{plan.nu1, plan.n1, plan.n2, plan.n3},
                         plan.n_target, base, model);
}

CounterexampleInstance instantiate_largest_within(double epsilon, double delta,
                                                  const DomainSpec& base,
                                                  const ModelParams& model,
                                                  double max_n) {
  check_instance_args(epsilon, delta, base, model);
  const InstanceBounds bounds = privacy_size_bounds(
      epsilon, delta, base.gamma1, *base.gamma2, base.x_h, model);
  const double n_floor = std::max({bounds.n1, bounds.n2, bounds.n3});
  if (!(n_floor <= max_n))
    throw InfeasibleTarget("privacy lower bounds need n = " +
                           std::to_string(n_floor) + " > cap " +
                           std::to_string(max_n));
  return finish_instance(std::floor(max_n), delta, bounds, n_floor, base, model);
}

nlohmann::json certificate_json(const CertificateResult& cert,
                                double epsilon_prime) {
  return nlohmann::json{{"T", cert.step},
                        {"epsilon_prime", epsilon_prime},
                        {"epsilon_tested", cert.epsilon_tested},
                        {"delta", cert.delta},
                        {"p1", cert.p1},
                        {"p2_exact", cert.p2_exact},
                        {"p2_chernoff", cert.p2_chernoff},
                        {"violated", cert.violated}};
}

GapCurveRow gap_curve_row(const EpochState& state, long long n) {
  GapCurveRow row;
  row.epoch = state.epoch;
  row.step = state.epoch * n;
  row.gap = gap_metric(state);
  row.d1_mean = state.d1.mean;
  row.d1_var = state.d1.variance;
  auto [lo, hi] = std::minmax_element(
      state.d2_components.begin(), state.d2_components.end(),
      [](const Gaussian1D& a, const Gaussian1D& b) { return a.mean < b.mean; });
  row.min_component_mean = lo->mean;
  row.max_component_mean = hi->mean;
  return row;
}

void write_gap_curve_csv(const std::filesystem::path& path,
                         const std::vector<EpochState>& states, long long n) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write curve file: " + path.string());
  out.precision(17);
  out << "epoch,step,gap_metric,d1_mean,d1_var,min_component_mean,"
         "max_component_mean\n";
  for (const EpochState& st : states) {
    const GapCurveRow r = gap_curve_row(st, n);
    out << r.epoch << ',' << r.step << ',' << r.gap << ',' << r.d1_mean << ','
        << r.d1_var << ',' << r.min_component_mean << ','
        << r.max_component_mean << '\n';
  }
}

}  // namespace sgldlab
