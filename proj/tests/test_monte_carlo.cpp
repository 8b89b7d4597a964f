#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sgldlab/monte_carlo.hpp"
#include "sgldlab/sgld_closed_form.hpp"

using namespace sgldlab;

namespace {

DomainSpec toy_spec(long long n, double c) {
  DomainSpec s;
  s.n = n;
  s.c = c;
  s.gamma1 = 0.3;
  s.x_l = 1.0;
  s.x_h = 2.0;
  return s;
}
const ModelParams kModel{1.0, 1.0};

}  // namespace

TEST_CASE("chains are seed-deterministic") {
  const DomainSpec s = toy_spec(4, 8.0);
  const Dataset d1 = make_d1(s);
  ChainConfig cfg;
  cfg.eta = coefficients(s, kModel).eta;
  cfg.steps = 12;
  cfg.seed = 77;
  CHECK(run_chain(d1, kModel, cfg, 3) == run_chain(d1, kModel, cfg, 3));
  CHECK(run_chain(d1, kModel, cfg, 3) != run_chain(d1, kModel, cfg, 4));

  SUBCASE("zero steps returns the prior draw") {
    ChainConfig none = cfg;
    none.steps = 0;
    Rng ref(cfg.seed, 3);
    CHECK(run_chain(d1, kModel, none, 3) ==
          doctest::Approx(ref.normal(0.0, 1.0)).epsilon(1e-15));
  }

  SUBCASE("zero step size freezes the chain at the prior draw") {
    ChainConfig frozen = cfg;
    frozen.eta = 0.0;
    frozen.steps = 9;
    ChainConfig none = cfg;
    none.steps = 0;
    CHECK(run_chain(d1, kModel, frozen, 5) ==
          doctest::Approx(run_chain(d1, kModel, none, 5)).epsilon(1e-15));
  }
}

TEST_CASE("empirical moments match the exact iterate law") {
  const DomainSpec s = toy_spec(4, 8.0);
  const SgldCoefficients co = coefficients(s, kModel);
  const long long chains = 40000;
  const long long epochs = 2;
  const EpochState closed = state_at_epoch(epochs, co, s, kModel);

  SUBCASE("uniform database") {
    const Dataset d1 = make_d1(s);
    ChainConfig cfg;
    cfg.eta = co.eta;
    cfg.steps = epochs * s.n;
    cfg.seed = 5;
    const EmpiricalDist dist = run_chains(d1, kModel, cfg, chains);
    double mean = 0.0;
    for (double v : dist.samples) mean += v;
    mean /= static_cast<double>(chains);
    double var = 0.0;
    for (double v : dist.samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(chains - 1);
    const double se_mean = closed.d1.stddev() / std::sqrt(static_cast<double>(chains));
    const double se_var =
        closed.d1.variance * std::sqrt(2.0 / static_cast<double>(chains - 1));
    CHECK(std::fabs(mean - closed.d1.mean) < 4.0 * se_mean);
    CHECK(std::fabs(var - closed.d1.variance) < 4.0 * se_var);
  }

  SUBCASE("adjacent database at every fixed rotation") {
    const Dataset d2 = make_d2(s);
    for (long long r = 1; r <= s.n; ++r) {
      ChainConfig cfg;
      cfg.eta = co.eta;
      cfg.steps = epochs * s.n;
      cfg.seed = 40 + static_cast<std::uint64_t>(r);
      cfg.rotation = rotation_for_modified_position(r, s.n);
      const EmpiricalDist dist = run_chains(d2, kModel, cfg, chains);
      double mean = 0.0;
      for (double v : dist.samples) mean += v;
      mean /= static_cast<double>(chains);
      double var = 0.0;
      for (double v : dist.samples) var += (v - mean) * (v - mean);
      var /= static_cast<double>(chains - 1);
      const Gaussian1D& comp = closed.d2_components[static_cast<std::size_t>(r - 1)];
      const double se_mean = comp.stddev() / std::sqrt(static_cast<double>(chains));
      const double se_var =
          comp.variance * std::sqrt(2.0 / static_cast<double>(chains - 1));
      CHECK(std::fabs(mean - comp.mean) < 4.0 * se_mean);
      CHECK(std::fabs(var - comp.variance) < 4.0 * se_var);
    }
  }
}

TEST_CASE("epoch-boundary traces agree with single-shot chains") {
  const DomainSpec s = toy_spec(5, 6.0);
  const Dataset d1 = make_d1(s);
  ChainConfig cfg;
  cfg.eta = coefficients(s, kModel).eta;
  cfg.seed = 11;
  const auto trace = run_chain_epochs(d1, kModel, cfg, 3, 9);
  REQUIRE(trace.size() == 3);
  ChainConfig full = cfg;
  full.steps = 3 * s.n;
  CHECK(trace.back() == doctest::Approx(run_chain(d1, kModel, full, 9)).epsilon(1e-15));
}

TEST_CASE("set-mass estimator") {
  EmpiricalDist dist;
  for (int i = 0; i < 200; ++i) dist.samples.push_back(static_cast<double>(i));
  CHECK(empirical_set_mass(dist, 1e9).fraction == 0.0);
  CHECK(empirical_set_mass(dist, -1e9).fraction == 1.0);
  CHECK(empirical_set_mass(dist, 99.5).fraction == doctest::Approx(0.5));
  EmpiricalDist few;
  few.samples.assign(99, 0.0);
  CHECK_THROWS_AS(empirical_set_mass(few, 0.0), TooFewSamples);
}

TEST_CASE("mass above the exact mean is one half") {
  const DomainSpec s = toy_spec(5, 6.0);
  const SgldCoefficients co = coefficients(s, kModel);
  const Dataset d1 = make_d1(s);
  ChainConfig cfg;
  cfg.eta = co.eta;
  cfg.steps = 3 * s.n;
  cfg.seed = 19;
  const EmpiricalDist dist = run_chains(d1, kModel, cfg, 20000);
  const EpochState closed = state_at_epoch(3, co, s, kModel);
  const MassEstimate mass = empirical_set_mass(dist, closed.d1.mean);
  CHECK(std::fabs(mass.fraction - 0.5) < 4.0 * mass.std_error);
  // the exact chain mean agrees with the closed form
  CHECK(chain_mean_exact(d1, kModel, cfg) ==
        doctest::Approx(closed.d1.mean).epsilon(1e-12));
}

TEST_CASE("mixture law under uniform rotation (distribution band)") {
  const DomainSpec s = toy_spec(6, 9.0);
  const SgldCoefficients co = coefficients(s, kModel);
  const Dataset d2 = make_d2(s);
  const long long epochs = 2;
  const EpochState closed = state_at_epoch(epochs, co, s, kModel);
  GaussianMixture1D mix;
  mix.components = closed.d2_components;
  mix.weights.assign(mix.components.size(), 1.0 / static_cast<double>(s.n));
  mix.validate();

  const long long chains = 2000;
  const double band = 1.63 / std::sqrt(static_cast<double>(chains));
  int within = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    ChainConfig cfg;
    cfg.eta = co.eta;
    cfg.steps = epochs * s.n;
    cfg.seed = 300 + static_cast<std::uint64_t>(t);
    cfg.shuffle_once = true;
    EmpiricalDist dist = run_chains(d2, kModel, cfg, chains);
    std::sort(dist.samples.begin(), dist.samples.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < dist.samples.size(); ++i) {
      const double F = mix.cdf(dist.samples[i]);
      const double lo = static_cast<double>(i) / static_cast<double>(chains);
      const double hi = static_cast<double>(i + 1) / static_cast<double>(chains);
      ks = std::max({ks, std::fabs(F - lo), std::fabs(F - hi)});
    }
    if (ks <= band) ++within;
  }
  CHECK(within >= 18);  // at least 90% of trials inside the band
}

TEST_CASE("privacy audit on identical and far-apart inputs") {
  const DomainSpec s = toy_spec(5, 6.0);
  const SgldCoefficients co = coefficients(s, kModel);
  const Dataset d1 = make_d1(s);
  const Dataset d2 = make_d2(s);
  ChainConfig cfg;
  cfg.eta = co.eta;
  cfg.steps = 2 * s.n;
  cfg.seed = 400;

  const AuditResult same =
      empirical_dp_audit(d1, d1, kModel, cfg, 0.1, 0.05, 10000);
  CHECK(same.margin < 0.0);
  CHECK(same.ci_low <= same.margin);
  CHECK(same.ci_high >= same.margin);

  const AuditResult loose =
      empirical_dp_audit(d1, d2, kModel, cfg, 100.0, 0.05, 10000);
  CHECK(loose.margin < 0.0);

  CHECK_THROWS_AS(empirical_dp_audit(d1, d2, kModel, cfg, 0.1, 0.05, 500),
                  TooFewSamples);
}

TEST_CASE("audit flags the certified desk-scale instance") {
  DomainSpec s = toy_spec(40, 200.0);
  const SgldCoefficients co = coefficients(s, kModel);
  const CriticalEpochReport rep = critical_epoch(co, s, kModel);
  ChainConfig cfg;
  cfg.eta = co.eta;
  cfg.steps = rep.violation_step;
  cfg.seed = 900;
  const AuditResult audit = empirical_dp_audit(make_d1(s), make_d2(s), kModel,
                                               cfg, 0.5, 0.05, 20000);
  CHECK(audit.margin > 0.0);
  CHECK(audit.ci_low > 0.0);
}
