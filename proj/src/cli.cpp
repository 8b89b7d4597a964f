#include "sgldlab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgldlab/config_json.hpp"
#include "sgldlab/core_model.hpp"
#include "sgldlab/dp_mechanisms.hpp"
#include "sgldlab/monte_carlo.hpp"
#include "sgldlab/numeric.hpp"
#include "sgldlab/posterior_privacy.hpp"
#include "sgldlab/sgld_closed_form.hpp"
#include "sgldlab/wasserstein.hpp"

namespace sgldlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  bool print_json = false;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig resolved_config(const GlobalOpts& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_config(g.config_path);
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  if (g.seed) cfg.seeds = {*g.seed};
  if (!fs::is_directory(cfg.output_dir))
    throw ConfigError("output directory does not exist: " +
                      cfg.output_dir.string());
  return cfg;
}

void emit(const GlobalOpts& g, const fs::path& file, const json& j) {
  write_json_file(file, j);
  if (g.print_json)
    std::cout << j.dump(2) << std::endl;
  else
    std::cout << "wrote " << file.string() << std::endl;
}

int cmd_figure1(const GlobalOpts& g) {
  const ExperimentConfig cfg = resolved_config(g);
  const SgldCoefficients co = coefficients(cfg.spec, cfg.model);
  const CriticalEpochReport rep = critical_epoch(co, cfg.spec, cfg.model);

  // The curve is the point of this command; a posterior whose admissibility
  // gate fails (tiny instances) is reported instead of aborting the run.
  json posterior_report;
  try {
    const AdpResult adp =
        posterior_adp(cfg.spec, cfg.model, cfg.budget.delta,
                      cfg.budget.epsilon > 0 ? cfg.budget.epsilon : 1.0);
    posterior_report = adp_report_json(adp, cfg.budget.delta);
  } catch (const Error& e) {
    posterior_report = json{{"error", e.what()}};
  }

  const long long last = std::max(2 * rep.k_star, cfg.epochs);
  std::vector<EpochState> states;
  states.reserve(static_cast<std::size_t>(last) + 1);
  for (long long k = 0; k <= last; ++k)
    states.push_back(state_at_epoch(k, co, cfg.spec, cfg.model));
  const fs::path curve = cfg.output_dir / "gap_curve.csv";
  write_gap_curve_csv(curve, states, cfg.spec.n);

  json summary{{"k_dot", rep.k_dot},
               {"k_star", rep.k_star},
               {"violation_step", rep.violation_step},
               {"v1", rep.v1},
               {"epochs_emitted", last + 1},
               {"curve_file", curve.string()},
               {"posterior", posterior_report}};
  emit(g, cfg.output_dir / "figure1_summary.json", summary);
  return 0;
}

int cmd_posterior_privacy(const GlobalOpts& g) {
  const ExperimentConfig cfg = resolved_config(g);
  const AdpResult adp =
      posterior_adp(cfg.spec, cfg.model, cfg.budget.delta,
                    cfg.budget.epsilon > 0 ? cfg.budget.epsilon : 1.0);
  emit(g, cfg.output_dir / "posterior_privacy.json",
       adp_report_json(adp, cfg.budget.delta));
  return 0;
}

int cmd_certify(const GlobalOpts& g, double epsilon_prime, bool use_config_spec,
                double cap) {
  const ExperimentConfig cfg = resolved_config(g);
  if (!(cfg.budget.delta < 0.5)) throw DeltaTooLarge("certify needs delta < 0.5");
  if (!(epsilon_prime > cfg.budget.epsilon))
    throw ConfigError("--epsilon-prime must exceed the budget epsilon");

  CounterexampleInstance inst;
  bool capped = false;
  if (use_config_spec) {
    inst.spec = cfg.spec;
    const SgldCoefficients co = coefficients(inst.spec, cfg.model);
    inst.report = critical_epoch(co, inst.spec, cfg.model);
    inst.report.epsilon_prime =
        violation_epsilon(inst.report, inst.spec, cfg.model, cfg.budget.delta);
  } else {
    try {
      inst = instantiate_counterexample(cfg.budget.epsilon, epsilon_prime,
                                        cfg.budget.delta, cfg.spec, cfg.model,
                                        cap);
    } catch (const InfeasibleTarget&) {
      capped = true;
      inst = instantiate_largest_within(cfg.budget.epsilon, cfg.budget.delta,
                                        cfg.spec, cfg.model, cap);
    }
  }

  const SgldCoefficients co = coefficients(inst.spec, cfg.model);
  const EpochState at_T =
      state_at_epoch(inst.report.k_star + 1, co, inst.spec, cfg.model);
  const CertificateResult cert = certify_violation(
      inst.report, at_T, epsilon_prime - 1e-6, cfg.budget.delta);
  const AdpResult adp = posterior_adp(inst.spec, cfg.model, cfg.budget.delta,
                                      cfg.budget.epsilon);

  json out = certificate_json(cert, inst.report.epsilon_prime.value_or(
                                        std::numeric_limits<double>::quiet_NaN()));
  out["capped"] = capped;
  out["chernoff_violated"] = cert.violated_chernoff;
  out["exact_margin"] = cert.exact_margin;
  out["chernoff_margin"] = cert.chernoff_margin;
  out["spec"] = inst.spec;
  out["posterior"] = adp_report_json(adp, cfg.budget.delta);
  emit(g, cfg.output_dir / "certificate.json", out);
  return 0;
}

int cmd_theorem1_params(const GlobalOpts& g, double epsilon_prime, double cap) {
  const ExperimentConfig cfg = resolved_config(g);
  const CounterexamplePlan plan =
      plan_counterexample(cfg.budget.epsilon, epsilon_prime, cfg.budget.delta,
                          cfg.spec, cfg.model);
  json out{{"nu1", plan.nu1},
           {"n1", plan.n1},
           {"n2", plan.n2},
           {"n3", plan.n3},
           {"n_target", plan.n_target},
           {"n_required", plan.n_required},
           {"cap", cap},
           {"feasible", plan.n_required <= cap}};
  if (cfg.spec.gamma2)
    out["c_p"] = std::pow(std::ceil(plan.n_required), *cfg.spec.gamma2);
  emit(g, cfg.output_dir / "instantiation_params.json", out);
  return 0;
}

int cmd_pts_run(const GlobalOpts& g, const std::string& data_path,
                const std::string& params_path, long long sgld_steps,
                long long gen_d3_n1, double gen_rho3) {
  PtsParams params;
  {
    const json pj = read_json_file(params_path);
    params.epsilon = pj.value("epsilon", params.epsilon);
    params.delta = pj.value("delta", params.delta);
    params.x_l = pj.value("x_l", params.x_l);
    params.x_h = pj.value("x_h", params.x_h);
    params.alpha = pj.value("alpha", params.alpha);
    params.beta = pj.value("beta", params.beta);
    params.rho1 = pj.value("rho1", params.rho1);
    params.rho2 = pj.value("rho2", params.rho2);
    params.gamma1 = pj.value("gamma1", params.gamma1);
    params.strict_n_min = pj.value("strict_n_min", params.strict_n_min);
    params.validate();
  }

  Dataset data;
  if (gen_d3_n1 > 0) {
    data = make_d3_d4(gen_d3_n1, gen_rho3, params.x_h).first;
    if (!data_path.empty()) write_dataset_csv(data, data_path);
  } else {
    if (data_path.empty()) throw ConfigError("--data is required");
    data = read_dataset_csv(data_path);
  }

  std::vector<std::uint64_t> seeds{0};
  if (!g.config_path.empty()) seeds = load_config(g.config_path).seeds;
  if (g.seed) seeds = {*g.seed};

  long long sampled = 0;
  for (std::uint64_t s : seeds) {
    Rng rng(s);
    const PtsResult res = sgld_steps > 0
                              ? propose_test_sample_sgld(data, params, sgld_steps, rng)
                              : propose_test_sample(data, params, rng);
    json line = trace_json(res.trace);
    line["seed"] = s;
    if (res.sample) line["sample"] = *res.sample;
    std::cout << line.dump() << '\n';
    if (res.trace.outcome == PtsOutcome::Sampled) ++sampled;
  }
  std::cerr << "sampled " << sampled << "/" << seeds.size() << " runs\n";
  return 0;
}

int cmd_mc_verify(const GlobalOpts& g, const std::string& spec_path,
                  long long epochs, long long chains, std::uint64_t seed) {
  ExperimentConfig cfg = load_config(spec_path.empty() ? g.config_path : spec_path);
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  if (!fs::is_directory(cfg.output_dir))
    throw ConfigError("output directory does not exist: " + cfg.output_dir.string());

  const SgldCoefficients co = coefficients(cfg.spec, cfg.model);
  const Dataset d1 = make_d1(cfg.spec);
  const Dataset d2 = make_d2(cfg.spec);

  // Every chain is carried across all epoch boundaries once; the adjacent
  // database runs with a fresh uniform rotation per chain.
  const std::size_t n_chains = static_cast<std::size_t>(chains);
  std::vector<std::vector<double>> d1_at(static_cast<std::size_t>(epochs));
  std::vector<std::vector<double>> d2_at(static_cast<std::size_t>(epochs));
  for (auto& v : d1_at) v.reserve(n_chains);
  for (auto& v : d2_at) v.reserve(n_chains);
  ChainConfig mc;
  mc.eta = co.eta;
  mc.seed = seed;
  ChainConfig mc2 = mc;
  mc2.shuffle_once = true;
  mc2.seed = seed ^ 0x9e3779b9ULL;
  for (std::size_t i = 0; i < n_chains; ++i) {
    const auto t1 = run_chain_epochs(d1, cfg.model, mc, epochs, i);
    const auto t2 = run_chain_epochs(d2, cfg.model, mc2, epochs, i);
    for (long long k = 0; k < epochs; ++k) {
      d1_at[static_cast<std::size_t>(k)].push_back(t1[static_cast<std::size_t>(k)]);
      d2_at[static_cast<std::size_t>(k)].push_back(t2[static_cast<std::size_t>(k)]);
    }
  }

  auto moments = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double s : xs) mean += s;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double s : xs) var += (s - mean) * (s - mean);
    var /= static_cast<double>(xs.size() - 1);
    return std::pair<double, double>{mean, var};
  };

  json rows = json::array();
  for (long long k = 1; k <= epochs; ++k) {
    const EpochState st = state_at_epoch(k, co, cfg.spec, cfg.model);
    const auto [mean1, var1] = moments(d1_at[static_cast<std::size_t>(k - 1)]);
    const auto [mean2, var2] = moments(d2_at[static_cast<std::size_t>(k - 1)]);

    // mixture moments over the uniform rotation; the sample-variance spread
    // needs the mixture's fourth central moment (it is not Gaussian)
    double mix_mean = 0.0;
    for (const Gaussian1D& c : st.d2_components) mix_mean += c.mean;
    mix_mean /= static_cast<double>(st.d2_components.size());
    double mix_var = 0.0, mix_mu4 = 0.0;
    for (const Gaussian1D& c : st.d2_components) {
      const double off = c.mean - mix_mean;
      mix_var += c.variance + off * off;
      mix_mu4 += off * off * off * off + 6.0 * off * off * c.variance +
                 3.0 * c.variance * c.variance;
    }
    mix_var /= static_cast<double>(st.d2_components.size());
    mix_mu4 /= static_cast<double>(st.d2_components.size());

    const double nd = static_cast<double>(chains);
    const double se_mix_var = std::sqrt(
        std::max(mix_mu4 - mix_var * mix_var * (nd - 3.0) / (nd - 1.0), 0.0) / nd);
    rows.push_back(json{
        {"epoch", k},
        {"d1_mean_delta_se", (mean1 - st.d1.mean) / std::sqrt(st.d1.variance / nd)},
        {"d1_var_delta_se",
         (var1 - st.d1.variance) / (st.d1.variance * std::sqrt(2.0 / (nd - 1.0)))},
        {"d2_mean_delta_se", (mean2 - mix_mean) / std::sqrt(mix_var / nd)},
        {"d2_var_delta_se", (var2 - mix_var) / se_mix_var}});
  }
  json out{{"chains", chains}, {"epochs", epochs}, {"seed", seed}, {"rows", rows}};
  emit(g, cfg.output_dir / "mc_verify.json", out);
  return 0;
}

GriddedDensity gaussian_fixture_1d(double mean, double spacing, double lo,
                                   double hi) {
  GriddedDensity g;
  g.dim = 1;
  g.spacing = spacing;
  g.origin = {lo, 0.0, 0.0};
  const int count = static_cast<int>(std::lround((hi - lo) / spacing)) + 1;
  g.shape = {count, 1, 1};
  g.values.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double x = lo + spacing * i - mean;
    g.values[static_cast<std::size_t>(i)] =
        std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  }
  // max |density slope| for the unit normal
  g.lipschitz = std::exp(-0.5) / std::sqrt(2.0 * M_PI);
  return g;
}

int cmd_wasserstein_demo(const GlobalOpts& g, int dim, const std::string& kase,
                         double mu2, double radius, double budget,
                         double spacing) {
  if (kase != "gaussians") throw ConfigError("unknown --case: " + kase);
  if (dim != 1) throw ConfigError("the demo case is one-dimensional; use --dim 1");
  fs::path out_dir = g.out_dir.empty() ? fs::path(".") : fs::path(g.out_dir);
  if (!fs::is_directory(out_dir))
    throw ConfigError("output directory does not exist: " + out_dir.string());

  const double lo = -8.0 + std::min(0.0, mu2);
  const double hi = 8.0 + std::max(0.0, mu2);
  const GriddedDensity p = gaussian_fixture_1d(0.0, spacing, lo, hi);
  const GriddedDensity q = gaussian_fixture_1d(mu2, spacing, lo, hi);
  const SmoothingConfig cfg{radius, budget};
  const VerificationReport rep = verify_bound(p, q, cfg);
  json out = report_json(rep, volume_ratio_curve(cfg, 10));
  out["w2_exact"] = std::fabs(mu2);  // equal variances: the mean shift
  emit(g, out_dir / "wasserstein_report.json", out);
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"numerical laboratory for sampling-privacy counterexamples"};
  app.require_subcommand(1);
  app.fallthrough(true);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment config JSON");
  app.add_option("--out", g.out_dir, "output directory override");
  app.add_flag("--json", g.print_json, "print result JSON to stdout");
  std::uint64_t seed_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "seed override");

  auto* fig = app.add_subcommand("figure1", "per-epoch gap curve and reports");

  auto* post = app.add_subcommand("posterior-privacy",
                                  "posterior privacy budget report");

  auto* cert = app.add_subcommand("certify", "violation certificate");
  double epsilon_prime = 1.0;
  double cap = 1e7;
  bool use_config_spec = false;
  cert->add_option("--epsilon-prime", epsilon_prime, "violation level to refute")
      ->required();
  cert->add_option("--cap", cap, "largest database size the tool may build");
  cert->add_flag("--use-config-spec", use_config_spec,
                 "certify the config's spec instead of instantiating");

  auto* tparams = app.add_subcommand("theorem1-params",
                                     "counterexample size planning");
  double tp_epsilon_prime = 1.0;
  double tp_cap = 1e7;
  tparams->add_option("--epsilon-prime", tp_epsilon_prime, "violation level")
      ->required();
  tparams->add_option("--cap", tp_cap, "feasibility cap");

  auto* pts = app.add_subcommand("pts-run", "propose-test-sample runs");
  std::string data_path, params_path;
  long long sgld_steps = 0, gen_d3_n1 = 0;
  double gen_rho3 = 1.15;
  pts->add_option("--data", data_path, "dataset CSV");
  pts->add_option("--params", params_path, "mechanism parameter JSON")->required();
  pts->add_option("--sgld-steps", sgld_steps,
                  "replace the exact draw with a chain of this many steps");
  pts->add_option("--gen-d3", gen_d3_n1,
                  "generate the adversarial dataset of this size first");
  pts->add_option("--gen-rho3", gen_rho3, "slope exponent for --gen-d3");

  auto* mc = app.add_subcommand("mc-verify", "closed form vs simulation");
  std::string mc_spec;
  long long mc_epochs = 3, mc_chains = 20000;
  std::uint64_t mc_seed = 1;
  mc->add_option("--spec", mc_spec, "spec/model JSON (defaults to --config)");
  mc->add_option("--epochs", mc_epochs, "epoch boundaries to compare");
  mc->add_option("--chains", mc_chains, "chains per comparison");
  mc->add_option("--seed", mc_seed, "chain seed");

  auto* wd = app.add_subcommand("wasserstein-demo", "smoothed-density checker");
  int wd_dim = 1;
  std::string wd_case = "gaussians";
  double wd_mu2 = 0.01, wd_radius = 0.5, wd_budget = 0.1, wd_spacing = 0.01;
  wd->add_option("--dim", wd_dim, "dimension");
  wd->add_option("--case", wd_case, "fixture family");
  wd->add_option("--mu2", wd_mu2, "second mean");
  wd->add_option("--radius", wd_radius, "smoothing radius");
  wd->add_option("--budget", wd_budget, "assumed W2 budget (sqrt scale)");
  wd->add_option("--spacing", wd_spacing, "grid spacing");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (seed_flag->count() > 0) g.seed = seed_opt;

  try {
    if (fig->parsed()) return cmd_figure1(g);
    if (post->parsed()) return cmd_posterior_privacy(g);
    if (cert->parsed()) return cmd_certify(g, epsilon_prime, use_config_spec, cap);
    if (tparams->parsed()) return cmd_theorem1_params(g, tp_epsilon_prime, tp_cap);
    if (pts->parsed())
      return cmd_pts_run(g, data_path, params_path, sgld_steps, gen_d3_n1, gen_rho3);
    if (mc->parsed()) return cmd_mc_verify(g, mc_spec, mc_epochs, mc_chains, mc_seed);
    if (wd->parsed())
      return cmd_wasserstein_demo(g, wd_dim, wd_case, wd_mu2, wd_radius,
                                  wd_budget, wd_spacing);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}

}  // namespace sgldlab
