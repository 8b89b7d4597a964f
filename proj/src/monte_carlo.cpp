#include "sgldlab/monte_carlo.hpp"

#include <algorithm>
#include <cmath>

#include "sgldlab/errors.hpp"

namespace sgldlab {

void ChainConfig::validate() const {
  if (!(eta >= 0.0)) throw ConfigError("ChainConfig: eta must be >= 0");
  if (steps < 0) throw ConfigError("ChainConfig: steps must be >= 0");
  if (batch < 1) throw ConfigError("ChainConfig: batch must be >= 1");
  if (rotation < 0) throw ConfigError("ChainConfig: rotation must be >= 0");
}

long long rotation_for_modified_position(long long r, long long n) {
  if (r < 1 || r > n) throw ConfigError("rotation_for_modified_position: r in 1..n");
  return (n - r) % n;
}

namespace {

// Binomial(n, p) count. Inversion walk when the mean is small, normal
// approximation otherwise (fine for bootstrap resampling at n >= 1e4).
double binomial_draw(Rng& rng, long long n, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return static_cast<double>(n);
  const double mean = static_cast<double>(n) * p;
  if (mean * (1.0 - p) > 25.0) {
    const double draw = std::round(rng.normal(mean, std::sqrt(mean * (1.0 - p))));
    return std::clamp(draw, 0.0, static_cast<double>(n));
  }
  if (mean > 25.0) {  // p near 1: flip to the complement
    return static_cast<double>(n) - binomial_draw(rng, n, 1.0 - p);
  }
  // CDF inversion from k = 0; the expected walk length is the small mean.
  double u = rng.uniform01();
  const double log1mp = std::log1p(-p);
  double pmf = std::exp(static_cast<double>(n) * log1mp);
  double k = 0.0;
  while (u > pmf && k < static_cast<double>(n)) {
    u -= pmf;
    pmf *= (static_cast<double>(n) - k) / (k + 1.0) * p / (1.0 - p);
    k += 1.0;
  }
  return k;
}

// One gradient step on a batch starting at `pos` (cyclic), plus noise.
double update(double theta, const Dataset& data, const ModelParams& model,
              const ChainConfig& cfg, std::size_t pos, Rng& rng,
              bool with_noise) {
  const double n = static_cast<double>(data.size());
  double grad = -theta * model.alpha;
  for (int b = 0; b < cfg.batch; ++b) {
    const DataPoint& p = data.points[(pos + static_cast<std::size_t>(b)) % data.size()];
    grad += (n / cfg.batch) * (p.y - theta * p.x) * p.x * model.beta;
  }
  theta += 0.5 * cfg.eta * grad;
  if (with_noise) theta += std::sqrt(cfg.eta) * rng.normal();
  return theta;
}

}  // namespace

double run_chain(const Dataset& data, const ModelParams& model,
                 const ChainConfig& config, std::uint64_t stream) {
  config.validate();
  model.validate();
  if (data.size() == 0) throw ConfigError("run_chain: empty dataset");
  Rng rng(config.seed, stream);

  std::size_t pos = static_cast<std::size_t>(config.rotation % static_cast<long long>(data.size()));
  if (config.shuffle_once)
    pos = static_cast<std::size_t>(rng.next_u64() % data.size());

  double theta = rng.normal(0.0, std::sqrt(1.0 / model.alpha));
  for (long long j = 0; j < config.steps; ++j) {
    const std::size_t at = config.uniform_sampling
                               ? static_cast<std::size_t>(rng.next_u64() % data.size())
                               : pos;
    theta = update(theta, data, model, config, at, rng, /*with_noise=*/true);
    if (!config.uniform_sampling)
      pos = (pos + static_cast<std::size_t>(config.batch)) % data.size();
  }
  return theta;
}

EmpiricalDist run_chains(const Dataset& data, const ModelParams& model,
                         const ChainConfig& config, long long chains) {
  EmpiricalDist dist;
  dist.samples.resize(static_cast<std::size_t>(chains));
  for (long long i = 0; i < chains; ++i)
    dist.samples[static_cast<std::size_t>(i)] =
        run_chain(data, model, config, static_cast<std::uint64_t>(i));
  return dist;
}

std::vector<double> run_chain_epochs(const Dataset& data,
                                     const ModelParams& model,
                                     const ChainConfig& config,
                                     long long epochs, std::uint64_t stream) {
  config.validate();
  if (data.size() == 0) throw ConfigError("run_chain_epochs: empty dataset");
  Rng rng(config.seed, stream);
  std::size_t pos = static_cast<std::size_t>(config.rotation % static_cast<long long>(data.size()));
  if (config.shuffle_once)
    pos = static_cast<std::size_t>(rng.next_u64() % data.size());

  std::vector<double> at_boundaries;
  at_boundaries.reserve(static_cast<std::size_t>(epochs));
  double theta = rng.normal(0.0, std::sqrt(1.0 / model.alpha));
  const long long per_epoch = static_cast<long long>(data.size());
  for (long long k = 0; k < epochs; ++k) {
    for (long long j = 0; j < per_epoch; ++j) {
      theta = update(theta, data, model, config, pos, rng, /*with_noise=*/true);
      pos = (pos + static_cast<std::size_t>(config.batch)) % data.size();
    }
    at_boundaries.push_back(theta);
  }
  return at_boundaries;
}

MassEstimate empirical_set_mass(const EmpiricalDist& dist, double threshold) {
  if (dist.count() < 100)
    throw TooFewSamples("empirical_set_mass: need at least 100 samples, got " +
                        std::to_string(dist.count()));
  const double n = static_cast<double>(dist.count());
  double above = 0.0;
  for (double s : dist.samples)
    if (s > threshold) above += 1.0;
  const double p = above / n;
  return MassEstimate{p, std::sqrt(p * (1.0 - p) / n)};
}

double chain_mean_exact(const Dataset& data, const ModelParams& model,
                        const ChainConfig& config) {
  config.validate();
  if (data.size() == 0) throw ConfigError("chain_mean_exact: empty dataset");
  Rng unused(0);
  double mean = 0.0;  // prior mean
  std::size_t pos = static_cast<std::size_t>(config.rotation % static_cast<long long>(data.size()));
  for (long long j = 0; j < config.steps; ++j) {
    mean = update(mean, data, model, config, pos, unused, /*with_noise=*/false);
    pos = (pos + static_cast<std::size_t>(config.batch)) % data.size();
  }
  return mean;
}

AuditResult empirical_dp_audit(const Dataset& data_a, const Dataset& data_b,
                               const ModelParams& model,
                               const ChainConfig& config, double epsilon,
                               double delta, long long chains, double ci_level,
                               int bootstrap_rounds) {
  if (chains < 10000)
    throw TooFewSamples("empirical_dp_audit: need at least 1e4 chains per side");

  AuditResult res;
  res.threshold = chain_mean_exact(data_a, model, config);
  res.chains = chains;
  res.epsilon = epsilon;
  res.delta = delta;

  ChainConfig cfg_a = config;
  cfg_a.shuffle_once = false;
  ChainConfig cfg_b = config;
  cfg_b.shuffle_once = true;  // cyclic position of the differing record is uniform
  cfg_b.seed = config.seed ^ 0x5bd1e995ULL;

  long long above_a = 0, above_b = 0;
  for (long long i = 0; i < chains; ++i) {
    if (run_chain(data_a, model, cfg_a, static_cast<std::uint64_t>(i)) > res.threshold)
      ++above_a;
    if (run_chain(data_b, model, cfg_b, static_cast<std::uint64_t>(i)) > res.threshold)
      ++above_b;
  }
  const double n = static_cast<double>(chains);
  res.p_a = static_cast<double>(above_a) / n;
  res.p_b = static_cast<double>(above_b) / n;
  const double amp = std::exp(epsilon);
  res.margin = res.p_a - amp * res.p_b - delta;

  // Binomial bootstrap of both frequencies; the samples are Bernoulli so a
  // resample is one binomial draw per side.
  Rng rng(config.seed, 0xb00f);
  std::vector<double> margins(static_cast<std::size_t>(bootstrap_rounds));
  for (int b = 0; b < bootstrap_rounds; ++b) {
    const double ka = binomial_draw(rng, chains, res.p_a);
    const double kb = binomial_draw(rng, chains, res.p_b);
    margins[static_cast<std::size_t>(b)] = ka / n - amp * kb / n - delta;
  }
  std::sort(margins.begin(), margins.end());
  const double tail = (1.0 - ci_level) / 2.0;
  const auto idx = [&](double q) {
    const double pos = q * (static_cast<double>(margins.size()) - 1.0);
    return margins[static_cast<std::size_t>(std::llround(pos))];
  };
  res.ci_low = idx(tail);
  res.ci_high = idx(1.0 - tail);
  return res;
}

}  // namespace sgldlab
