#pragma once

#include <cstdint>
#include <vector>

#include "sgldlab/core_model.hpp"
#include "sgldlab/rng.hpp"

namespace sgldlab {

// One simulated chain of the noisy sampler. Points are consumed cyclically
// from the stored order starting at `rotation` (uniform-with-replacement
// indexing is available behind a flag for exploration; the analysis paths are
// cyclic-only).
struct ChainConfig {
  double eta = 0.0;
  long long steps = 0;
  int batch = 1;
  long long rotation = 0;       // start offset into stored order
  bool shuffle_once = false;    // random rotation drawn per chain
  bool uniform_sampling = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Stored-order offset that places the final stored record at cyclic position
// r (1-based) of each pass.
long long rotation_for_modified_position(long long r, long long n);

// Runs one chain from a prior draw and returns the final iterate. The stream
// index makes chain sets reproducible independent of execution order.
double run_chain(const Dataset& data, const ModelParams& model,
                 const ChainConfig& config, std::uint64_t stream = 0);

struct EmpiricalDist {
  std::vector<double> samples;

  std::size_t count() const { return samples.size(); }
};

EmpiricalDist run_chains(const Dataset& data, const ModelParams& model,
                         const ChainConfig& config, long long chains);

// One chain recorded at every epoch boundary (n*batch... steps per epoch is
// n steps with batch 1): returns the iterate after 1n, 2n, ..., epochs*n
// steps. config.steps is ignored.
std::vector<double> run_chain_epochs(const Dataset& data,
                                     const ModelParams& model,
                                     const ChainConfig& config,
                                     long long epochs, std::uint64_t stream);

struct MassEstimate {
  double fraction = 0.0;
  double std_error = 0.0;
};

// Fraction of samples strictly above the threshold plus its binomial standard
// error. Requires at least 100 samples.
MassEstimate empirical_set_mass(const EmpiricalDist& dist, double threshold);

struct AuditResult {
  double threshold = 0.0;  // the set S is {s > threshold}
  double p_a = 0.0;
  double p_b = 0.0;
  double margin = 0.0;  // p_a - e^eps * p_b - delta
  double ci_low = 0.0;  // bootstrap interval for the margin
  double ci_high = 0.0;
  long long chains = 0;
  double epsilon = 0.0;
  double delta = 0.0;
};

// Two-sample frequency test of the privacy inequality on S = {s > mu_T}:
// runs `chains` chains per database (database B with a uniformly random
// rotation per chain), where mu_T is the exact mean of the database-A chain
// obtained by propagating the per-step affine recursion without noise.
AuditResult empirical_dp_audit(const Dataset& data_a, const Dataset& data_b,
                               const ModelParams& model,
                               const ChainConfig& config, double epsilon,
                               double delta, long long chains,
                               double ci_level = 0.99,
                               int bootstrap_rounds = 2000);

// Exact mean of the chain after `steps` noise-free updates (the noise enters
// additively with zero mean, so this is the true iterate mean).
double chain_mean_exact(const Dataset& data, const ModelParams& model,
                        const ChainConfig& config);

}  // namespace sgldlab
