#pragma once

#include <cstdint>
#include <cmath>

#include "sgldlab/numeric.hpp"

namespace sgldlab {

// Counter-free splittable generator: a 64-bit seed plus a stream index derive
// an independent stream deterministically, so parallel chains reproduce
// regardless of execution order. Core state update is splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix(mix(seed) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix_output(state_);
  }

  // Uniform on the open interval (0, 1); never returns an endpoint, so the
  // inverse-CDF transforms below stay finite.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the inverse CDF (AS 241): unbiased and reproducible.
  double normal() { return num::inverse_normal_cdf(uniform01()); }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Laplace(0, scale) via the inverse CDF.
  double laplace(double scale) {
    const double u = uniform01();
    return u < 0.5 ? scale * std::log(2.0 * u) : -scale * std::log(2.0 * (1.0 - u));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    return mix_output(z);
  }
  static std::uint64_t mix_output(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace sgldlab
