#pragma once

#include <stdexcept>
#include <string>

namespace sgldlab {

// Base for all domain errors raised by the library. Callers that only want
// "did it work" can catch this one type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A closed-form bound was requested outside its stated hypothesis. The message
// names the failed lower bound so callers can report it.
class HypothesisViolated : public Error {
 public:
  explicit HypothesisViolated(const std::string& which)
      : Error("hypothesis violated: " + which) {}
};

// No Renyi order on the search grid satisfies the admissibility hypothesis.
class NoAdmissibleNu : public Error {
 public:
  explicit NoAdmissibleNu(const std::string& what) : Error(what) {}
};

// The Renyi divergence of the requested order does not exist for the pair
// (the weighted variance nu*var_q + (1-nu)*var_p is nonpositive).
class DivergenceUndefined : public Error {
 public:
  explicit DivergenceUndefined(const std::string& what) : Error(what) {}
};

// The critical-epoch formula evaluated to a nonpositive value.
class NonPositiveKdot : public Error {
 public:
  explicit NonPositiveKdot(const std::string& what) : Error(what) {}
};

class DeltaTooLarge : public Error {
 public:
  explicit DeltaTooLarge(const std::string& what) : Error(what) {}
};

// A count that must exceed 1 (noisy filtered-set size) did not.
class DegenerateCount : public Error {
 public:
  explicit DegenerateCount(const std::string& what) : Error(what) {}
};

// The counterexample construction needs a database larger than the cap.
class InfeasibleTarget : public Error {
 public:
  explicit InfeasibleTarget(const std::string& what) : Error(what) {}
};

class TooFewSamples : public Error {
 public:
  explicit TooFewSamples(const std::string& what) : Error(what) {}
};

class RadiusBelowResolution : public Error {
 public:
  explicit RadiusBelowResolution(const std::string& what) : Error(what) {}
};

// Malformed input file / config.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace sgldlab
