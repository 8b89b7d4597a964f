#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "sgldlab/errors.hpp"

namespace sgldlab {

// Prior precision alpha and noise precision beta of the scalar linear model
// y = theta * x + noise, theta ~ N(0, 1/alpha), noise ~ N(0, 1/beta).
struct ModelParams {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("ModelParams: alpha must be > 0");
    if (!(beta > 0.0)) throw ConfigError("ModelParams: beta must be > 0");
  }
};

// Restricted data domain: n points with x in [x_l, x_h] and slope y/x within
// n^gamma1 of the center c. gamma2 is optional scaling metadata read only by
// the counterexample instantiation (c = n^gamma2).
struct DomainSpec {
  long long n = 1;
  double c = 1.0;
  double gamma1 = 0.1;
  std::optional<double> gamma2;
  double x_l = 0.5;
  double x_h = 1.0;

  double slope_tolerance() const;  // n^gamma1

  void validate() const;
  // Full check including the x_h^2 * beta > 3 coupling with the model.
  void validate(const ModelParams& model) const;
};

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
};

// Order is significant: the cyclic sampler consumes points in stored order.
struct Dataset {
  std::vector<DataPoint> points;

  std::size_t size() const { return points.size(); }
};

// z = sum x_i^2, q = sum x_i * y_i over a point subset.
struct SufficientStats {
  double z = 0.0;
  double q = 0.0;

  void add(const DataPoint& p) {
    z += p.x * p.x;
    q += p.x * p.y;
  }
  static SufficientStats of(const Dataset& data) {
    SufficientStats s;
    for (const auto& p : data.points) s.add(p);
    return s;
  }
};

struct Gaussian1D {
  double mean = 0.0;
  double variance = 1.0;

  double stddev() const;
};

struct GaussianMixture1D {
  std::vector<Gaussian1D> components;
  std::vector<double> weights;

  void validate() const;
  double cdf(double t) const;
  // P(X > t)
  double tail_above(double t) const;
};

// Membership test for the restricted domain. Sharp comparisons: the domain is
// a set, not a fuzzy region. x <= 0 is rejected (slope undefined).
bool in_domain(const DataPoint& p, const DomainSpec& spec);

// The two canonical adjacent databases: D1 is n copies of the boundary point
// (x_h, c*x_h); D2 replaces the final point with (x_h/2, c*x_h/2).
Dataset make_d1(const DomainSpec& spec);
Dataset make_d2(const DomainSpec& spec);

// Same construction with the slope center replaced by n1^rho3 (the inputs the
// cleaned-data mechanism is attacked with). Requires rho3 > 1.
std::pair<Dataset, Dataset> make_d3_d4(long long n1, double rho3, double x_h);

// CSV with header "x,y", one point per row, order preserved.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace sgldlab
