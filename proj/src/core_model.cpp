#include "sgldlab/core_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sgldlab {

double DomainSpec::slope_tolerance() const {
  return std::pow(static_cast<double>(n), gamma1);
}

void DomainSpec::validate() const {
  if (n < 1) throw ConfigError("DomainSpec: n must be a positive integer");
  if (!(c > 0.0)) throw ConfigError("DomainSpec: c must be > 0");
  if (!(gamma1 > 0.0 && gamma1 < 0.5))
    throw ConfigError("DomainSpec: gamma1 must lie in (0, 1/2)");
  if (!(x_l > 0.0 && x_l < x_h))
    throw ConfigError("DomainSpec: need 0 < x_l < x_h");
}

void DomainSpec::validate(const ModelParams& model) const {
  validate();
  model.validate();
  if (!(x_h * x_h * model.beta > 3.0))
    throw ConfigError("DomainSpec: x_h^2 * beta must exceed 3");
}

double Gaussian1D::stddev() const { return std::sqrt(variance); }

void GaussianMixture1D::validate() const {
  if (components.empty()) throw ConfigError("mixture: no components");
  if (components.size() != weights.size())
    throw ConfigError("mixture: component/weight length mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ConfigError("mixture: negative weight");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw ConfigError("mixture: weights must sum to 1");
}

double GaussianMixture1D::cdf(double t) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& g = components[i];
    acc += weights[i] * 0.5 * std::erfc((g.mean - t) / (std::sqrt(2.0) * g.stddev()));
  }
  return acc;
}

double GaussianMixture1D::tail_above(double t) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& g = components[i];
    acc += weights[i] * 0.5 * std::erfc((t - g.mean) / (std::sqrt(2.0) * g.stddev()));
  }
  return acc;
}

bool in_domain(const DataPoint& p, const DomainSpec& spec) {
  if (!(p.x > 0.0)) return false;
  if (p.x < spec.x_l || p.x > spec.x_h) return false;
  return std::fabs(p.y / p.x - spec.c) <= spec.slope_tolerance();
}

Dataset make_d1(const DomainSpec& spec) {
  spec.validate();
  Dataset d;
  d.points.assign(static_cast<std::size_t>(spec.n),
                  DataPoint{spec.x_h, spec.c * spec.x_h});
  return d;
}

Dataset make_d2(const DomainSpec& spec) {
  Dataset d = make_d1(spec);
  d.points.back() = DataPoint{spec.x_h / 2.0, spec.c * spec.x_h / 2.0};
  return d;
}

std::pair<Dataset, Dataset> make_d3_d4(long long n1, double rho3, double x_h) {
  if (n1 < 1) throw ConfigError("make_d3_d4: n1 must be positive");
  if (!(rho3 > 1.0)) throw ConfigError("make_d3_d4: rho3 must exceed 1");
  const double slope = std::pow(static_cast<double>(n1), rho3);
  Dataset d3;
  d3.points.assign(static_cast<std::size_t>(n1), DataPoint{x_h, slope * x_h});
  Dataset d4 = d3;
  d4.points.back() = DataPoint{x_h / 2.0, slope * x_h / 2.0};
  return {std::move(d3), std::move(d4)};
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path.string());
  Dataset data;
  std::string line;
  long long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    if (row == 1) {
      if (line != "x,y")
        throw ConfigError(path.string() + ": expected header \"x,y\" on row 1");
      continue;
    }
    std::istringstream ss(line);
    DataPoint p;
    char comma = 0;
    if (!(ss >> p.x >> comma >> p.y) || comma != ',')
      throw ConfigError(path.string() + ": malformed row " + std::to_string(row));
    data.points.push_back(p);
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file: " + path.string());
  out.precision(17);
  out << "x,y\n";
  for (const auto& p : data.points) out << p.x << ',' << p.y << '\n';
}

}  // namespace sgldlab
