#include "sgldlab/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgldlab/numeric.hpp"

namespace sgldlab {

namespace {

struct Mask {
  std::vector<std::array<int, 3>> offsets;
  int reach = 0;  // max |offset| along any axis
};

Mask ball_mask(int dim, double radius, double spacing) {
  Mask m;
  const int reach = static_cast<int>(std::floor(radius / spacing));
  m.reach = reach;
  const int zlo = dim >= 3 ? -reach : 0, zhi = dim >= 3 ? reach : 0;
  const int ylo = dim >= 2 ? -reach : 0, yhi = dim >= 2 ? reach : 0;
  for (int ix = -reach; ix <= reach; ++ix)
    for (int iy = ylo; iy <= yhi; ++iy)
      for (int iz = zlo; iz <= zhi; ++iz) {
        const double r2 = (static_cast<double>(ix) * ix + static_cast<double>(iy) * iy +
                           static_cast<double>(iz) * iz) * spacing * spacing;
        if (r2 <= radius * radius) m.offsets.push_back({ix, iy, iz});
      }
  return m;
}

std::size_t flat_index(const std::array<int, 3>& shape, int ix, int iy, int iz) {
  return (static_cast<std::size_t>(ix) * shape[1] + static_cast<std::size_t>(iy)) *
             shape[2] +
         static_cast<std::size_t>(iz);
}

bool in_grid(const std::array<int, 3>& shape, int ix, int iy, int iz) {
  return ix >= 0 && ix < shape[0] && iy >= 0 && iy < shape[1] && iz >= 0 &&
         iz < shape[2];
}

double trapezoid_weight(int i, int extent) {
  return (extent > 1 && (i == 0 || i == extent - 1)) ? 0.5 : 1.0;
}

}  // namespace

std::size_t GriddedDensity::cell_count() const {
  return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
}

double GriddedDensity::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < dim; ++d) v *= spacing;
  return v;
}

double GriddedDensity::total_mass() const {
  double acc = 0.0;
  for (int ix = 0; ix < shape[0]; ++ix)
    for (int iy = 0; iy < shape[1]; ++iy)
      for (int iz = 0; iz < shape[2]; ++iz) {
        const double w = trapezoid_weight(ix, shape[0]) *
                         trapezoid_weight(iy, shape[1]) *
                         trapezoid_weight(iz, shape[2]);
        acc += w * values[flat_index(shape, ix, iy, iz)];
      }
  return acc * cell_volume();
}

double GriddedDensity::max_finite_difference_slope() const {
  double worst = 0.0;
  for (int ix = 0; ix < shape[0]; ++ix)
    for (int iy = 0; iy < shape[1]; ++iy)
      for (int iz = 0; iz < shape[2]; ++iz) {
        const double v = values[flat_index(shape, ix, iy, iz)];
        if (ix + 1 < shape[0])
          worst = std::max(worst, std::fabs(values[flat_index(shape, ix + 1, iy, iz)] - v));
        if (iy + 1 < shape[1])
          worst = std::max(worst, std::fabs(values[flat_index(shape, ix, iy + 1, iz)] - v));
        if (iz + 1 < shape[2])
          worst = std::max(worst, std::fabs(values[flat_index(shape, ix, iy, iz + 1)] - v));
      }
  return worst / spacing;
}

void GriddedDensity::validate() const {
  if (dim < 1 || dim > 3) throw ConfigError("density: dim must be 1..3");
  if (!(spacing > 0.0)) throw ConfigError("density: spacing must be > 0");
  for (int d = 0; d < 3; ++d) {
    if (shape[d] < 1) throw ConfigError("density: nonpositive shape");
    if (d >= dim && shape[d] != 1)
      throw ConfigError("density: unused axes must have extent 1");
  }
  if (values.size() != cell_count())
    throw ConfigError("density: values length != grid size");
  for (double v : values)
    if (!(v >= 0.0)) throw ConfigError("density: negative value");
  const double mass = total_mass();
  if (std::fabs(mass - 1.0) > 1e-6)
    throw ConfigError("density: mass " + std::to_string(mass) + " not within 1e-6 of 1");
  if (max_finite_difference_slope() > lipschitz * (1.0 + 1e-9))
    throw ConfigError("density: declared Lipschitz constant below lattice slopes");
}

void SmoothingConfig::validate() const {
  if (!(w2_budget > 0.0)) throw ConfigError("smoothing: budget must be > 0");
  if (!(radius > w2_budget))
    throw ConfigError("smoothing: radius must exceed the budget");
}

double ball_volume(int dim, double radius) { return num::ball_volume(dim, radius); }

GriddedDensity smooth(const GriddedDensity& density, double radius,
                      double* mass_before_renorm) {
  density.validate();
  if (radius < density.spacing)
    throw RadiusBelowResolution("smoothing radius " + std::to_string(radius) +
                                " below grid spacing " +
                                std::to_string(density.spacing));
  const Mask mask = ball_mask(density.dim, radius, density.spacing);
  GriddedDensity out = density;
  for (int ix = 0; ix < density.shape[0]; ++ix)
    for (int iy = 0; iy < density.shape[1]; ++iy)
      for (int iz = 0; iz < density.shape[2]; ++iz) {
        double acc = 0.0;
        long long cnt = 0;
        for (const auto& o : mask.offsets) {
          const int jx = ix + o[0], jy = iy + o[1], jz = iz + o[2];
          if (!in_grid(density.shape, jx, jy, jz)) continue;
          acc += density.values[flat_index(density.shape, jx, jy, jz)];
          ++cnt;
        }
        out.values[flat_index(density.shape, ix, iy, iz)] =
            cnt > 0 ? acc / static_cast<double>(cnt) : 0.0;
      }
  const double mass = out.total_mass();
  if (mass_before_renorm) *mass_before_renorm = mass;
  if (!(mass > 0.0)) throw ConfigError("smooth: zero mass after averaging");
  for (double& v : out.values) v /= mass;
  return out;
}

double theorem2_rhs(double q_smoothed_value, const SmoothingConfig& config,
                    int dim, double lipschitz, bool proof_form) {
  config.validate();
  const double lam = config.radius;
  const double eps = config.w2_budget;
  const double vol_inner = num::ball_volume(dim, lam - eps);
  const double ratio = std::pow(lam / (lam - eps), dim);
  if (proof_form) {
    const double delta_term =
        (num::ball_volume(dim, lam) - vol_inner) * 2.0 * lam * lipschitz;
    return ratio * q_smoothed_value + (delta_term + eps) / vol_inner;
  }
  return ratio * q_smoothed_value + (ratio - 1.0) * 2.0 * lam * lipschitz +
         eps / vol_inner;
}

std::vector<double> volume_ratio_curve(const SmoothingConfig& config,
                                       int max_dim) {
  config.validate();
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(max_dim));
  const double base = 1.0 + config.w2_budget / (config.radius - config.w2_budget);
  for (int d = 1; d <= max_dim; ++d) curve.push_back(std::pow(base, d));
  return curve;
}

namespace {

// Mass of the ball of radius r around a lattice point: mean over the mask
// times the ball volume (the same quadrature the smoothing operator uses).
// Returns false when the mask leaves the grid.
bool ball_mass(const GriddedDensity& g, const Mask& mask, double radius, int ix,
               int iy, int iz, double* out) {
  double acc = 0.0;
  for (const auto& o : mask.offsets) {
    const int jx = ix + o[0], jy = iy + o[1], jz = iz + o[2];
    if (!in_grid(g.shape, jx, jy, jz)) return false;
    acc += g.values[flat_index(g.shape, jx, jy, jz)];
  }
  *out = acc / static_cast<double>(mask.offsets.size()) *
         num::ball_volume(g.dim, radius);
  return true;
}

}  // namespace

VerificationReport verify_bound(const GriddedDensity& p,
                                const GriddedDensity& q,
                                const SmoothingConfig& config) {
  config.validate();
  p.validate();
  q.validate();
  if (p.dim != q.dim || p.shape != q.shape || p.spacing != q.spacing ||
      p.origin != q.origin)
    throw ConfigError("verify_bound: densities must share one grid");

  const double lip = std::max(p.lipschitz, q.lipschitz);
  const GriddedDensity ps = smooth(p, config.radius);
  const GriddedDensity qs = smooth(q, config.radius);

  VerificationReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  const Mask mask = ball_mask(p.dim, config.radius, p.spacing);

  for (int ix = 0; ix < p.shape[0]; ++ix)
    for (int iy = 0; iy < p.shape[1]; ++iy)
      for (int iz = 0; iz < p.shape[2]; ++iz) {
        const bool interior =
            ix - mask.reach >= 0 && ix + mask.reach < p.shape[0] &&
            (p.dim < 2 || (iy - mask.reach >= 0 && iy + mask.reach < p.shape[1])) &&
            (p.dim < 3 || (iz - mask.reach >= 0 && iz + mask.reach < p.shape[2]));
        if (!interior) {
          ++rep.excluded_boundary_points;
          continue;
        }
        const std::size_t at = flat_index(p.shape, ix, iy, iz);
        const double rhs = theorem2_rhs(qs.values[at], config, p.dim, lip);
        const double slack = rhs - ps.values[at];
        ++rep.checked_points;
        if (slack < 0.0) {
          ++rep.violations;
          rep.max_violation = std::max(rep.max_violation, -slack);
        } else {
          rep.min_slack = std::min(rep.min_slack, slack);
          rep.max_slack = std::max(rep.max_slack, slack);
        }
      }

  // Ball-probability inequality on a deterministic subsample of points and
  // two radii. The q-ball is wider by the budget.
  const double eps = config.w2_budget;
  for (double r : {config.radius / 2.0, config.radius}) {
    if (r < p.spacing) continue;
    const Mask inner = ball_mask(p.dim, r, p.spacing);
    const Mask outer = ball_mask(p.dim, r + eps, p.spacing);
    const int stride = std::max(1, p.shape[0] / 16);
    for (int ix = 0; ix < p.shape[0]; ix += stride)
      for (int iy = 0; iy < p.shape[1]; iy += std::max(1, p.shape[1] / 16))
        for (int iz = 0; iz < p.shape[2]; iz += std::max(1, p.shape[2] / 16)) {
          double mp = 0.0, mq = 0.0;
          if (!ball_mass(p, inner, r, ix, iy, iz, &mp)) continue;
          if (!ball_mass(q, outer, r + eps, ix, iy, iz, &mq)) continue;
          ++rep.ball_checks;
          const double slack = mq + eps - mp;
          if (slack < 0.0)
            ++rep.ball_violations;
          else if (rep.ball_checks == 1 || slack < rep.ball_min_slack)
            rep.ball_min_slack = slack;
        }
  }
  if (rep.checked_points == 0) rep.min_slack = 0.0;
  return rep;
}

nlohmann::json report_json(const VerificationReport& rep,
                           const std::vector<double>& ratio_curve) {
  return nlohmann::json{{"checked_points", rep.checked_points},
                        {"excluded_boundary_points", rep.excluded_boundary_points},
                        {"violations", rep.violations},
                        {"max_violation", rep.max_violation},
                        {"min_slack", rep.min_slack},
                        {"max_slack", rep.max_slack},
                        {"ball_checks", rep.ball_checks},
                        {"ball_violations", rep.ball_violations},
                        {"ratio_curve", ratio_curve}};
}

}  // namespace sgldlab
