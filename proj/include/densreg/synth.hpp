#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "densreg/alpha_fit.hpp"
#include "densreg/density.hpp"

namespace densreg {

// Deterministic synthetic cases for tests and the CLI. Generators evaluate
// closed forms nodewise; maps carry their analytic Jacobian determinants so
// they can serve as oracles for the finite-difference operators rather than
// being validated by them.

struct DensityParams {
  std::array<Real, 3> center{0, 0, 0};
  Real sigma = 1;
  Real amplitude = 1;
  Real baseline = 0;
};

struct DiffeoParams {
  std::array<Real, 3> shift{0, 0, 0};  // translation
  Real gamma = 0.2;                    // shear
  Real amplitude = 0.1;                // radial-bump / swirl strength
  Real sigma = 1;                      // radial-bump / swirl width
  std::array<Real, 3> center{0, 0, 0};
};

namespace detail {

inline Real sq_dist(const Grid& g, const std::array<Real, 3>& p,
                    const std::array<Real, 3>& c) {
  Real r2 = 0;
  for (int a = 0; a < g.dim; ++a) r2 += (p[a] - c[a]) * (p[a] - c[a]);
  return r2;
}

}  // namespace detail

// Known density cases:
//   "uniform"    constant 1/volume, unit mass.
//   "banana"     3 exp(-x^2 - 10(y - x^2/2 + 1)^2) + 1/10 at the node
//                coordinates, shifted so max/min = 100, scaled to unit mass.
//                Intended for the 2-pi torus centered at the origin.
//   "gauss-bump" baseline + amplitude * exp(-|x-c|^2 / (2 sigma^2)).
inline Density make_density(const std::string& name, const Grid& grid,
                            const DensityParams& params = {}) {
  ScalarField f(grid);
  if (name == "uniform") {
    const Real v = 1 / grid.total_volume();
    for (Real& x : f.values) x = v;
    return Density(std::move(f), Real(0));
  }
  if (name == "banana") {
    if (grid.dim != 2) throw ValidationError("banana density is two-dimensional");
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      const auto p = grid.node_position(grid.coords(idx));
      const Real x = p[0], y = p[1];
      const Real arg = y - x * x / 2 + 1;
      f.values[idx] = 3 * std::exp(-x * x - 10 * arg * arg) + Real(0.1);
    }
    Real lo = f.values[0], hi = f.values[0];
    for (Real v : f.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // Shift so the max/min ratio is exactly 100, then scale to unit mass
    // (scaling preserves the ratio).
    const Real shift = (hi - 100 * lo) / 99;
    for (Real& v : f.values) v += shift;
    const Real mass = quadrature(f);
    for (Real& v : f.values) v /= mass;
    return Density(std::move(f), Real(0));
  }
  if (name == "gauss-bump") {
    if (!(params.sigma > 0)) throw ValidationError("gauss-bump needs sigma > 0");
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      const auto p = grid.node_position(grid.coords(idx));
      const Real r2 = detail::sq_dist(grid, p, params.center);
      f.values[idx] = params.baseline +
                      params.amplitude * std::exp(-r2 / (2 * params.sigma * params.sigma));
    }
    return Density(std::move(f), Real(0));
  }
  throw ValidationError("unknown density case: " + name);
}

// Known map cases, each with its exact nodewise Jacobian determinant:
//   "translation" x -> x + s,                           det = 1
//   "shear"       (x, y, ..) -> (x + gamma*y, y, ..),   det = 1
//   "radial-bump" x -> c + (1 + g(r))(x - c),           det = (1+g)^(d-1) (1 + g(1 - r^2/sigma^2))
//                 with g = a exp(-r^2 / (2 sigma^2))
//   "swirl"       x -> x + a rot90(grad psi),           det = 1 + a^2 (psi^2/sigma^4)(1 - r^2/sigma^2)
//                 with psi = exp(-r^2 / (2 sigma^2)), 2-D only
// Bump-like cases assume the feature is well localized inside the domain.
inline DiffeoMap make_diffeo(const std::string& name, const Grid& grid,
                             const DiffeoParams& params = {},
                             MapDirection direction = MapDirection::forward) {
  DiffeoMap map(VectorField(grid), direction);
  ScalarField det(grid, 1);

  if (name == "translation") {
    for (int a = 0; a < grid.dim; ++a) {
      std::fill(map.displacement.comp[a].begin(), map.displacement.comp[a].end(),
                params.shift[a]);
    }
    map.jac_det = std::move(det);
    return map;
  }
  if (name == "shear") {
    if (grid.dim < 2) throw ValidationError("shear needs at least 2 dimensions");
    for (std::size_t idx = 0; idx < grid.node_count(); ++idx) {
      const auto p = grid.node_position(grid.coords(idx));
      map.displacement.comp[0][idx] = params.gamma * (p[1] - params.center[1]);
    }
    map.jac_det = std::move(det);
    return map;
  }
  if (name == "radial-bump") {
    if (!(params.sigma > 0)) throw ValidationError("radial-bump needs sigma > 0");
    const Real s2 = params.sigma * params.sigma;
    Real min_det = std::numeric_limits<Real>::infinity();
    for (std::size_t idx = 0; idx < grid.node_count(); ++idx) {
      const auto p = grid.node_position(grid.coords(idx));
      const Real r2 = detail::sq_dist(grid, p, params.center);
      const Real g = params.amplitude * std::exp(-r2 / (2 * s2));
      for (int a = 0; a < grid.dim; ++a) {
        map.displacement.comp[a][idx] = g * (p[a] - params.center[a]);
      }
      Real dv = 1 + g * (1 - r2 / s2);
      for (int a = 0; a < grid.dim - 1; ++a) dv *= (1 + g);
      det.values[idx] = dv;
      min_det = std::min(min_det, dv);
    }
    if (!(min_det > 0))
      throw ValidationError("radial-bump parameters produce a fold (det <= 0)");
    map.jac_det = std::move(det);
    return map;
  }
  if (name == "swirl") {
    if (grid.dim != 2) throw ValidationError("swirl is two-dimensional");
    if (!(params.sigma > 0)) throw ValidationError("swirl needs sigma > 0");
    const Real s2 = params.sigma * params.sigma;
    Real min_det = std::numeric_limits<Real>::infinity();
    for (std::size_t idx = 0; idx < grid.node_count(); ++idx) {
      const auto p = grid.node_position(grid.coords(idx));
      const Real dx = p[0] - params.center[0], dy = p[1] - params.center[1];
      const Real r2 = dx * dx + dy * dy;
      const Real psi = std::exp(-r2 / (2 * s2));
      map.displacement.comp[0][idx] = params.amplitude * (dy / s2) * psi;
      map.displacement.comp[1][idx] = params.amplitude * (-dx / s2) * psi;
      const Real dv =
          1 + params.amplitude * params.amplitude * (psi * psi / (s2 * s2)) * (1 - r2 / s2);
      det.values[idx] = dv;
      min_det = std::min(min_det, dv);
    }
    if (!(min_det > 0)) throw ValidationError("swirl parameters produce a fold (det <= 0)");
    map.jac_det = std::move(det);
    return map;
  }
  throw ValidationError("unknown diffeo case: " + name);
}

// Constant-intensity phases I_t = (M / V_t)^(1/alpha_true) on rectangular
// masks realizing the requested volumes (rounded to whole cells; the achieved
// volume is what the intensity formula uses, keeping the log-log relation
// exact). A series built with alpha_true conserves mass exactly under the
// alpha_true power transform.
inline SubjectSeries make_series(Real total_mass_const, std::span<const Real> volumes,
                                 Real alpha_true, std::string subject_id = "synthetic") {
  if (!(total_mass_const > 0)) throw ValidationError("make_series needs positive mass");
  if (!(alpha_true > 0)) throw ValidationError("make_series needs alpha_true > 0");
  SubjectSeries series;
  series.subject_id = std::move(subject_id);
  for (Real vol : volumes) {
    if (!(vol > 0)) throw ValidationError("make_series: volumes must be positive");
    int nx = std::max(1, static_cast<int>(std::floor(std::sqrt(vol))));
    int ny = std::max(1, static_cast<int>(std::llround(vol / nx)));
    const Grid grid(2, {nx + 4, ny + 4, 1}, {1, 1, 1}, {0, 0, 0}, Bc::periodic);
    const Real achieved = static_cast<Real>(nx) * ny;  // unit cells
    PhaseSample phase{ScalarField(grid), Mask(grid)};
    const Real intensity = std::pow(total_mass_const / achieved, 1 / alpha_true);
    for (int j = 2; j < 2 + ny; ++j) {
      for (int i = 2; i < 2 + nx; ++i) {
        const std::size_t idx = grid.index(i, j);
        phase.intensity.values[idx] = intensity;
        phase.region.values[idx] = 1;
      }
    }
    series.phases.push_back(std::move(phase));
  }
  return series;
}

}  // namespace densreg
