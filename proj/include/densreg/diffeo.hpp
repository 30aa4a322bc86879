#pragma once

#include <optional>
#include <string>

#include "densreg/calculus.hpp"
#include "densreg/interp.hpp"

namespace densreg {

enum class MapDirection { forward, inverse };

// Discretized diffeomorphism stored as identity plus displacement, so the
// identity is exact and periodic interpolation of the map is well defined.
// The optional jac_det carries a tracked determinant field (always of the
// stored map itself, whichever direction that is).
struct DiffeoMap {
  VectorField displacement;
  std::optional<ScalarField> jac_det;
  MapDirection direction = MapDirection::forward;

  DiffeoMap() = default;
  DiffeoMap(VectorField disp, MapDirection dir)
      : displacement(std::move(disp)), direction(dir) {}

  const Grid& grid() const { return displacement.grid; }

  // map(x) = x + displacement(x), displacement interpolated off-node.
  std::array<Real, 3> operator()(const std::array<Real, 3>& p) const {
    const auto d = interp_vector_at(displacement, p);
    std::array<Real, 3> out = p;
    for (int a = 0; a < grid().dim; ++a) out[a] += d[a];
    return out;
  }
};

inline DiffeoMap identity_map(const Grid& g, MapDirection dir = MapDirection::forward) {
  DiffeoMap m(VectorField(g), dir);
  m.jac_det = ScalarField(g, 1);
  return m;
}

namespace detail {

// Grid-unit coordinates of node idx displaced by the map: u_a = i_a + d_a/h_a.
// Computing in grid units keeps node queries exact when the displacement is 0.
inline std::array<Real, 3> mapped_grid_units(const DiffeoMap& m, std::size_t idx,
                                             const std::array<int, 3>& c) {
  const Grid& g = m.grid();
  std::array<Real, 3> u{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    u[a] = c[a] + m.displacement.comp[a][idx] / g.spacing[a];
  }
  return u;
}

}  // namespace detail

// Nodewise f ∘ m: samples f at every mapped node.
inline ScalarField warp_scalar(const ScalarField& f, const DiffeoMap& m) {
  require_same_grid(f.grid, m.grid(), "warp_scalar");
  const Grid& g = f.grid;
  ScalarField out(g);
  parallel_for(g.node_count(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      out.values[idx] =
          detail::interp_grid_units(g, f.values, detail::mapped_grid_units(m, idx, g.coords(idx)));
    }
  });
  return out;
}

inline VectorField warp_vector(const VectorField& v, const DiffeoMap& m) {
  require_same_grid(v.grid, m.grid(), "warp_vector");
  const Grid& g = v.grid;
  VectorField out(g);
  parallel_for(g.node_count(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const auto u = detail::mapped_grid_units(m, idx, g.coords(idx));
      for (int a = 0; a < g.dim; ++a) {
        out.comp[a][idx] = detail::interp_grid_units(g, v.comp[a], u);
      }
    }
  });
  return out;
}

// result(x) = outer(inner(x)). The outer displacement is interpolated at the
// inner-mapped nodes; absolute positions never wrap, only displacements are
// interpolated. The result's jac_det is not auto-computed.
inline DiffeoMap compose(const DiffeoMap& outer, const DiffeoMap& inner) {
  require_same_grid(outer.grid(), inner.grid(), "compose");
  const Grid& g = outer.grid();
  DiffeoMap out(VectorField(g), outer.direction);
  parallel_for(g.node_count(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const auto u = detail::mapped_grid_units(inner, idx, g.coords(idx));
      for (int a = 0; a < g.dim; ++a) {
        out.displacement.comp[a][idx] =
            inner.displacement.comp[a][idx] + detail::interp_grid_units(g, outer.displacement.comp[a], u);
      }
    }
  });
  return out;
}

struct JacobianResult {
  ScalarField det;
  bool has_fold = false;          // true if det <= 0 anywhere (diagnostic, not an error)
  std::size_t first_fold = 0;     // node index of the first non-positive value
};

// Determinant of the finite-difference Jacobian of map(x) = x + d(x).
inline JacobianResult jacobian_det(const DiffeoMap& m) {
  const Grid& g = m.grid();
  const int d = g.dim;
  std::vector<Real> partials[3][3];  // partials[a][b] = d(disp_a)/dx_b
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      partials[a][b] = detail::derivative_axis(g, m.displacement.comp[a], b);

  JacobianResult res;
  res.det = ScalarField(g);
  bool fold = false;
  std::size_t first = 0;
  for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
    Real J[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) J[a][b] = (a == b ? 1 : 0) + partials[a][b][idx];
    Real det;
    if (d == 1) {
      det = J[0][0];
    } else if (d == 2) {
      det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    } else {
      det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
            J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
            J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
    }
    res.det.values[idx] = det;
    if (det <= 0 && !fold) {
      fold = true;
      first = idx;
    }
  }
  res.has_fold = fold;
  res.first_fold = first;
  return res;
}

namespace detail {

inline bool solve_small(int d, const Real J[3][3], const Real r[3], Real out[3]) {
  if (d == 1) {
    if (J[0][0] == 0) return false;
    out[0] = r[0] / J[0][0];
    return true;
  }
  if (d == 2) {
    const Real det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (det == 0) return false;
    out[0] = (r[0] * J[1][1] - r[1] * J[0][1]) / det;
    out[1] = (J[0][0] * r[1] - J[1][0] * r[0]) / det;
    return true;
  }
  const Real det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                   J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                   J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
  if (det == 0) return false;
  const Real inv = 1 / det;
  out[0] = inv * (r[0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                  J[0][1] * (r[1] * J[2][2] - J[1][2] * r[2]) +
                  J[0][2] * (r[1] * J[2][1] - J[1][1] * r[2]));
  out[1] = inv * (J[0][0] * (r[1] * J[2][2] - J[1][2] * r[2]) -
                  r[0] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                  J[0][2] * (J[1][0] * r[2] - r[1] * J[2][0]));
  out[2] = inv * (J[0][0] * (J[1][1] * r[2] - r[1] * J[2][1]) -
                  J[0][1] * (J[1][0] * r[2] - r[1] * J[2][0]) +
                  r[0] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]));
  return true;
}

}  // namespace detail

// Pointwise inverse by damped Newton iteration on e + d(x + e) = 0, the
// displacement form of m(y) = x. Warm-started from `init` when given (e.g. a
// first-order tracked inverse). Intended for diagnostics and evaluation, not
// for the solver loops themselves.
inline DiffeoMap invert(const DiffeoMap& m, const DiffeoMap* init = nullptr,
                        int max_iters = 60, Real tol_grid_units = 1e-12) {
  const Grid& g = m.grid();
  if (init) require_same_grid(g, init->grid(), "invert");
  DiffeoMap out(VectorField(g),
                m.direction == MapDirection::forward ? MapDirection::inverse
                                                     : MapDirection::forward);
  const int d = g.dim;
  std::vector<Real> partials[3][3];
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      partials[a][b] = detail::derivative_axis(g, m.displacement.comp[a], b);

  Real hmin = g.spacing[0];
  for (int a = 1; a < d; ++a) hmin = std::min(hmin, g.spacing[a]);
  const Real tol = tol_grid_units * hmin;

  parallel_for(g.node_count(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const auto c = g.coords(idx);
      std::array<Real, 3> e{0, 0, 0};
      if (init) {
        for (int a = 0; a < d; ++a) e[a] = init->displacement.comp[a][idx];
      }
      const auto residual = [&](const std::array<Real, 3>& ee, Real r[3]) {
        std::array<Real, 3> u{0, 0, 0};
        for (int a = 0; a < d; ++a) u[a] = c[a] + ee[a] / g.spacing[a];
        const auto dv = interp_vector_grid_units(m.displacement, u);
        Real norm = 0;
        for (int a = 0; a < d; ++a) {
          r[a] = ee[a] + dv[a];
          norm = std::max(norm, std::abs(r[a]));
        }
        return norm;
      };
      Real r[3];
      Real rnorm = residual(e, r);
      for (int it = 0; it < max_iters && rnorm > tol; ++it) {
        std::array<Real, 3> u{0, 0, 0};
        for (int a = 0; a < d; ++a) u[a] = c[a] + e[a] / g.spacing[a];
        Real J[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            J[a][b] = (a == b ? 1 : 0) + detail::interp_grid_units(g, partials[a][b], u);
        Real step[3];
        if (!detail::solve_small(d, J, r, step)) break;
        // Backtrack if the full Newton step overshoots.
        Real lambda = 1;
        for (int bt = 0; bt < 8; ++bt) {
          std::array<Real, 3> trial = e;
          for (int a = 0; a < d; ++a) trial[a] -= lambda * step[a];
          Real rt[3];
          const Real tn = residual(trial, rt);
          if (tn < rnorm) {
            e = trial;
            rnorm = tn;
            for (int a = 0; a < d; ++a) r[a] = rt[a];
            break;
          }
          lambda *= Real(0.5);
          if (bt == 7) rnorm = 0;  // stuck; keep best-so-far
        }
      }
      for (int a = 0; a < d; ++a) out.displacement.comp[a][idx] = e[a];
    }
  });
  return out;
}

}  // namespace densreg
