#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "densreg/field.hpp"

namespace densreg {

namespace detail {

// Per-axis interpolation anchor: low node, high node, fractional weight.
struct AxisAnchor {
  int lo = 0;
  int hi = 0;
  Real t = 0;
};

inline AxisAnchor axis_anchor(const Grid& g, int axis, Real u) {
  const int n = g.dims[axis];
  AxisAnchor a;
  if (g.bc == Bc::periodic) {
    u -= n * std::floor(u / n);
    if (u >= n) u = 0;  // guard against floor rounding at the seam
    a.lo = static_cast<int>(u);
    if (a.lo >= n) a.lo = n - 1;
    a.t = u - a.lo;
    a.hi = a.lo + 1 == n ? 0 : a.lo + 1;
  } else {
    if (u <= 0) {
      a.lo = 0;
      a.hi = 1;
      a.t = 0;
    } else if (u >= n - 1) {
      a.lo = n - 2;
      a.hi = n - 1;
      a.t = 1;
    } else {
      a.lo = static_cast<int>(u);
      a.hi = a.lo + 1;
      a.t = u - a.lo;
    }
  }
  return a;
}

// Multilinear lookup at continuous grid coordinates u (units of node index).
// Exact at integer coordinates: the zero-weight corners contribute exactly 0.
inline Real interp_grid_units(const Grid& g, std::span<const Real> values,
                              const std::array<Real, 3>& u) {
  AxisAnchor ax[3];
  for (int a = 0; a < g.dim; ++a) ax[a] = axis_anchor(g, a, u[a]);

  const auto at = [&](int i, int j, int k) -> Real {
    return values[g.index(i, j, k)];
  };

  if (g.dim == 1) {
    return (1 - ax[0].t) * at(ax[0].lo, 0, 0) + ax[0].t * at(ax[0].hi, 0, 0);
  }
  if (g.dim == 2) {
    const Real v00 = at(ax[0].lo, ax[1].lo, 0), v10 = at(ax[0].hi, ax[1].lo, 0);
    const Real v01 = at(ax[0].lo, ax[1].hi, 0), v11 = at(ax[0].hi, ax[1].hi, 0);
    const Real b0 = (1 - ax[0].t) * v00 + ax[0].t * v10;
    const Real b1 = (1 - ax[0].t) * v01 + ax[0].t * v11;
    return (1 - ax[1].t) * b0 + ax[1].t * b1;
  }
  Real plane[2];
  for (int kk = 0; kk < 2; ++kk) {
    const int k = kk ? ax[2].hi : ax[2].lo;
    const Real v00 = at(ax[0].lo, ax[1].lo, k), v10 = at(ax[0].hi, ax[1].lo, k);
    const Real v01 = at(ax[0].lo, ax[1].hi, k), v11 = at(ax[0].hi, ax[1].hi, k);
    const Real b0 = (1 - ax[0].t) * v00 + ax[0].t * v10;
    const Real b1 = (1 - ax[0].t) * v01 + ax[0].t * v11;
    plane[kk] = (1 - ax[1].t) * b0 + ax[1].t * b1;
  }
  return (1 - ax[2].t) * plane[0] + ax[2].t * plane[1];
}

inline std::array<Real, 3> to_grid_units(const Grid& g, const std::array<Real, 3>& p) {
  std::array<Real, 3> u{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) u[a] = (p[a] - g.origin[a]) / g.spacing[a];
  return u;
}

}  // namespace detail

// Multilinear interpolation of a scalar field at physical-space points.
// Periodic grids wrap the query; clamped grids clamp it to the node hull.
inline Real interp_scalar_at(const ScalarField& f, const std::array<Real, 3>& point) {
  for (int a = 0; a < f.grid.dim; ++a) {
    if (!std::isfinite(point[a])) throw ValidationError("interp_scalar: non-finite point");
  }
  return detail::interp_grid_units(f.grid, f.values, detail::to_grid_units(f.grid, point));
}

inline std::vector<Real> interp_scalar(const ScalarField& f,
                                       std::span<const std::array<Real, 3>> points) {
  for (const auto& p : points) {
    for (int a = 0; a < f.grid.dim; ++a) {
      if (!std::isfinite(p[a])) throw ValidationError("interp_scalar: non-finite point");
    }
  }
  std::vector<Real> out(points.size());
  parallel_for(points.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      out[i] = detail::interp_grid_units(f.grid, f.values,
                                         detail::to_grid_units(f.grid, points[i]));
    }
  });
  return out;
}

// Vector interpolation at grid-unit coordinates, one component at a time.
inline std::array<Real, 3> interp_vector_grid_units(const VectorField& v,
                                                    const std::array<Real, 3>& u) {
  std::array<Real, 3> out{0, 0, 0};
  for (int a = 0; a < v.grid.dim; ++a) {
    out[a] = detail::interp_grid_units(v.grid, v.comp[a], u);
  }
  return out;
}

inline std::array<Real, 3> interp_vector_at(const VectorField& v,
                                            const std::array<Real, 3>& point) {
  return interp_vector_grid_units(v, detail::to_grid_units(v.grid, point));
}

}  // namespace densreg
