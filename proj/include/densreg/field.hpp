#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "densreg/grid.hpp"

namespace densreg {

struct ScalarField {
  Grid grid;
  std::vector<Real> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, Real fill = 0)
      : grid(g), values(g.node_count(), fill) {}

  Real& operator[](std::size_t i) { return values[i]; }
  Real operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

// Per-node displacement-like vectors, stored one contiguous array per
// component (component a lives in comp[a], a < grid.dim).
struct VectorField {
  Grid grid;
  std::array<std::vector<Real>, 3> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g) : grid(g) {
    for (int a = 0; a < g.dim; ++a) comp[a].assign(g.node_count(), Real(0));
  }
};

struct Mask {
  Grid grid;
  std::vector<std::uint8_t> values;

  Mask() = default;
  explicit Mask(const Grid& g, bool fill = false)
      : grid(g), values(g.node_count(), fill ? 1 : 0) {}
};

template <typename Fn>
ScalarField map_field(const ScalarField& f, Fn&& fn) {
  ScalarField out(f.grid);
  parallel_for(f.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out.values[i] = fn(f.values[i]);
  });
  return out;
}

inline bool all_finite(const ScalarField& f) {
  return std::all_of(f.values.begin(), f.values.end(),
                     [](Real v) { return std::isfinite(v); });
}

inline bool all_finite(const VectorField& v) {
  for (int a = 0; a < v.grid.dim; ++a) {
    if (!std::all_of(v.comp[a].begin(), v.comp[a].end(),
                     [](Real x) { return std::isfinite(x); }))
      return false;
  }
  return true;
}

// Cell-volume-weighted node sum (trapezoid factors on clamped grids).
inline Real quadrature(const ScalarField& f) {
  const Grid& g = f.grid;
  Real sum = 0;
  if (g.bc == Bc::periodic) {
    for (Real v : f.values) sum += v;
    return sum * g.cell_volume();
  }
  std::size_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k) {
    const Real wk = (g.dim >= 3 && (k == 0 || k == g.dims[2] - 1)) ? Real(0.5) : Real(1);
    for (int j = 0; j < g.dims[1]; ++j) {
      const Real wjk = wk * ((g.dim >= 2 && (j == 0 || j == g.dims[1] - 1)) ? Real(0.5) : Real(1));
      for (int i = 0; i < g.dims[0]; ++i, ++idx) {
        const Real w = wjk * ((i == 0 || i == g.dims[0] - 1) ? Real(0.5) : Real(1));
        sum += w * f.values[idx];
      }
    }
  }
  return sum * g.cell_volume();
}

// Quadrature of f restricted to the masked nodes.
inline Real quadrature_masked(const ScalarField& f, const Mask& mask) {
  require_same_grid(f.grid, mask.grid, "quadrature_masked");
  const Grid& g = f.grid;
  Real sum = 0;
  std::size_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k) {
    for (int j = 0; j < g.dims[1]; ++j) {
      for (int i = 0; i < g.dims[0]; ++i, ++idx) {
        if (!mask.values[idx]) continue;
        sum += g.quad_factor({i, j, k}) * f.values[idx];
      }
    }
  }
  return sum * g.cell_volume();
}

inline Real quad_mean(const ScalarField& f) { return quadrature(f) / f.grid.total_volume(); }

inline Real inner_l2(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "inner_l2");
  const Grid& g = a.grid;
  Real sum = 0;
  if (g.bc == Bc::periodic) {
    for (std::size_t i = 0; i < a.size(); ++i) sum += a.values[i] * b.values[i];
    return sum * g.cell_volume();
  }
  std::size_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i, ++idx)
        sum += g.quad_factor({i, j, k}) * a.values[idx] * b.values[idx];
  return sum * g.cell_volume();
}

inline Real inner_l2(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "inner_l2");
  Real sum = 0;
  for (int c = 0; c < a.grid.dim; ++c) {
    ScalarField fa(a.grid), fb(a.grid);
    fa.values = a.comp[c];
    fb.values = b.comp[c];
    sum += inner_l2(fa, fb);
  }
  return sum;
}

inline Real norm_l2(const VectorField& v) { return std::sqrt(inner_l2(v, v)); }

inline Real max_abs(const ScalarField& f) {
  Real m = 0;
  for (Real v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline Real max_abs(const VectorField& v) {
  Real m = 0;
  for (int a = 0; a < v.grid.dim; ++a)
    for (Real x : v.comp[a]) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace densreg
