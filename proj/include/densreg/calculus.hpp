#pragma once

#include <cstddef>
#include <vector>

#include "densreg/field.hpp"

namespace densreg {

namespace detail {

// Second-order first derivative along one axis: central differences inside,
// periodic wrap or one-sided second-order stencils at clamped boundaries.
inline std::vector<Real> derivative_axis(const Grid& g, const std::vector<Real>& v, int axis) {
  if (g.dims[axis] < 3)
    throw ValidationError("derivative needs at least 3 nodes per axis");
  const int n = g.dims[axis];
  const std::ptrdiff_t stride = axis == 0 ? 1
                              : axis == 1 ? g.dims[0]
                                          : static_cast<std::ptrdiff_t>(g.dims[0]) * g.dims[1];
  const Real inv2h = 1 / (2 * g.spacing[axis]);
  std::vector<Real> out(v.size());

  parallel_for(v.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const auto c = g.coords(idx);
      const int i = c[axis];
      Real d;
      if (i > 0 && i < n - 1) {
        d = (v[idx + stride] - v[idx - stride]) * inv2h;
      } else if (g.bc == Bc::periodic) {
        const std::size_t up = i == n - 1 ? idx - stride * (n - 1) : idx + stride;
        const std::size_t dn = i == 0 ? idx + stride * (n - 1) : idx - stride;
        d = (v[up] - v[dn]) * inv2h;
      } else if (i == 0) {
        d = (-3 * v[idx] + 4 * v[idx + stride] - v[idx + 2 * stride]) * inv2h;
      } else {
        d = (3 * v[idx] - 4 * v[idx - stride] + v[idx - 2 * stride]) * inv2h;
      }
      out[idx] = d;
    }
  });
  return out;
}

// Compact second-difference along one axis; clamped boundaries use the even
// (Neumann) reflection ghost, matching the cosine-basis Poisson solve.
inline void add_second_difference(const Grid& g, const std::vector<Real>& v, int axis,
                                  std::vector<Real>& acc) {
  const int n = g.dims[axis];
  const std::ptrdiff_t stride = axis == 0 ? 1
                              : axis == 1 ? g.dims[0]
                                          : static_cast<std::ptrdiff_t>(g.dims[0]) * g.dims[1];
  const Real invh2 = 1 / (g.spacing[axis] * g.spacing[axis]);

  parallel_for(v.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const auto c = g.coords(idx);
      const int i = c[axis];
      Real up, dn;
      if (i > 0 && i < n - 1) {
        up = v[idx + stride];
        dn = v[idx - stride];
      } else if (g.bc == Bc::periodic) {
        up = i == n - 1 ? v[idx - stride * (n - 1)] : v[idx + stride];
        dn = i == 0 ? v[idx + stride * (n - 1)] : v[idx - stride];
      } else if (i == 0) {
        up = v[idx + stride];
        dn = v[idx + stride];
      } else {
        up = v[idx - stride];
        dn = v[idx - stride];
      }
      acc[idx] += (up - 2 * v[idx] + dn) * invh2;
    }
  });
}

}  // namespace detail

inline VectorField gradient(const ScalarField& f) {
  VectorField out(f.grid);
  for (int a = 0; a < f.grid.dim; ++a) {
    out.comp[a] = detail::derivative_axis(f.grid, f.values, a);
  }
  return out;
}

inline ScalarField divergence(const VectorField& v) {
  ScalarField out(v.grid);
  for (int a = 0; a < v.grid.dim; ++a) {
    auto d = detail::derivative_axis(v.grid, v.comp[a], a);
    for (std::size_t i = 0; i < d.size(); ++i) out.values[i] += d[i];
  }
  return out;
}

// Compact 3/5/7-point Laplacian. This is the stencil the spectral solver
// inverts exactly, which makes the round-trip oracle tight.
inline ScalarField laplacian(const ScalarField& f) {
  ScalarField out(f.grid);
  for (int a = 0; a < f.grid.dim; ++a) {
    detail::add_second_difference(f.grid, f.values, a, out.values);
  }
  return out;
}

}  // namespace densreg
