#pragma once

#include <array>
#include <cmath>
#include <string>

#include "densreg/common.hpp"

namespace densreg {

enum class Bc { periodic, clamped };

// Node-centered rectangular lattice in 1-3 dimensions. Axis 0 is the
// fastest-varying axis in memory and in the file format.
//
// Quadrature follows the node-centered convention: on periodic grids every
// node carries one cell volume; on clamped grids the trapezoid rule applies
// (weight 1/2 per boundary face an axis touches).
struct Grid {
  int dim = 0;
  std::array<int, 3> dims{1, 1, 1};
  std::array<Real, 3> spacing{1, 1, 1};
  std::array<Real, 3> origin{0, 0, 0};
  Bc bc = Bc::periodic;

  Grid() = default;
  Grid(int dim_, std::array<int, 3> dims_, std::array<Real, 3> spacing_,
       std::array<Real, 3> origin_, Bc bc_)
      : dim(dim_), dims(dims_), spacing(spacing_), origin(origin_), bc(bc_) {
    if (dim < 1 || dim > 3) throw ValidationError("grid dimension must be 1, 2, or 3");
    for (int a = dim; a < 3; ++a) {
      dims[a] = 1;
      spacing[a] = 1;
      origin[a] = 0;
    }
    for (int a = 0; a < dim; ++a) {
      if (dims[a] < 2) throw ValidationError("grid needs at least 2 nodes per axis");
      if (!(spacing[a] > 0) || !std::isfinite(spacing[a]))
        throw ValidationError("grid spacing must be positive and finite");
      if (!std::isfinite(origin[a])) throw ValidationError("grid origin must be finite");
    }
  }

  std::size_t node_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  Real cell_volume() const {
    Real v = 1;
    for (int a = 0; a < dim; ++a) v *= spacing[a];
    return v;
  }

  // Physical length of one axis: periodic axes close up (n*h), clamped axes
  // span the node hull ((n-1)*h).
  Real extent(int axis) const {
    const int n = dims[axis];
    return bc == Bc::periodic ? n * spacing[axis] : (n - 1) * spacing[axis];
  }

  Real total_volume() const {
    Real v = 1;
    for (int a = 0; a < dim; ++a) v *= extent(a);
    return v;
  }

  std::size_t index(int i, int j = 0, int k = 0) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) +
                                                static_cast<std::size_t>(dims[1]) * k);
  }

  std::array<int, 3> coords(std::size_t idx) const {
    std::array<int, 3> c;
    c[0] = static_cast<int>(idx % dims[0]);
    idx /= dims[0];
    c[1] = static_cast<int>(idx % dims[1]);
    c[2] = static_cast<int>(idx / dims[1]);
    return c;
  }

  Real node_coord(int axis, int i) const { return origin[axis] + spacing[axis] * i; }

  std::array<Real, 3> node_position(const std::array<int, 3>& c) const {
    return {node_coord(0, c[0]), node_coord(1, c[1]), node_coord(2, c[2])};
  }

  // Trapezoid weight factor for one node (1 on periodic grids).
  Real quad_factor(const std::array<int, 3>& c) const {
    if (bc == Bc::periodic) return 1;
    Real f = 1;
    for (int a = 0; a < dim; ++a) {
      if (c[a] == 0 || c[a] == dims[a] - 1) f *= Real(0.5);
    }
    return f;
  }

  bool same_layout(const Grid& o) const {
    if (dim != o.dim || bc != o.bc) return false;
    for (int a = 0; a < dim; ++a) {
      if (dims[a] != o.dims[a] || spacing[a] != o.spacing[a] || origin[a] != o.origin[a])
        return false;
    }
    return true;
  }

  std::string describe() const {
    std::string s = "[";
    for (int a = 0; a < dim; ++a) {
      if (a) s += "x";
      s += std::to_string(dims[a]);
    }
    s += bc == Bc::periodic ? ", periodic]" : ", clamped]";
    return s;
  }
};

inline Grid make_grid_uniform(int dim, int n, Real spacing, Real origin, Bc bc) {
  return Grid(dim, {n, n, n}, {spacing, spacing, spacing}, {origin, origin, origin}, bc);
}

// The 2*pi torus centered at the origin, the usual setting for periodic tests.
inline Grid make_torus_grid(int dim, int n) {
  const Real two_pi = 2 * Real(3.14159265358979323846L);
  return make_grid_uniform(dim, n, two_pi / n, -two_pi / 2, Bc::periodic);
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_layout(b))
    throw ValidationError(std::string(what) + ": grid mismatch " + a.describe() + " vs " +
                          b.describe());
}

}  // namespace densreg
