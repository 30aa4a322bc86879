#pragma once

// Test-only helpers: seeded smooth fields, independent state perturbations,
// histogram comparisons. These deliberately avoid the code paths they are
// used to validate.

#include <cstdint>
#include <random>
#include <vector>

#include "densreg/densreg.hpp"

namespace densreg::oracles {

// Smooth field built from unit-frequency Fourier modes with seeded random
// coefficients. Mean-zero unless a baseline is added by the caller.
inline ScalarField random_smooth_scalar(const Grid& g, std::uint64_t seed,
                                        Real amplitude = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> coeff(-1, 1);
  const Real two_pi = 2 * std::acos(Real(-1));

  std::vector<std::array<int, 3>> modes;
  const int lo = -1, hi = 1;
  for (int kz = (g.dim >= 3 ? lo : 0); kz <= (g.dim >= 3 ? hi : 0); ++kz)
    for (int ky = (g.dim >= 2 ? lo : 0); ky <= (g.dim >= 2 ? hi : 0); ++ky)
      for (int kx = lo; kx <= hi; ++kx) {
        if (kx == 0 && ky == 0 && kz == 0) continue;
        modes.push_back({kx, ky, kz});
      }
  std::vector<Real> ac(modes.size()), as(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    ac[m] = coeff(rng) * amplitude;
    as[m] = coeff(rng) * amplitude;
  }

  ScalarField f(g);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const auto c = g.coords(idx);
    Real theta[3] = {0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      theta[a] = two_pi * (g.node_coord(a, c[a]) - g.origin[a]) / g.extent(a);
    }
    Real v = 0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const Real phase = modes[m][0] * theta[0] + modes[m][1] * theta[1] + modes[m][2] * theta[2];
      v += ac[m] * std::cos(phase) + as[m] * std::sin(phase);
    }
    f.values[idx] = v;
  }
  return f;
}

inline VectorField random_smooth_vector(const Grid& g, std::uint64_t seed,
                                        Real amplitude = 1) {
  VectorField v(g);
  for (int a = 0; a < g.dim; ++a) {
    v.comp[a] = random_smooth_scalar(g, seed + 101 * (a + 1), amplitude).values;
  }
  return v;
}

// Perturbs a WDDR state along the flow of an Eulerian velocity v:
//   phi_s^{-1}          = phi^{-1} ∘ (id - s v)
//   |D phi_s^{-1}|(y)   = |D phi^{-1}|(y - s v(y)) · det(I - s Dv(y))
// The determinant composition rule is exact, so this realizes the variation
// used in deriving the energy gradient.
inline WddrState perturb_state(const WddrState& state, const VectorField& v, Real s) {
  const Grid& g = state.phi_inv.grid();
  DiffeoMap step(VectorField(g), MapDirection::inverse);
  for (int a = 0; a < g.dim; ++a) {
    for (std::size_t i = 0; i < step.displacement.comp[a].size(); ++i) {
      step.displacement.comp[a][i] = -s * v.comp[a][i];
    }
  }
  WddrState out;
  out.phi_inv = compose(state.phi_inv, step);
  out.jac_det = warp_scalar(state.jac_det, step);

  std::vector<Real> partials[3][3];
  for (int a = 0; a < g.dim; ++a)
    for (int b = 0; b < g.dim; ++b)
      partials[a][b] = detail::derivative_axis(g, v.comp[a], b);
  for (std::size_t i = 0; i < out.jac_det.size(); ++i) {
    Real J[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int a = 0; a < g.dim; ++a)
      for (int b = 0; b < g.dim; ++b) J[a][b] = (a == b ? 1 : 0) - s * partials[a][b][i];
    Real det;
    if (g.dim == 1) det = J[0][0];
    else if (g.dim == 2) det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    else
      det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
            J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
            J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
    out.jac_det.values[i] *= det;
  }
  return out;
}

// Central finite difference of the registration energy along the flow of v.
inline Real energy_directional_derivative(const WddrState& state, const VectorField& v,
                                          const ScalarField& weight, const Density& source,
                                          const Density& target, Real fd_step) {
  const auto plus = perturb_state(state, v, fd_step);
  const auto minus = perturb_state(state, v, -fd_step);
  const Real ep = energy(plus, weight, source, target).total;
  const Real em = energy(minus, weight, source, target).total;
  return (ep - em) / (2 * fd_step);
}

struct Histogram {
  int nx = 0, ny = 0;
  std::vector<Real> prob;  // normalized to sum 1
};

// Bins samples over the fundamental domain of a periodic 2-D grid.
inline Histogram sample_histogram(const std::vector<std::array<Real, 3>>& samples,
                                  const Grid& g, int bins) {
  Histogram h;
  h.nx = bins;
  h.ny = bins;
  h.prob.assign(static_cast<std::size_t>(bins) * bins, 0);
  const Real lx = g.extent(0), ly = g.extent(1);
  for (const auto& p : samples) {
    int bx = static_cast<int>((p[0] - g.origin[0]) / lx * bins);
    int by = static_cast<int>((p[1] - g.origin[1]) / ly * bins);
    bx = std::clamp(bx, 0, bins - 1);
    by = std::clamp(by, 0, bins - 1);
    h.prob[static_cast<std::size_t>(by) * bins + bx] += 1;
  }
  const Real n = static_cast<Real>(samples.size());
  for (Real& v : h.prob) v /= n;
  return h;
}

// Cell-integrated density over the same macro-bins (node quadrature mass
// assigned to the bin containing the node).
inline Histogram density_histogram(const Density& rho, int bins) {
  const Grid& g = rho.grid();
  Histogram h;
  h.nx = bins;
  h.ny = bins;
  h.prob.assign(static_cast<std::size_t>(bins) * bins, 0);
  const Real lx = g.extent(0), ly = g.extent(1);
  for (std::size_t idx = 0; idx < rho.field().size(); ++idx) {
    const auto c = g.coords(idx);
    const auto p = g.node_position(c);
    int bx = static_cast<int>((p[0] - g.origin[0]) / lx * bins);
    int by = static_cast<int>((p[1] - g.origin[1]) / ly * bins);
    bx = std::clamp(bx, 0, bins - 1);
    by = std::clamp(by, 0, bins - 1);
    h.prob[static_cast<std::size_t>(by) * bins + bx] +=
        rho.field().values[idx] * g.quad_factor(c);
  }
  Real total = 0;
  for (Real v : h.prob) total += v;
  for (Real& v : h.prob) v /= total;
  return h;
}

inline Real total_variation(const Histogram& a, const Histogram& b) {
  Real tv = 0;
  for (std::size_t i = 0; i < a.prob.size(); ++i) tv += std::abs(a.prob[i] - b.prob[i]);
  return tv / 2;
}

}  // namespace densreg::oracles
