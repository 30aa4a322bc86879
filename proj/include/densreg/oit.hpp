#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "densreg/calculus.hpp"
#include "densreg/density.hpp"
#include "densreg/poisson.hpp"

namespace densreg {

struct OitConfig {
  int steps = 100;             // K; the step size is 1/K
  bool track_inverse = false;  // first-order inverse tracking alongside the map
  bool renormalize = false;    // scale both inputs to unit mass first
  Real floor = 0;              // optional re-flooring of the inputs
  int residual_stride = 0;     // record the pullback residual every N steps (0 = end only)
};

struct OitStepRecord {
  int step = 0;
  Real velocity_l2 = 0;
  Real pullback_residual = std::numeric_limits<Real>::quiet_NaN();
};

struct OitDiagnostics {
  Real theta = 0;  // Fisher-Rao distance between the (normalized) endpoints
  std::vector<OitStepRecord> steps;
  Real final_pullback_residual = std::numeric_limits<Real>::quiet_NaN();
  // Fisher-Rao distance from rho0 to the halfway pushforward; the lift follows
  // the geodesic, so this should sit near theta/2. Needs track_inverse.
  Real midpoint_fr_distance = std::numeric_limits<Real>::quiet_NaN();
};

struct OitResult {
  DiffeoMap phi;                      // forward map, fold-free on success
  std::optional<DiffeoMap> phi_inv;   // tracked inverse when requested
  OitDiagnostics diagnostics;
};

namespace detail {

// Central-difference Jacobian determinant at a single periodic node.
inline Real det_at_node_periodic(const VectorField& disp, const std::array<int, 3>& c) {
  const Grid& g = disp.grid;
  const int d = g.dim;
  Real J[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int b = 0; b < d; ++b) {
    std::array<int, 3> up = c, dn = c;
    up[b] = (c[b] + 1) % g.dims[b];
    dn[b] = (c[b] - 1 + g.dims[b]) % g.dims[b];
    const std::size_t iu = g.index(up[0], up[1], up[2]);
    const std::size_t id = g.index(dn[0], dn[1], dn[2]);
    const Real inv2h = 1 / (2 * g.spacing[b]);
    for (int a = 0; a < d; ++a) {
      J[a][b] = (a == b ? 1 : 0) + (disp.comp[a][iu] - disp.comp[a][id]) * inv2h;
    }
  }
  if (d == 1) return J[0][0];
  if (d == 2) return J[0][0] * J[1][1] - J[0][1] * J[1][0];
  return J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
         J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
         J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
}

// Relative L1 deviation of |D phi| rho_t(phi(x)) from rho0; by change of
// variables this equals the pushforward residual of phi against rho_t.
inline Real pullback_residual(const DiffeoMap& phi, const ScalarField& rho_t,
                              const Density& rho0) {
  const ScalarField moved = warp_scalar(rho_t, phi);
  const ScalarField det = jacobian_det(phi).det;
  ScalarField dev(phi.grid());
  for (std::size_t i = 0; i < dev.size(); ++i) {
    dev.values[i] = std::abs(det.values[i] * moved.values[i] - rho0.field().values[i]);
  }
  return quadrature(dev) / rho0.total_mass();
}

}  // namespace detail

// Optimal information transport: lifts the Fisher-Rao geodesic between rho0
// and rho1 to a path of diffeomorphisms via one Poisson solve per step,
// returning phi with phi_* rho0 ~= rho1. Supported setting: periodic grid
// (flat torus) with uniform rho0 as the metric volume form; a non-uniform
// rho0 would need a metric-weighted Laplacian and is rejected.
inline OitResult oit_solve(const Density& rho0_in, const Density& rho1_in,
                           const OitConfig& cfg, const PoissonPlan* shared_plan = nullptr) {
  if (cfg.steps < 1) throw ValidationError("oit_solve: steps must be >= 1");
  require_same_grid(rho0_in.grid(), rho1_in.grid(), "oit_solve");
  const Grid& g = rho0_in.grid();
  if (g.bc != Bc::periodic)
    throw ValidationError("oit_solve: only periodic (flat torus) grids are supported");

  Density rho0 = cfg.floor > 0 ? Density(rho0_in.field(), cfg.floor) : rho0_in;
  Density rho1 = cfg.floor > 0 ? Density(rho1_in.field(), cfg.floor) : rho1_in;
  if (cfg.renormalize) {
    rho0 = normalized(rho0);
    rho1 = normalized(rho1);
  }
  for (Real v : rho0.field().values) {
    if (!(v > 0)) throw ValidationError("oit_solve: source density must be strictly positive");
  }
  for (Real v : rho1.field().values) {
    if (!(v > 0)) throw ValidationError("oit_solve: target density must be strictly positive");
  }
  {
    const Real mean = quad_mean(rho0.field());
    Real dev = 0;
    for (Real v : rho0.field().values) dev = std::max(dev, std::abs(v - mean));
    if (dev > Real(1e-6) * mean)
      throw ValidationError(
          "oit_solve: rho0 must be uniform (it is the metric volume form; "
          "non-uniform volume forms are unsupported)");
  }

  detail::FisherRaoPath path(rho0, rho1);  // also enforces equal mass
  std::optional<PoissonPlan> own_plan;
  if (!shared_plan) own_plan.emplace(g);
  const PoissonPlan& plan = shared_plan ? *shared_plan : *own_plan;

  const int K = cfg.steps;
  const Real eps = Real(1) / K;
  DiffeoMap phi = identity_map(g, MapDirection::forward);
  phi.jac_det.reset();
  DiffeoMap phi_inv = identity_map(g, MapDirection::inverse);
  phi_inv.jac_det.reset();

  OitResult result;
  result.diagnostics.theta = path.theta;
  result.diagnostics.steps.reserve(K);

  // Coarse probe lattice for the per-step fold check; the full determinant is
  // only computed for diagnostics and the final validity check.
  std::array<int, 3> probe_stride{1, 1, 1};
  for (int a = 0; a < g.dim; ++a) probe_stride[a] = std::max(1, g.dims[a] / 16);

  for (int k = 0; k < K; ++k) {
    const Real t = static_cast<Real>(k) / K;
    const ScalarField rate = path.log_rate(t);          // rho_dot/rho at t_k
    const ScalarField source = warp_scalar(rate, phi);  // composed with phi_k
    const ScalarField potential = plan.solve(source);   // mean-zero Poisson solve
    const VectorField velocity = gradient(potential);

    OitStepRecord rec;
    rec.step = k;
    rec.velocity_l2 = norm_l2(velocity);

    DiffeoMap step_map(VectorField(g), MapDirection::forward);
    for (int a = 0; a < g.dim; ++a) {
      for (std::size_t i = 0; i < step_map.displacement.comp[a].size(); ++i) {
        step_map.displacement.comp[a][i] = -eps * velocity.comp[a][i];
      }
    }
    phi = compose(phi, step_map);

    if (cfg.track_inverse) {
      const VectorField v_at_inv = warp_vector(velocity, phi_inv);
      for (int a = 0; a < g.dim; ++a) {
        for (std::size_t i = 0; i < phi_inv.displacement.comp[a].size(); ++i) {
          phi_inv.displacement.comp[a][i] += eps * v_at_inv.comp[a][i];
        }
      }
    }

    for (int kk = 0; kk < g.dims[2]; kk += probe_stride[2]) {
      for (int jj = 0; jj < g.dims[1]; jj += probe_stride[1]) {
        for (int ii = 0; ii < g.dims[0]; ii += probe_stride[0]) {
          if (detail::det_at_node_periodic(phi.displacement, {ii, jj, kk}) <= 0) {
            throw NumericalError("oit_solve: fold detected at step " + std::to_string(k));
          }
        }
      }
    }

    if (cfg.residual_stride > 0 && (k + 1) % cfg.residual_stride == 0) {
      rec.pullback_residual =
          detail::pullback_residual(phi, path.value(static_cast<Real>(k + 1) / K), rho0);
    }
    result.diagnostics.steps.push_back(rec);

    if (cfg.track_inverse && K >= 2 && k + 1 == K / 2) {
      auto jac = jacobian_det(phi_inv);
      if (!jac.has_fold) {
        DiffeoMap inv_with_det = phi_inv;
        inv_with_det.jac_det = jac.det;
        const Density pushed = pushforward_alpha(rho0, inv_with_det, Real(1));
        const Real scale = rho0.total_mass() / pushed.total_mass();
        const Density rescaled(
            map_field(pushed.field(), [scale](Real v) { return v * scale; }), Real(0));
        result.diagnostics.midpoint_fr_distance = fisher_rao_distance(rho0, rescaled);
      }
    }
  }

  auto final_jac = jacobian_det(phi);
  if (final_jac.has_fold) {
    throw NumericalError("oit_solve: final map is folded (det <= 0 at node " +
                         std::to_string(final_jac.first_fold) + ")");
  }
  phi.jac_det = std::move(final_jac.det);
  result.diagnostics.final_pullback_residual =
      detail::pullback_residual(phi, rho1.field(), rho0);

  result.phi = std::move(phi);
  if (cfg.track_inverse) result.phi_inv = std::move(phi_inv);
  return result;
}

// Transport-map sampling: i.i.d. uniform points on the torus pushed through
// phi. Deterministic for a fixed seed; cost per sample is independent of the
// number of solver steps that produced phi.
inline std::vector<std::array<Real, 3>> draw_samples(const DiffeoMap& phi, std::size_t n,
                                                     std::uint64_t seed) {
  const Grid& g = phi.grid();
  std::vector<std::array<Real, 3>> out(n, {0, 0, 0});
  if (n == 0) return out;
  std::mt19937_64 rng(seed);
  const auto unit = [&rng]() {
    // 53-bit mantissa draw; identical across platforms for a fixed engine.
    return static_cast<Real>(rng() >> 11) * Real(0x1.0p-53);
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::array<Real, 3> p{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      p[a] = g.origin[a] + unit() * g.extent(a);
    }
    auto y = phi(p);
    if (g.bc == Bc::periodic) {
      for (int a = 0; a < g.dim; ++a) {
        const Real L = g.extent(a);
        y[a] -= L * std::floor((y[a] - g.origin[a]) / L);
      }
    }
    out[i] = y;
  }
  return out;
}

}  // namespace densreg
