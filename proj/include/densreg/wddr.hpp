#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "densreg/calculus.hpp"
#include "densreg/density.hpp"
#include "densreg/poisson.hpp"

namespace densreg {

struct WddrConfig {
  Real step = 0.05;           // Euler step size (fixed; backtracking optional)
  int iterations = 200;
  Real sigmoid_center = 0;    // penalty sigmoid parameters (when derived from I0)
  Real sigmoid_sharpness = 1;
  Real floor = 0;             // optional re-flooring of the input densities
  int resync_every = 500;     // recompute jac_det from the map every N iterations (0 = never)
  int report_every = 10;      // energy-trace stride
  bool backtrack = false;     // halve the step on energy increase (off: paper scheme)
};

struct EnergySample {
  int iteration = 0;
  Real volume_term = 0;  // E1, the weighted volume-change penalty
  Real data_term = 0;    // E2, the Hellinger mismatch (reported in full)
  Real total = 0;
};

// Registration state: only the inverse map is tracked, with its Jacobian
// determinant maintained multiplicatively alongside it.
struct WddrState {
  DiffeoMap phi_inv;
  ScalarField jac_det;
  std::vector<EnergySample> trace;
};

inline WddrState make_wddr_identity_state(const Grid& g) {
  WddrState s;
  s.phi_inv = DiffeoMap(VectorField(g), MapDirection::inverse);
  s.jac_det = ScalarField(g, 1);
  return s;
}

// f(x) = 1 / (1 + exp(-sharpness (I0(x) - center))): low in air and lung,
// high in soft tissue and bone, so volume change is penalized where matter
// is incompressible.
inline ScalarField penalty_sigmoid(const ScalarField& image, Real center, Real sharpness) {
  if (!(sharpness > 0)) throw ValidationError("penalty_sigmoid requires sharpness > 0");
  return map_field(image, [center, sharpness](Real v) {
    return 1 / (1 + std::exp(-sharpness * (v - center)));
  });
}

struct EnergyParts {
  Real volume_term = 0;
  Real data_term = 0;
  Real total = 0;
};

namespace detail {

// Fields every iteration needs: pullbacks of the weight and source through
// the current inverse map, plus sqrt factors of the tracked determinant.
struct WddrWarped {
  ScalarField weight_w;  // f ∘ phi_inv
  ScalarField source_w;  // I0 ∘ phi_inv
  ScalarField sqrt_jd;
  ScalarField q;         // sqrt(jac_det · I0 ∘ phi_inv)
};

inline WddrWarped wddr_assemble(const WddrState& state, const ScalarField& weight,
                                const Density& source) {
  WddrWarped w;
  w.weight_w = warp_scalar(weight, state.phi_inv);
  w.source_w = warp_scalar(source.field(), state.phi_inv);
  w.sqrt_jd = map_field(state.jac_det, [](Real v) { return std::sqrt(v); });
  w.q = ScalarField(state.jac_det.grid);
  for (std::size_t i = 0; i < w.q.size(); ++i) {
    w.q.values[i] = std::sqrt(state.jac_det.values[i] * w.source_w.values[i]);
  }
  return w;
}

inline EnergyParts wddr_energy_from(const WddrWarped& w, const ScalarField& sqrt_target) {
  const Grid& g = w.q.grid;
  ScalarField e1(g), e2(g);
  for (std::size_t i = 0; i < e1.size(); ++i) {
    const Real dv = w.sqrt_jd.values[i] - 1;
    e1.values[i] = dv * dv * w.weight_w.values[i];
    const Real dm = w.q.values[i] - sqrt_target.values[i];
    e2.values[i] = dm * dm;
  }
  EnergyParts parts;
  parts.volume_term = quadrature(e1);
  parts.data_term = quadrature(e2);
  parts.total = parts.volume_term + parts.data_term;
  return parts;
}

inline VectorField wddr_rhs_from(const WddrWarped& w, const ScalarField& sqrt_target,
                                 const VectorField& grad_sqrt_target) {
  const Grid& g = w.q.grid;
  ScalarField penalty(g);
  for (std::size_t i = 0; i < penalty.size(); ++i) {
    penalty.values[i] = w.weight_w.values[i] * (1 - w.sqrt_jd.values[i]);
  }
  const VectorField grad_penalty = gradient(penalty);
  const VectorField grad_q = gradient(w.q);
  VectorField u(g);
  for (int a = 0; a < g.dim; ++a) {
    for (std::size_t i = 0; i < u.comp[a].size(); ++i) {
      u.comp[a][i] = -grad_penalty.comp[a][i] -
                     w.q.values[i] * grad_sqrt_target.comp[a][i] +
                     grad_q.comp[a][i] * sqrt_target.values[i];
    }
  }
  return u;
}

}  // namespace detail

// E1 = ∫ (sqrt|Dφ⁻¹| − 1)² f∘φ⁻¹ dx,  E2 = ∫ (sqrt(|Dφ⁻¹| I0∘φ⁻¹) − sqrt I1)² dx.
// E2 keeps its constant mass term; the reported value is the full Hellinger
// mismatch, not just the cross term the gradient needs.
inline EnergyParts energy(const WddrState& state, const ScalarField& weight,
                          const Density& source, const Density& target) {
  require_same_grid(state.phi_inv.grid(), source.grid(), "wddr energy");
  require_same_grid(source.grid(), target.grid(), "wddr energy");
  require_same_grid(weight.grid, source.grid(), "wddr energy");
  const auto w = detail::wddr_assemble(state, weight, source);
  const ScalarField sqrt_target =
      map_field(target.field(), [](Real v) { return std::sqrt(v); });
  return detail::wddr_energy_from(w, sqrt_target);
}

// Pre-solve right-hand side u of −Δ(gradient) = u; this is the vector field
// whose L² pairing with a perturbation equals the directional derivative of
// the energy (the keystone identity the tests pin down).
inline VectorField gradient_rhs(const WddrState& state, const ScalarField& weight,
                                const Density& source, const Density& target) {
  const auto w = detail::wddr_assemble(state, weight, source);
  const ScalarField sqrt_target =
      map_field(target.field(), [](Real v) { return std::sqrt(v); });
  const VectorField grad_sqrt_target = gradient(sqrt_target);
  return detail::wddr_rhs_from(w, sqrt_target, grad_sqrt_target);
}

// Sobolev (information-metric) gradient: componentwise mean-zero inverse
// Laplacian of the right-hand side.
inline VectorField sobolev_gradient(const WddrState& state, const ScalarField& weight,
                                    const Density& source, const Density& target,
                                    const PoissonPlan& plan) {
  return plan.solve(gradient_rhs(state, weight, source, target));
}

// Euler integration of the Sobolev gradient flow:
//   v      = −Δ⁻¹(u)
//   φ⁻¹(y) ← φ⁻¹(y + ε v(y))
//   |Dφ⁻¹| ← (|Dφ⁻¹| ∘ (id + ε v)) · exp(−ε div v)
// The tracked determinant drifts at first order; resync_every controls the
// periodic recomputation from the map.
inline WddrState register_densities(const Density& source, const Density& target,
                                    const ScalarField& weight, const WddrConfig& cfg,
                                    const PoissonPlan* shared_plan = nullptr) {
  require_same_grid(source.grid(), target.grid(), "register_densities");
  require_same_grid(weight.grid, source.grid(), "register_densities");
  if (!(cfg.step > 0)) throw ValidationError("register_densities: step must be positive");
  if (cfg.iterations < 0) throw ValidationError("register_densities: negative iterations");

  const Grid& g = source.grid();
  const Density src = cfg.floor > 0 ? Density(source.field(), cfg.floor) : source;
  const Density tgt = cfg.floor > 0 ? Density(target.field(), cfg.floor) : target;

  std::optional<PoissonPlan> own_plan;
  if (!shared_plan) own_plan.emplace(g);
  const PoissonPlan& plan = shared_plan ? *shared_plan : *own_plan;

  const ScalarField sqrt_target = map_field(tgt.field(), [](Real v) { return std::sqrt(v); });
  const VectorField grad_sqrt_target = gradient(sqrt_target);

  WddrState state = make_wddr_identity_state(g);
  Real eps = cfg.step;
  const int report = cfg.report_every > 0 ? cfg.report_every : 1;

  for (int iter = 0;; ++iter) {
    const auto warped = detail::wddr_assemble(state, weight, src);
    const auto parts = detail::wddr_energy_from(warped, sqrt_target);
    if (!std::isfinite(parts.total)) {
      throw NumericalError("register_densities: non-finite energy at iteration " +
                           std::to_string(iter));
    }
    if (iter % report == 0 || iter == cfg.iterations) {
      state.trace.push_back({iter, parts.volume_term, parts.data_term, parts.total});
    }
    if (iter == cfg.iterations) break;

    const VectorField u = detail::wddr_rhs_from(warped, sqrt_target, grad_sqrt_target);
    VectorField v = plan.solve(u);
    for (int a = 0; a < g.dim; ++a) {
      for (Real& x : v.comp[a]) x = -x;
    }
    const ScalarField div_v = divergence(v);

    const auto try_step = [&](Real step_size, DiffeoMap& phi_out, ScalarField& jd_out) {
      DiffeoMap step_map(VectorField(g), MapDirection::inverse);
      for (int a = 0; a < g.dim; ++a) {
        for (std::size_t i = 0; i < step_map.displacement.comp[a].size(); ++i) {
          step_map.displacement.comp[a][i] = step_size * v.comp[a][i];
        }
      }
      phi_out = compose(state.phi_inv, step_map);
      jd_out = warp_scalar(state.jac_det, step_map);
      for (std::size_t i = 0; i < jd_out.size(); ++i) {
        jd_out.values[i] *= std::exp(-step_size * div_v.values[i]);
      }
    };

    DiffeoMap next_map;
    ScalarField next_jd;
    try_step(eps, next_map, next_jd);

    if (cfg.backtrack) {
      for (int halvings = 0; halvings < 12; ++halvings) {
        WddrState probe;
        probe.phi_inv = next_map;
        probe.jac_det = next_jd;
        const auto probe_parts =
            detail::wddr_energy_from(detail::wddr_assemble(probe, weight, src), sqrt_target);
        if (probe_parts.total <= parts.total) break;
        eps *= Real(0.5);
        try_step(eps, next_map, next_jd);
      }
    }

    for (std::size_t i = 0; i < next_jd.size(); ++i) {
      if (!(next_jd.values[i] > 0)) {
        throw NumericalError("register_densities: fold (jac_det <= 0) at iteration " +
                             std::to_string(iter) + ", node " + std::to_string(i));
      }
    }
    state.phi_inv = std::move(next_map);
    state.jac_det = std::move(next_jd);

    if (cfg.resync_every > 0 && (iter + 1) % cfg.resync_every == 0) {
      auto jac = jacobian_det(state.phi_inv);
      if (jac.has_fold) {
        throw NumericalError("register_densities: fold found during jac_det resync at iteration " +
                             std::to_string(iter) + ", node " + std::to_string(jac.first_fold));
      }
      state.jac_det = std::move(jac.det);
    }
  }
  return state;
}

}  // namespace densreg
