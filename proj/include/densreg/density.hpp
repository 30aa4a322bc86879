#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "densreg/diffeo.hpp"

namespace densreg {

// Strictly positive scalar field with a cached total mass. The floor is
// applied once at construction; a positive floor guarantees positivity.
class Density {
 public:
  Density() = default;

  Density(ScalarField field, Real floor) : field_(std::move(field)), floor_(floor) {
    if (floor_ < 0) throw ValidationError("density floor must be >= 0");
    for (Real& v : field_.values) {
      if (!std::isfinite(v)) throw ValidationError("density values must be finite");
      if (v < floor_) v = floor_;
    }
    mass_ = quadrature(field_);
  }

  // Raw-image constructor: floors at 1e-6 of the mean intensity so CT air
  // regions do not violate strict positivity.
  static Density from_image(const ScalarField& image) {
    const Real mean = quad_mean(image);
    if (!(mean > 0)) throw ValidationError("image mean must be positive to derive a floor");
    return Density(image, Real(1e-6) * mean);
  }

  const ScalarField& field() const { return field_; }
  const Grid& grid() const { return field_.grid; }
  Real floor() const { return floor_; }
  Real total_mass() const { return mass_; }

 private:
  ScalarField field_;
  Real floor_ = 0;
  Real mass_ = 0;
};

inline Real total_mass(const Density& rho, const Mask* mask = nullptr) {
  if (!mask) return rho.total_mass();
  return quadrature_masked(rho.field(), *mask);
}

// p-mass of the field: integral of rho^p (mask optional). Intensities are not
// floored here; zeros are legitimate data for the alpha fit.
inline Real p_mass(const ScalarField& rho, Real p, const Mask* mask = nullptr) {
  if (!(p > 0)) throw ValidationError("p_mass requires p > 0");
  ScalarField powed = map_field(rho, [p](Real v) { return std::pow(v, p); });
  return mask ? quadrature_masked(powed, *mask) : quadrature(powed);
}

inline Real p_mass(const Density& rho, Real p, const Mask* mask = nullptr) {
  return p_mass(rho.field(), p, mask);
}

// Scales to unit total mass (the canonical projection between mass orbits).
inline Density normalized(const Density& rho) {
  const Real m = rho.total_mass();
  if (!(m > 0)) throw ValidationError("cannot normalize a density with non-positive mass");
  ScalarField f = map_field(rho.field(), [m](Real v) { return v / m; });
  return Density(std::move(f), rho.floor() / m);
}

namespace detail {

inline void require_equal_mass(const Density& a, const Density& b, Real tol_rel,
                               const char* what) {
  const Real ma = a.total_mass(), mb = b.total_mass();
  const Real scale = std::max(std::abs(ma), std::abs(mb));
  if (std::abs(ma - mb) > tol_rel * scale) {
    throw ValidationError(std::string(what) + ": total masses differ (" + std::to_string(ma) +
                          " vs " + std::to_string(mb) + "); normalize the inputs first");
  }
}

}  // namespace detail

// Geodesic angle between equal-mass densities: arccos of the Bhattacharyya
// integral over the common mass. The integrand is computed as sqrt(rho0*rho1),
// which is robust when rho0 sits near its floor.
inline Real fisher_rao_distance(const Density& rho0, const Density& rho1,
                                Real tol_mass = 1e-6) {
  require_same_grid(rho0.grid(), rho1.grid(), "fisher_rao_distance");
  detail::require_equal_mass(rho0, rho1, tol_mass, "fisher_rao_distance");
  ScalarField prod(rho0.grid());
  for (std::size_t i = 0; i < prod.size(); ++i) {
    prod.values[i] = std::sqrt(rho0.field().values[i] * rho1.field().values[i]);
  }
  const Real mass = Real(0.5) * (rho0.total_mass() + rho1.total_mass());
  Real c = quadrature(prod) / mass;
  c = std::clamp(c, Real(-1), Real(1));
  return std::acos(c);
}

namespace detail {

// Precomputed Fisher-Rao geodesic between two equal-mass densities:
//   sqrt(rho(t)) = a(t) sqrt(rho0) + b(t) sqrt(rho1),
//   a(t) = sin((1-t)theta)/sin(theta), b(t) = sin(t theta)/sin(theta),
// with the small-angle limit a = 1-t, b = t.
struct FisherRaoPath {
  ScalarField sqrt0, sqrt1;
  Real theta = 0;
  bool small_angle = false;

  FisherRaoPath(const Density& rho0, const Density& rho1, Real tol_mass = 1e-6,
                Real tol_theta = 1e-8) {
    theta = fisher_rao_distance(rho0, rho1, tol_mass);
    const Real pi = std::acos(Real(-1));
    if (theta >= pi - tol_theta)
      throw ValidationError("fisher_rao_geodesic: densities are antipodal");
    small_angle = theta < tol_theta;
    sqrt0 = map_field(rho0.field(), [](Real v) { return std::sqrt(v); });
    sqrt1 = map_field(rho1.field(), [](Real v) { return std::sqrt(v); });
  }

  void weights(Real t, Real& a, Real& b) const {
    if (small_angle) {
      a = 1 - t;
      b = t;
    } else {
      const Real s = std::sin(theta);
      a = std::sin((1 - t) * theta) / s;
      b = std::sin(t * theta) / s;
    }
  }

  void rate_weights(Real t, Real& da, Real& db) const {
    if (small_angle) {
      da = -1;
      db = 1;
    } else {
      const Real s = std::sin(theta);
      da = -theta * std::cos((1 - t) * theta) / s;
      db = theta * std::cos(t * theta) / s;
    }
  }

  ScalarField value(Real t) const {
    Real a, b;
    weights(t, a, b);
    ScalarField out(sqrt0.grid);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Real s = a * sqrt0.values[i] + b * sqrt1.values[i];
      out.values[i] = s * s;
    }
    return out;
  }

  ScalarField velocity(Real t) const {
    Real a, b, da, db;
    weights(t, a, b);
    rate_weights(t, da, db);
    ScalarField out(sqrt0.grid);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Real s = a * sqrt0.values[i] + b * sqrt1.values[i];
      const Real ds = da * sqrt0.values[i] + db * sqrt1.values[i];
      out.values[i] = 2 * s * ds;
    }
    return out;
  }

  // d/dt log rho(t) = 2 s'(t)/s(t); the ratio feeding the transport solve.
  ScalarField log_rate(Real t) const {
    Real a, b, da, db;
    weights(t, a, b);
    rate_weights(t, da, db);
    ScalarField out(sqrt0.grid);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Real s = a * sqrt0.values[i] + b * sqrt1.values[i];
      const Real ds = da * sqrt0.values[i] + db * sqrt1.values[i];
      out.values[i] = 2 * ds / s;
    }
    return out;
  }
};

}  // namespace detail

inline Density fisher_rao_geodesic(const Density& rho0, const Density& rho1, Real t,
                                   Real tol_mass = 1e-6) {
  detail::FisherRaoPath path(rho0, rho1, tol_mass);
  return Density(path.value(t), Real(0));
}

// Analytic t-derivative of the geodesic (no finite differencing).
inline ScalarField fisher_rao_geodesic_velocity(const Density& rho0, const Density& rho1,
                                                Real t, Real tol_mass = 1e-6) {
  detail::FisherRaoPath path(rho0, rho1, tol_mass);
  return path.velocity(t);
}

// Squared Hellinger distance, the data term for nonnegative intensities
// (zeros allowed; no positivity floor required).
inline Real hellinger_squared(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "hellinger_squared");
  ScalarField diff(a.grid);
  for (std::size_t i = 0; i < diff.size(); ++i) {
    const Real va = a.values[i], vb = b.values[i];
    if (va < 0 || vb < 0) throw ValidationError("hellinger_squared: negative values");
    const Real d = std::sqrt(va) - std::sqrt(vb);
    diff.values[i] = d * d;
  }
  return quadrature(diff);
}

// Generalized pushforward |D phi^-1|^alpha * rho(phi^-1(x)); alpha = 1 is the
// mass-conserving density action. phi_inv must carry its Jacobian determinant.
inline Density pushforward_alpha(const Density& rho, const DiffeoMap& phi_inv, Real alpha) {
  require_same_grid(rho.grid(), phi_inv.grid(), "pushforward_alpha");
  if (!(alpha > 0)) throw ValidationError("pushforward_alpha requires alpha > 0");
  if (!phi_inv.jac_det)
    throw ValidationError("pushforward_alpha: map is missing its Jacobian determinant");
  const ScalarField& jd = *phi_inv.jac_det;
  for (Real v : jd.values) {
    if (!(v > 0)) throw ValidationError("pushforward_alpha: non-positive Jacobian determinant");
  }
  ScalarField moved = warp_scalar(rho.field(), phi_inv);
  ScalarField out(rho.grid());
  parallel_for(out.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Real factor = alpha == 1 ? jd.values[i] : std::pow(jd.values[i], alpha);
      out.values[i] = factor * moved.values[i];
    }
  });
  return Density(std::move(out), Real(0));
}

}  // namespace densreg
