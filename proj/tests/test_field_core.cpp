#include <gtest/gtest.h>

#include "densreg/densreg.hpp"
#include "oracles.hpp"

using namespace densreg;

namespace {

constexpr Real kPi = 3.14159265358979323846;

ScalarField eval_nodes(const Grid& g, Real (*fn)(Real, Real)) {
  ScalarField f(g);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    f.values[idx] = fn(p[0], p[1]);
  }
  return f;
}

}  // namespace

TEST(Grid, VolumesAndWeights) {
  const Grid per(2, {8, 8, 1}, {0.125, 0.125, 1}, {0, 0, 0}, Bc::periodic);
  EXPECT_NEAR(per.total_volume(), 1.0, 1e-15);
  const Grid cla(2, {9, 9, 1}, {0.125, 0.125, 1}, {0, 0, 0}, Bc::clamped);
  EXPECT_NEAR(cla.total_volume(), 1.0, 1e-15);

  // Trapezoid weights integrate constants exactly on the clamped hull.
  ScalarField ones(cla, 1);
  EXPECT_NEAR(quadrature(ones), 1.0, 1e-14);

  EXPECT_THROW(Grid(2, {1, 8, 1}, {1, 1, 1}, {0, 0, 0}, Bc::periodic), ValidationError);
  EXPECT_THROW(Grid(2, {8, 8, 1}, {0, 1, 1}, {0, 0, 0}, Bc::periodic), ValidationError);
}

TEST(Interp, ReproducesConstants) {
  const Grid g = make_torus_grid(2, 16);
  ScalarField f(g, 3.25);
  const std::array<Real, 3> pts[] = {{0.1, -0.77, 0}, {2.9, 3.0, 0}, {-3.1, 1.4, 0}};
  for (const auto& p : pts) EXPECT_EQ(interp_scalar_at(f, p), 3.25);
}

TEST(Interp, ReproducesAffineOnClampedGrid) {
  const Grid g(2, {17, 13, 1}, {0.25, 0.5, 1}, {-1, 2, 0}, Bc::clamped);
  const Real a0 = 0.7, a1 = -1.3, b = 0.4;
  ScalarField f(g);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    f.values[idx] = a0 * p[0] + a1 * p[1] + b;
  }
  const std::array<Real, 3> pts[] = {{-0.3, 3.21, 0}, {1.17, 4.9, 0}, {0.0, 2.5, 0}};
  for (const auto& p : pts) {
    EXPECT_NEAR(interp_scalar_at(f, p), a0 * p[0] + a1 * p[1] + b, 1e-13);
  }
}

TEST(Interp, PeriodicWrap) {
  const Grid g = make_torus_grid(1, 64);
  ScalarField f(g);
  for (int i = 0; i < 64; ++i) f.values[i] = std::sin(g.node_coord(0, i));
  for (Real x : {0.123, -2.5, 1.917}) {
    EXPECT_NEAR(interp_scalar_at(f, {x, 0, 0}), interp_scalar_at(f, {x + 2 * kPi, 0, 0}),
                1e-12);
  }
}

TEST(Interp, ErrorsAndEmptyInput) {
  const Grid g = make_torus_grid(2, 8);
  ScalarField f(g, 1);
  EXPECT_THROW(interp_scalar_at(f, {std::nan(""), 0, 0}), ValidationError);
  std::vector<std::array<Real, 3>> empty;
  EXPECT_TRUE(interp_scalar(f, empty).empty());
}

TEST(Gradient, ConstantFieldIsZero) {
  const Grid g = make_torus_grid(2, 16);
  const VectorField grad = gradient(ScalarField(g, 2.5));
  EXPECT_EQ(max_abs(grad), 0.0);
}

TEST(Gradient, MatchesAnalyticDerivativeSecondOrder) {
  const Grid g = make_torus_grid(1, 64);
  ScalarField f(g);
  for (int i = 0; i < 64; ++i) f.values[i] = std::sin(g.node_coord(0, i));
  const VectorField grad = gradient(f);
  Real err64 = 0;
  for (int i = 0; i < 64; ++i) {
    err64 = std::max(err64, std::abs(grad.comp[0][i] - std::cos(g.node_coord(0, i))));
  }
  EXPECT_LE(err64, 4e-3);

  // Halving h shrinks the error by ~4 (second order).
  const Grid g2 = make_torus_grid(1, 128);
  ScalarField f2(g2);
  for (int i = 0; i < 128; ++i) f2.values[i] = std::sin(g2.node_coord(0, i));
  const VectorField grad2 = gradient(f2);
  Real err128 = 0;
  for (int i = 0; i < 128; ++i) {
    err128 = std::max(err128, std::abs(grad2.comp[0][i] - std::cos(g2.node_coord(0, i))));
  }
  EXPECT_LE(err128, err64 / 3.2);
}

TEST(Gradient, OneSidedStencilExactOnAffine) {
  const Grid g(2, {9, 7, 1}, {0.5, 0.25, 1}, {0, 0, 0}, Bc::clamped);
  ScalarField f(g);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    f.values[idx] = 2 * p[0] - 3 * p[1] + 1;
  }
  const VectorField grad = gradient(f);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(grad.comp[0][i], 2.0, 1e-12);
    EXPECT_NEAR(grad.comp[1][i], -3.0, 1e-12);
  }
}

TEST(Divergence, ConstantAndAnalytic) {
  const Grid g = make_torus_grid(2, 64);
  VectorField cv(g);
  for (int a = 0; a < 2; ++a) std::fill(cv.comp[a].begin(), cv.comp[a].end(), 1.7);
  EXPECT_EQ(max_abs(divergence(cv)), 0.0);

  VectorField v(g);
  for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    v.comp[0][idx] = std::sin(p[0]);
  }
  const ScalarField div = divergence(v);
  Real err = 0;
  for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    err = std::max(err, std::abs(div.values[idx] - std::cos(p[0])));
  }
  EXPECT_LE(err, 4e-3);
}

TEST(Divergence, DivGradMatchesAnalyticLaplacian) {
  const Grid g = make_torus_grid(2, 64);
  const ScalarField f = eval_nodes(g, [](Real x, Real y) { return std::sin(x) * std::sin(y); });
  const ScalarField lap = divergence(gradient(f));
  Real rel = 0;
  for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    const Real exact = -2 * std::sin(p[0]) * std::sin(p[1]);
    if (std::abs(exact) > 0.5) rel = std::max(rel, std::abs(lap.values[idx] - exact) / std::abs(exact));
  }
  EXPECT_LE(rel, 1e-2);
}

TEST(JacobianDet, IdentityShearAndScale) {
  const Grid g = make_torus_grid(2, 32);
  const auto id_jac = jacobian_det(identity_map(g));
  EXPECT_FALSE(id_jac.has_fold);
  for (Real v : id_jac.det.values) EXPECT_EQ(v, 1.0);

  // Shear (x + gamma y, y) has unit determinant.
  const Grid box(2, {17, 17, 1}, {0.1, 0.1, 1}, {0, 0, 0}, Bc::clamped);
  const DiffeoMap shear = make_diffeo("shear", box, {.gamma = 0.3});
  const auto shear_jac = jacobian_det(shear);
  for (Real v : shear_jac.det.values) EXPECT_NEAR(v, 1.0, 1e-12);

  // Linear map x -> s x is exact under one-sided stencils at every node.
  const Real s = 1.25;
  DiffeoMap scale(VectorField(box), MapDirection::forward);
  for (std::size_t idx = 0; idx < box.node_count(); ++idx) {
    const auto p = box.node_position(box.coords(idx));
    for (int a = 0; a < 2; ++a) scale.displacement.comp[a][idx] = (s - 1) * p[a];
  }
  const auto scale_jac = jacobian_det(scale);
  for (Real v : scale_jac.det.values) EXPECT_NEAR(v, s * s, 1e-12);
}

TEST(JacobianDet, TranslationInvariantOnTorus) {
  const Grid g = make_torus_grid(2, 32);
  const DiffeoMap warp = make_diffeo("radial-bump", g, {.amplitude = 0.08, .sigma = 0.8});
  DiffeoMap shifted = warp;
  for (int a = 0; a < 2; ++a) {
    for (Real& v : shifted.displacement.comp[a]) v += 0.37;
  }
  const auto j0 = jacobian_det(warp);
  const auto j1 = jacobian_det(shifted);
  for (std::size_t i = 0; i < j0.det.size(); ++i) {
    EXPECT_NEAR(j0.det.values[i], j1.det.values[i], 1e-13);
  }
}

TEST(JacobianDet, MatchesAnalyticDeterminantOfSyntheticMap) {
  const Grid g = make_torus_grid(2, 64);
  const DiffeoMap warp = make_diffeo("radial-bump", g, {.amplitude = 0.1, .sigma = 0.8});
  const auto fd = jacobian_det(warp);
  Real rel = 0;
  for (std::size_t i = 0; i < fd.det.size(); ++i) {
    rel = std::max(rel, std::abs(fd.det.values[i] - warp.jac_det->values[i]) /
                            warp.jac_det->values[i]);
  }
  EXPECT_LE(rel, 1e-2);
  EXPECT_FALSE(fd.has_fold);
}

TEST(Compose, IdentityIsExact) {
  const Grid g = make_torus_grid(2, 32);
  const DiffeoMap warp = make_diffeo("radial-bump", g, {.amplitude = 0.1, .sigma = 1.0});
  const DiffeoMap composed = compose(warp, identity_map(g));
  for (int a = 0; a < 2; ++a) {
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      EXPECT_EQ(composed.displacement.comp[a][i], warp.displacement.comp[a][i]);
    }
  }
}

TEST(Compose, TranslationsAdd) {
  const Grid g = make_torus_grid(2, 16);
  const DiffeoMap ta = make_diffeo("translation", g, {.shift = {0.3, -0.2, 0}});
  const DiffeoMap tb = make_diffeo("translation", g, {.shift = {1.1, 0.4, 0}});
  const DiffeoMap tab = compose(ta, tb);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    EXPECT_NEAR(tab.displacement.comp[0][i], 1.4, 1e-15);
    EXPECT_NEAR(tab.displacement.comp[1][i], 0.2, 1e-15);
  }
  EXPECT_THROW(compose(ta, make_diffeo("translation", make_torus_grid(2, 8), {})),
               ValidationError);
}

TEST(Compose, InversePairFromFlowIntegration) {
  // Integrate the flow of a stationary smooth field forward and backward;
  // the two maps are inverse to each other up to interpolation error.
  const Grid g = make_torus_grid(2, 64);
  VectorField v(g);
  for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    v.comp[0][idx] = 0.25 * std::sin(p[0]) * std::cos(p[1]);
    v.comp[1][idx] = -0.25 * std::cos(p[0]) * std::sin(p[1]);
  }
  const int steps = 64;
  const Real dt = 1.0 / steps;
  DiffeoMap fwd = identity_map(g), bwd = identity_map(g);
  DiffeoMap step_f(VectorField(g), MapDirection::forward);
  DiffeoMap step_b(VectorField(g), MapDirection::forward);
  for (int a = 0; a < 2; ++a) {
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      step_f.displacement.comp[a][i] = dt * v.comp[a][i];
      step_b.displacement.comp[a][i] = -dt * v.comp[a][i];
    }
  }
  for (int k = 0; k < steps; ++k) {
    fwd = compose(step_f, fwd);
    bwd = compose(bwd, step_b);
  }
  const DiffeoMap round = compose(fwd, bwd);
  const Real cell = g.spacing[0];
  EXPECT_LE(max_abs(round.displacement), 2 * cell);
}

TEST(PushforwardAlpha, IdentityAndConstantCompression) {
  const Grid g(2, {33, 33, 1}, {1.0 / 32, 1.0 / 32, 1}, {0, 0, 0}, Bc::clamped);
  const Density rho = make_density("gauss-bump", g,
                                   {.center = {0.5, 0.5, 0}, .sigma = 0.2, .amplitude = 1,
                                    .baseline = 0.5});
  const Density moved = pushforward_alpha(rho, identity_map(g), 1.0);
  for (std::size_t i = 0; i < rho.field().size(); ++i) {
    EXPECT_EQ(moved.field().values[i], rho.field().values[i]);
  }

  // Linear compression x -> s x: |D phi^{-1}| = s^2 everywhere, so the
  // alpha-pushforward of the unit density is the constant (s^2)^alpha.
  const Real s = 0.8;
  DiffeoMap phi_inv(VectorField(g), MapDirection::inverse);
  ScalarField jd(g);
  for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    for (int a = 0; a < 2; ++a) phi_inv.displacement.comp[a][idx] = (s - 1) * p[a];
    jd.values[idx] = s * s;
  }
  phi_inv.jac_det = jd;
  const Density ones(ScalarField(g, 1), 0);
  for (Real alpha : {0.5, 1.0, 2.0}) {
    const Density out = pushforward_alpha(ones, phi_inv, alpha);
    for (Real vv : out.field().values) {
      EXPECT_NEAR(vv, std::pow(s * s, alpha), 1e-12);
    }
  }

  DiffeoMap no_jd = phi_inv;
  no_jd.jac_det.reset();
  EXPECT_THROW(pushforward_alpha(ones, no_jd, 1.0), ValidationError);
}

TEST(PushforwardAlpha, ConservesMassOnSmoothWarp) {
  const Grid g = make_torus_grid(2, 128);
  const Density rho = make_density("gauss-bump", g,
                                   {.center = {0.4, -0.3, 0}, .sigma = 0.8, .amplitude = 2,
                                    .baseline = 1});
  const DiffeoMap warp =
      make_diffeo("radial-bump", g, {.amplitude = 0.12, .sigma = 1.1}, MapDirection::inverse);
  const Density moved = pushforward_alpha(rho, warp, 1.0);
  EXPECT_NEAR(moved.total_mass() / rho.total_mass(), 1.0, 5e-3);
}

TEST(Laplacian, CompactStencilOnAffineIsZero) {
  const Grid g(2, {9, 9, 1}, {0.25, 0.25, 1}, {0, 0, 0}, Bc::clamped);
  ScalarField f(g);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const auto p = g.node_position(g.coords(idx));
    f.values[idx] = 3 * p[0] - 2 * p[1];
  }
  // Interior rows only: the Neumann ghost makes boundary rows see the
  // reflected (non-affine) extension.
  const ScalarField lap = laplacian(f);
  for (int j = 1; j < 8; ++j)
    for (int i = 1; i < 8; ++i) EXPECT_NEAR(lap.values[g.index(i, j)], 0.0, 1e-10);
}

TEST(Invert, RecoversInverseOfSyntheticWarp) {
  const Grid g = make_torus_grid(2, 64);
  const DiffeoMap warp = make_diffeo("radial-bump", g, {.amplitude = 0.15, .sigma = 1.0});
  const DiffeoMap inv = invert(warp);
  const DiffeoMap round = compose(warp, inv);
  EXPECT_LE(max_abs(round.displacement), 0.05 * g.spacing[0]);
}
