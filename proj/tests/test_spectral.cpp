#include <gtest/gtest.h>

#include "densreg/densreg.hpp"
#include "oracles.hpp"

using namespace densreg;

namespace {

constexpr Real kPi = 3.14159265358979323846;

ScalarField mean_zero_random(const Grid& g, std::uint64_t seed) {
  ScalarField f = oracles::random_smooth_scalar(g, seed);
  const Real m = quad_mean(f);
  for (Real& v : f.values) v -= m;
  return f;
}

}  // namespace

TEST(Poisson, ZeroSourceGivesZero) {
  const Grid g = make_torus_grid(2, 32);
  const PoissonPlan plan(g);
  const ScalarField f = plan.solve(ScalarField(g, 0));
  EXPECT_EQ(max_abs(f), 0.0);
}

TEST(Poisson, SineEigenfunction) {
  const Grid g = make_torus_grid(1, 128);
  const PoissonPlan plan(g);
  ScalarField s(g);
  for (int i = 0; i < 128; ++i) s.values[i] = -std::sin(g.node_coord(0, i));
  const ScalarField f = plan.solve(s);
  Real err = 0;
  for (int i = 0; i < 128; ++i) {
    err = std::max(err, std::abs(f.values[i] - std::sin(g.node_coord(0, i))));
  }
  EXPECT_LE(err, 1e-3);
}

TEST(Poisson, StencilRoundTripIsExact) {
  const Grid grids[] = {
      make_torus_grid(2, 64),
      Grid(2, {48, 40, 1}, {0.11, 0.07, 1}, {0, 0, 0}, Bc::clamped),
      Grid(3, {24, 20, 18}, {0.2, 0.25, 0.3}, {-1, 0, 2}, Bc::periodic),
      Grid(3, {12, 14, 10}, {0.2, 0.25, 0.3}, {0, 0, 0}, Bc::clamped),
  };
  std::uint64_t seed = 7;
  for (const Grid& g : grids) {
    const PoissonPlan plan(g);
    const ScalarField s = mean_zero_random(g, seed++);
    const ScalarField f = plan.solve(s);
    const ScalarField lap = laplacian(f);
    Real err = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      err = std::max(err, std::abs(lap.values[i] - s.values[i]));
    }
    EXPECT_LE(err, 1e-10) << "grid " << g.describe();
    EXPECT_LE(std::abs(quad_mean(f)), 1e-12) << "grid " << g.describe();
  }
}

TEST(Poisson, RoundTripSubtractsMean) {
  const Grid g(2, {33, 29, 1}, {0.1, 0.1, 1}, {0, 0, 0}, Bc::clamped);
  const PoissonPlan plan(g);
  ScalarField s = oracles::random_smooth_scalar(g, 21);
  for (Real& v : s.values) v += 0.7;  // deliberately non-zero mean
  const Real mean = quad_mean(s);
  const ScalarField lap = laplacian(plan.solve(s));
  Real err = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    err = std::max(err, std::abs(lap.values[i] - (s.values[i] - mean)));
  }
  EXPECT_LE(err, 1e-10);
}

TEST(Poisson, Linearity) {
  const Grid g = make_torus_grid(2, 32);
  const PoissonPlan plan(g);
  const ScalarField s1 = mean_zero_random(g, 3), s2 = mean_zero_random(g, 4);
  const Real a = 1.3, b = -0.7;
  ScalarField combo(g);
  for (std::size_t i = 0; i < combo.size(); ++i) {
    combo.values[i] = a * s1.values[i] + b * s2.values[i];
  }
  const ScalarField lhs = plan.solve(combo);
  const ScalarField f1 = plan.solve(s1), f2 = plan.solve(s2);
  Real err = 0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    err = std::max(err, std::abs(lhs.values[i] - (a * f1.values[i] + b * f2.values[i])));
  }
  EXPECT_LE(err, 1e-12 * std::max<Real>(1, max_abs(lhs)));
}

TEST(Poisson, SelfAdjointOnMeanZeroFields) {
  for (Bc bc : {Bc::periodic, Bc::clamped}) {
    const Grid g(2, {32, 36, 1}, {0.15, 0.12, 1}, {0, 0, 0}, bc);
    const PoissonPlan plan(g);
    const ScalarField s1 = mean_zero_random(g, 11), s2 = mean_zero_random(g, 12);
    const Real lhs = inner_l2(plan.solve(s1), s2);
    const Real rhs = inner_l2(s1, plan.solve(s2));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max<Real>(1, std::abs(lhs)));
  }
}

TEST(Poisson, VectorSolveMatchesComponentwiseAndKillsConstants) {
  const Grid g = make_torus_grid(2, 32);
  const PoissonPlan plan(g);

  VectorField zero(g);
  EXPECT_EQ(max_abs(plan.solve(zero)), 0.0);

  VectorField constant(g);
  for (int a = 0; a < 2; ++a) {
    std::fill(constant.comp[a].begin(), constant.comp[a].end(), 2.0);
  }
  EXPECT_LE(max_abs(plan.solve(constant)), 1e-13);

  // Round trip through the stencil image of a smooth vector field recovers
  // the mean-zero part componentwise.
  VectorField w(g);
  for (int a = 0; a < 2; ++a) w.comp[a] = mean_zero_random(g, 40 + a).values;
  VectorField img(g);
  for (int a = 0; a < 2; ++a) {
    ScalarField comp(g);
    comp.values = w.comp[a];
    img.comp[a] = laplacian(comp).values;
  }
  const VectorField back = plan.solve(img);
  Real err = 0;
  for (int a = 0; a < 2; ++a) {
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      err = std::max(err, std::abs(back.comp[a][i] - w.comp[a][i]));
    }
  }
  EXPECT_LE(err, 1e-10);
}

TEST(Poisson, GridMismatchRejected) {
  const PoissonPlan plan(make_torus_grid(2, 32));
  EXPECT_THROW(plan.solve(ScalarField(make_torus_grid(2, 16), 0)), ValidationError);
}
