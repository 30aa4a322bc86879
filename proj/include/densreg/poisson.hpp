#pragma once

#include <fftw3.h>

#include <complex>
#include <vector>

#include "densreg/field.hpp"

namespace densreg {

// Fast inverse of the compact-stencil Laplacian (see laplacian() in
// calculus.hpp). The solve returns f with
//
//   laplacian(f) = s - mean(s)   and   mean(f) = 0,
//
// where mean is the quadrature mean, so the solve is unconditionally
// well-posed. Periodic grids are diagonalized by the DFT with the discrete
// symbol -sum_a (2/h_a^2)(1 - cos(2 pi m_a / n_a)); clamped grids use the
// even-extension cosine basis (DCT-I), which realizes the homogeneous Neumann
// condition for the same stencil. Using the stencil symbol instead of the
// continuous -|k|^2 makes the stencil round trip exact to rounding.
//
// Plans must be created from one thread (FFTW planning is not reentrant);
// solves use the new-array interface with per-call buffers and are safe to
// run concurrently on a shared plan.
class PoissonPlan {
 public:
  explicit PoissonPlan(const Grid& g) : grid_(g) {
    const int d = g.dim;
    int rev[3];  // FFTW is row-major with the last dimension contiguous
    for (int a = 0; a < d; ++a) rev[a] = g.dims[d - 1 - a];

    if (g.bc == Bc::periodic) {
      const std::size_t n0h = static_cast<std::size_t>(g.dims[0]) / 2 + 1;
      coef_count_ = n0h;
      for (int a = 1; a < d; ++a) coef_count_ *= g.dims[a];
      norm_ = Real(1) / static_cast<Real>(g.node_count());
      symbol_.resize(coef_count_);
      std::size_t idx = 0;
      for (int k = 0; k < (d >= 3 ? g.dims[2] : 1); ++k) {
        for (int j = 0; j < (d >= 2 ? g.dims[1] : 1); ++j) {
          for (std::size_t i = 0; i < n0h; ++i, ++idx) {
            symbol_[idx] = periodic_symbol(0, static_cast<int>(i)) + periodic_symbol(1, j) +
                           periodic_symbol(2, k);
          }
        }
      }
      std::vector<Real> rtmp(g.node_count());
      std::vector<std::complex<Real>> ctmp(coef_count_);
      fwd_ = fftw_plan_dft_r2c(d, rev, rtmp.data(),
                               reinterpret_cast<fftw_complex*>(ctmp.data()),
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
      inv_ = fftw_plan_dft_c2r(d, rev, reinterpret_cast<fftw_complex*>(ctmp.data()),
                               rtmp.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    } else {
      coef_count_ = g.node_count();
      Real logical = 1;
      for (int a = 0; a < d; ++a) logical *= 2 * (g.dims[a] - 1);
      norm_ = Real(1) / logical;
      symbol_.resize(coef_count_);
      std::size_t idx = 0;
      for (int k = 0; k < (d >= 3 ? g.dims[2] : 1); ++k) {
        for (int j = 0; j < (d >= 2 ? g.dims[1] : 1); ++j) {
          for (int i = 0; i < g.dims[0]; ++i, ++idx) {
            symbol_[idx] = neumann_symbol(0, i) + neumann_symbol(1, j) + neumann_symbol(2, k);
          }
        }
      }
      fftw_r2r_kind kinds[3] = {FFTW_REDFT00, FFTW_REDFT00, FFTW_REDFT00};
      std::vector<Real> in(g.node_count()), out(g.node_count());
      fwd_ = fftw_plan_r2r(d, rev, in.data(), out.data(), kinds,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
      inv_ = nullptr;  // DCT-I is its own inverse up to the logical-size factor
    }
  }

  PoissonPlan(const PoissonPlan&) = delete;
  PoissonPlan& operator=(const PoissonPlan&) = delete;
  PoissonPlan(PoissonPlan&& o) noexcept { swap(o); }
  PoissonPlan& operator=(PoissonPlan&& o) noexcept {
    swap(o);
    return *this;
  }

  ~PoissonPlan() {
    if (fwd_) fftw_destroy_plan(fwd_);
    if (inv_) fftw_destroy_plan(inv_);
  }

  const Grid& grid() const { return grid_; }

  ScalarField solve(const ScalarField& s) const {
    require_same_grid(grid_, s.grid, "inv_laplacian");
    ScalarField out(grid_);
    if (grid_.bc == Bc::periodic) {
      std::vector<Real> rbuf(s.values);
      std::vector<std::complex<Real>> cbuf(coef_count_);
      fftw_execute_dft_r2c(fwd_, rbuf.data(), reinterpret_cast<fftw_complex*>(cbuf.data()));
      cbuf[0] = 0;
      for (std::size_t i = 1; i < coef_count_; ++i) {
        cbuf[i] *= norm_ / symbol_[i];
      }
      fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(cbuf.data()), out.values.data());
    } else {
      std::vector<Real> in(s.values), coef(coef_count_);
      fftw_execute_r2r(fwd_, in.data(), coef.data());
      coef[0] = 0;
      for (std::size_t i = 1; i < coef_count_; ++i) {
        coef[i] *= norm_ / symbol_[i];
      }
      fftw_execute_r2r(fwd_, coef.data(), out.values.data());
    }
    return out;
  }

  VectorField solve(const VectorField& u) const {
    require_same_grid(grid_, u.grid, "inv_laplacian_vec");
    VectorField out(grid_);
    for (int a = 0; a < grid_.dim; ++a) {
      ScalarField comp(grid_);
      comp.values = u.comp[a];
      out.comp[a] = solve(comp).values;
    }
    return out;
  }

 private:
  Real periodic_symbol(int axis, int m) const {
    if (axis >= grid_.dim) return 0;
    const Real h = grid_.spacing[axis];
    const Real ang = 2 * std::acos(Real(-1)) * m / grid_.dims[axis];
    return -(2 / (h * h)) * (1 - std::cos(ang));
  }

  Real neumann_symbol(int axis, int m) const {
    if (axis >= grid_.dim) return 0;
    const Real h = grid_.spacing[axis];
    const Real ang = std::acos(Real(-1)) * m / (grid_.dims[axis] - 1);
    return -(2 / (h * h)) * (1 - std::cos(ang));
  }

  void swap(PoissonPlan& o) noexcept {
    std::swap(grid_, o.grid_);
    std::swap(symbol_, o.symbol_);
    std::swap(fwd_, o.fwd_);
    std::swap(inv_, o.inv_);
    std::swap(coef_count_, o.coef_count_);
    std::swap(norm_, o.norm_);
  }

  Grid grid_;
  std::vector<Real> symbol_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
  std::size_t coef_count_ = 0;
  Real norm_ = 1;
};

inline ScalarField inv_laplacian(const PoissonPlan& plan, const ScalarField& s) {
  return plan.solve(s);
}

inline VectorField inv_laplacian_vec(const PoissonPlan& plan, const VectorField& u) {
  return plan.solve(u);
}

}  // namespace densreg
