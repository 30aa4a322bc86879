#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "densreg/density.hpp"

namespace densreg {

// One breathing phase: an intensity volume with the region-of-interest mask
// it was measured on. Grids may differ across phases of the same subject.
struct PhaseSample {
  ScalarField intensity;
  Mask region;
};

struct SubjectSeries {
  std::string subject_id;
  std::vector<PhaseSample> phases;
};

struct RegressionFit {
  Real slope = 0;
  Real intercept = 0;
  Real r_squared = 1;
};

struct SubjectSlope {
  std::string subject_id;
  Real slope = 0;
  Real intercept = 0;
  Real r_squared = 1;
};

struct AlphaGrid {
  Real alpha_min = 0.3;
  Real alpha_max = 1.2;
  Real step = 0.005;
};

struct AlphaFitReport {
  Real alpha_star = 1;
  std::vector<SubjectSlope> subject_fits;  // fits at alpha_star
  Real slope_mean_at_alpha_one = 0, slope_sd_at_alpha_one = 0;
  Real slope_mean_at_alpha_star = 0, slope_sd_at_alpha_star = 0;
  std::vector<std::string> warnings;       // subjects excluded as degenerate
};

// Per phase t: v_t = log(masked volume), d_t = log(masked alpha-mass / volume).
// A mass-conserving series has d = log(M) - v, i.e. slope -1 in log space.
inline std::pair<std::vector<Real>, std::vector<Real>> log_mass_volume(
    const SubjectSeries& series, Real alpha) {
  if (!(alpha > 0)) throw ValidationError("log_mass_volume requires alpha > 0");
  if (series.phases.size() < 2)
    throw ValidationError("subject series needs at least 2 phases");
  std::vector<Real> v, d;
  v.reserve(series.phases.size());
  d.reserve(series.phases.size());
  for (const auto& phase : series.phases) {
    ScalarField ones(phase.intensity.grid, 1);
    const Real volume = quadrature_masked(ones, phase.region);
    if (!(volume > 0))
      throw ValidationError("log_mass_volume: empty mask or zero masked volume");
    for (std::size_t i = 0; i < phase.intensity.size(); ++i) {
      if (phase.region.values[i] && phase.intensity.values[i] < 0)
        throw ValidationError("log_mass_volume: negative intensity inside mask");
    }
    const Real mass = p_mass(phase.intensity, alpha, &phase.region);
    v.push_back(std::log(volume));
    d.push_back(std::log(mass / volume));
  }
  return {std::move(v), std::move(d)};
}

// Ordinary least squares d ~ a v + b.
inline RegressionFit regress_slope(std::span<const Real> v, std::span<const Real> d) {
  if (v.size() != d.size() || v.size() < 2)
    throw ValidationError("regress_slope needs >= 2 paired samples");
  const Real n = static_cast<Real>(v.size());
  Real mv = 0, md = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    mv += v[i];
    md += d[i];
  }
  mv /= n;
  md /= n;
  Real sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Real dx = v[i] - mv, dy = d[i] - md;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0) throw ValidationError("regress_slope: all abscissae equal (degenerate)");
  RegressionFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = md - fit.slope * mv;
  if (syy == 0) {
    fit.r_squared = 1;  // constant data fit exactly by the horizontal line
  } else {
    Real ssres = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Real r = d[i] - (fit.slope * v[i] + fit.intercept);
      ssres += r * r;
    }
    fit.r_squared = 1 - ssres / syy;
  }
  return fit;
}

namespace detail {

inline void slope_stats(const std::vector<Real>& slopes, Real& mean, Real& sd) {
  mean = 0;
  for (Real s : slopes) mean += s;
  mean /= static_cast<Real>(slopes.size());
  Real var = 0;
  for (Real s : slopes) var += (s - mean) * (s - mean);
  sd = std::sqrt(var / static_cast<Real>(slopes.size()));  // population SD
}

}  // namespace detail

// Brute-force search for the exponent that restores conservation of mass:
// alpha* = argmin over the grid of sum_j (a_j(alpha) + 1)^2, ties broken
// toward the smaller alpha. Degenerate subjects are excluded with a warning.
inline AlphaFitReport fit_alpha(std::span<const SubjectSeries> subjects,
                                const AlphaGrid& grid = {}) {
  if (subjects.empty()) throw ValidationError("fit_alpha: no subjects");
  if (!(grid.alpha_min > 0) || grid.alpha_min > grid.alpha_max || !(grid.step > 0))
    throw ValidationError("fit_alpha: invalid alpha grid");

  AlphaFitReport report;
  std::vector<const SubjectSeries*> usable;
  for (const auto& s : subjects) {
    try {
      auto [v, d] = log_mass_volume(s, Real(1));
      (void)regress_slope(v, d);
      usable.push_back(&s);
    } catch (const ValidationError& e) {
      report.warnings.push_back("subject " + s.subject_id + " excluded: " + e.what());
    }
  }
  if (usable.empty()) throw ValidationError("fit_alpha: all subjects degenerate");

  const auto slopes_at = [&](Real alpha) {
    std::vector<Real> slopes;
    slopes.reserve(usable.size());
    for (const auto* s : usable) {
      auto [v, d] = log_mass_volume(*s, alpha);
      slopes.push_back(regress_slope(v, d).slope);
    }
    return slopes;
  };

  const int count = static_cast<int>(std::floor((grid.alpha_max - grid.alpha_min) / grid.step +
                                                Real(0.5))) + 1;
  Real best_alpha = grid.alpha_min;
  Real best_obj = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < count; ++i) {
    const Real alpha = grid.alpha_min + i * grid.step;
    if (alpha > grid.alpha_max + grid.step * Real(0.5)) break;
    Real obj = 0;
    for (Real a : slopes_at(alpha)) obj += (a + 1) * (a + 1);
    if (obj < best_obj) {
      best_obj = obj;
      best_alpha = alpha;
    }
  }
  report.alpha_star = best_alpha;

  std::vector<Real> slopes_star, slopes_one;
  for (const auto* s : usable) {
    auto [v, d] = log_mass_volume(*s, best_alpha);
    const auto fit = regress_slope(v, d);
    report.subject_fits.push_back({s->subject_id, fit.slope, fit.intercept, fit.r_squared});
    slopes_star.push_back(fit.slope);
    auto [v1, d1] = log_mass_volume(*s, Real(1));
    slopes_one.push_back(regress_slope(v1, d1).slope);
  }
  detail::slope_stats(slopes_one, report.slope_mean_at_alpha_one, report.slope_sd_at_alpha_one);
  detail::slope_stats(slopes_star, report.slope_mean_at_alpha_star,
                      report.slope_sd_at_alpha_star);
  return report;
}

}  // namespace densreg
