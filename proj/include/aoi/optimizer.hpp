#pragma once

// Freeze-rate optimization by golden-section search.

#include "aoi/aoi_metrics.hpp"
#include "aoi/fp_model.hpp"
#include "aoi/phtype.hpp"
#include "aoi/zw_model.hpp"

#include <cmath>
#include <concepts>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aoi {

struct ScalarMin {
  double argmin;
  double min_value;
  int evaluations;
};

/// Minimizes a unimodal function on [lo, hi]. Stops when the bracket width
/// drops to tol(lo, hi), a callable of the current bracket, so both absolute
/// and relative criteria can be used.
template <class F, class Tol>
  requires std::invocable<Tol&, double, double>
ScalarMin golden_section_min(F&& objective, double lo, double hi, Tol&& tol, int max_evaluations = 500) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("golden_section_min: requires finite lo < hi");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  int evals = 2;
  while (!((b - a) <= tol(a, b))) {
    if (evals >= max_evaluations)
      throw NumericalError("golden_section_min: interval did not contract within " + std::to_string(max_evaluations) +
                           " evaluations");
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
    ++evals;
  }
  const double x = 0.5 * (a + b);
  const double fx = objective(x);
  ++evals;
  // report the best point seen in the final bracket
  if (fc < fx && fc <= fd) return {c, fc, evals};
  if (fd < fx) return {d, fd, evals};
  return {x, fx, evals};
}

/// Absolute-width overload.
template <class F>
ScalarMin golden_section_min(F&& objective, double lo, double hi, double tol, int max_evaluations = 500) {
  if (!(tol > 0.0)) throw std::invalid_argument("golden_section_min: tol must be > 0");
  return golden_section_min(std::forward<F>(objective), lo, hi, [tol](double, double) { return tol; },
                            max_evaluations);
}

struct OptResult {
  double lambda_star = 0.0;
  double f_star = 0.0;  ///< 1 / lambda_star
  double aoi_at_star = 0.0;
  double zw_aoi = 0.0;
  double reduction_pct = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int evaluations = 0;
  bool boundary_hit = false;
  bool bracket_expanded = false;
};

struct OptOptions {
  double lo = 0.05;
  double hi = 100.0;
  double rel_tol = 1e-4;   ///< final bracket width relative to the argmin
  double edge = 0.05;      ///< argmin within 5% of a bracket end counts as a boundary hit
};

inline double fp_mean_aoi(double mu1, double mu2, double lambda, int k) {
  return aoi_mean(make_fp_amc(FpParams(mu1, mu2, lambda, k)));
}

inline double reduction_pct(double baseline, double value) { return 100.0 * (baseline - value) / baseline; }

inline OptResult optimize_freeze(double mu1, double mu2, int k, const OptOptions& opt = {}) {
  const FpParams check(mu1, mu2, 1.0, k);  // validates
  if (!(opt.lo > 0.0) || !(opt.lo < opt.hi)) throw std::invalid_argument("optimize_freeze: invalid bracket");
  std::map<double, double> cache;
  int evaluations = 0;
  auto objective = [&](double lambda) {
    if (auto it = cache.find(lambda); it != cache.end()) return it->second;
    ++evaluations;
    const double v = fp_mean_aoi(check.mu1, check.mu2, lambda, k);
    cache.emplace(lambda, v);
    return v;
  };
  auto tol = [&](double a, double b) { return opt.rel_tol * 0.5 * (a + b); };
  auto near_edge = [&](double x, double lo, double hi) { return x < lo * (1.0 + opt.edge) || x > hi / (1.0 + opt.edge); };

  OptResult r;
  r.bracket_lo = opt.lo;
  r.bracket_hi = opt.hi;
  auto m = golden_section_min(objective, r.bracket_lo, r.bracket_hi, tol);
  if (near_edge(m.argmin, r.bracket_lo, r.bracket_hi)) {
    if (m.argmin < r.bracket_lo * (1.0 + opt.edge))
      r.bracket_lo /= 10.0;
    else
      r.bracket_hi *= 10.0;
    r.bracket_expanded = true;
    m = golden_section_min(objective, r.bracket_lo, r.bracket_hi, tol);
  }
  r.boundary_hit = near_edge(m.argmin, r.bracket_lo, r.bracket_hi);
  r.lambda_star = m.argmin;
  r.f_star = 1.0 / m.argmin;
  r.aoi_at_star = m.min_value;
  r.zw_aoi = zw_closed_form_means(ZwParams(mu1, mu2)).mean_aoi;
  r.reduction_pct = reduction_pct(r.zw_aoi, r.aoi_at_star);
  r.evaluations = evaluations;
  return r;
}

/// Mean-AoI reduction of the preemption-only limit relative to ZW.
inline double preempt_only_reduction(double mu1, double mu2) {
  const double zw = zw_closed_form_means(ZwParams(mu1, mu2)).mean_aoi;
  return reduction_pct(zw, aoi_mean(make_fp_amc(preempt_only_params(mu1, mu2))));
}

/// 21-point log grid 10^(-2 + 0.1 i) spanning [0.01, 1].
inline std::vector<double> mu2_sweep_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 20; ++i) g.push_back(std::pow(10.0, (i - 20) / 10.0));
  return g;
}

}  // namespace aoi
