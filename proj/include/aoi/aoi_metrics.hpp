#pragma once

// AoI and peak-AoI laws of an absorbing chain.
//
// PAoI is the time to absorption conditioned on the successful column:
//   F(x) = 1 - init e^{Sx} a / p,   a = (-S)^{-1} V_s,  p = init a
//   f(x) = init e^{Sx} V_s / p
// AoI is the masked occupancy normalized to a density:
//   F(x) = 1 - init e^{Sx} b / c,   b = (-S)^{-1} mask, c = init b
//   f(x) = init e^{Sx} mask / c
// Moments of order i are i! init (-S)^{-(i+1)} w / init (-S)^{-1} w with w the
// success column or the mask.

#include "aoi/phtype.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace aoi {

enum class Metric { kAoi, kPaoi };

namespace detail {

inline Vector metric_weight(const AmcSpec& amc, Metric m) {
  return m == Metric::kPaoi ? amc.success_rates() : amc.aoi_mask();
}

/// init (-S)^{-1} w: normalizer of the conditional law.
inline double metric_normalizer(const AmcSpec& amc, Metric m) {
  return amc.solver().solve_left(amc.init()).dot(metric_weight(amc, m));
}

}  // namespace detail

inline double metric_pdf(const AmcSpec& amc, Metric m, double x) {
  detail::check_time(x);
  const double c = detail::metric_normalizer(amc, m);
  return std::max(0.0, expm_action(amc.S(), x, amc.init()).dot(detail::metric_weight(amc, m)) / c);
}

inline double metric_cdf(const AmcSpec& amc, Metric m, double x) {
  detail::check_time(x);
  const Vector a = amc.solver().solve(detail::metric_weight(amc, m));
  const double c = amc.init().dot(a);
  return std::clamp(1.0 - expm_action(amc.S(), x, amc.init()).dot(a) / c, 0.0, 1.0);
}

/// First `count` non-central moments (orders 1..count).
inline std::vector<double> metric_moments(const AmcSpec& amc, Metric m, int count) {
  if (count < 1) throw std::invalid_argument("metric_moments: count must be >= 1");
  const Vector w = detail::metric_weight(amc, m);
  RowVector r = amc.solver().solve_left(amc.init());
  const double c = r.dot(w);
  std::vector<double> out;
  double factorial = 1.0;
  for (int i = 1; i <= count; ++i) {
    r = amc.solver().solve_left(r);
    factorial *= i;
    out.push_back(factorial * r.dot(w) / c);
  }
  return out;
}

inline double paoi_cdf(const AmcSpec& amc, double x) { return metric_cdf(amc, Metric::kPaoi, x); }
inline double paoi_pdf(const AmcSpec& amc, double x) { return metric_pdf(amc, Metric::kPaoi, x); }
inline double paoi_mean(const AmcSpec& amc) { return metric_moments(amc, Metric::kPaoi, 1)[0]; }
inline double aoi_cdf(const AmcSpec& amc, double x) { return metric_cdf(amc, Metric::kAoi, x); }
inline double aoi_pdf(const AmcSpec& amc, double x) { return metric_pdf(amc, Metric::kAoi, x); }
inline double aoi_mean(const AmcSpec& amc) { return metric_moments(amc, Metric::kAoi, 1)[0]; }

/// Conditional PAoI as a PH pair: init reweighted by the per-state success
/// likelihood. Used to cross-check the conditional formulas.
inline PhaseType conditional_paoi_ph(const AmcSpec& amc) {
  // Doob h-transform: sigma_i ~ init_i a_i, S_ij ~ S_ij a_j / a_i
  const Vector a = amc.solver().solve(amc.success_rates());
  const auto n = amc.transient_count();
  RowVector sigma = RowVector::Zero(n);
  Matrix S = Matrix::Zero(n, n);
  const double p = amc.init().dot(a);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a(i) <= 0.0) {
      S(i, i) = -1.0;  // unreachable under the conditioning; kept transient
      continue;
    }
    sigma(i) = amc.init()(i) * a(i) / p;
    for (Eigen::Index j = 0; j < n; ++j) S(i, j) = amc.S()(i, j) * a(j) / a(i);
  }
  return PhaseType(std::move(sigma), std::move(S));
}

struct GridSpec {
  std::size_t points = 2000;       ///< log-spaced points, plus x = 0
  double lo_fraction = 0.01;       ///< first positive point = lo_fraction * mean
  double hi_multiple = 40.0;       ///< last point = hi_multiple * mean
};

inline std::vector<double> log_grid(double mean, const GridSpec& g) {
  if (!(mean > 0.0) || g.points < 2 || !(g.lo_fraction > 0.0) || !(g.hi_multiple > g.lo_fraction))
    throw std::invalid_argument("log_grid: invalid grid specification");
  std::vector<double> grid;
  grid.reserve(g.points + 1);
  grid.push_back(0.0);
  const double lo = std::log(g.lo_fraction * mean), hi = std::log(g.hi_multiple * mean);
  for (std::size_t i = 0; i < g.points; ++i)
    grid.push_back(std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(g.points - 1)));
  return grid;
}

struct DistributionTable {
  std::vector<double> grid;
  std::vector<double> pdf;
  std::vector<double> cdf;
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;

  /// Linear interpolation of the cdf; flat beyond the last grid point.
  [[nodiscard]] double cdf_at(double x) const {
    if (grid.empty()) throw std::logic_error("DistributionTable: empty table");
    if (x <= grid.front()) return x < grid.front() ? 0.0 : cdf.front();
    if (x >= grid.back()) return cdf.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const auto i = static_cast<std::size_t>(it - grid.begin());
    const double t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return cdf[i - 1] + t * (cdf[i] - cdf[i - 1]);
  }

  [[nodiscard]] double trapezoid_mass() const {
    double s = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) s += 0.5 * (pdf[i] + pdf[i - 1]) * (grid[i] - grid[i - 1]);
    return s;
  }
};

/// pdf and cdf on `grid` with a single sweep of the exponential action.
inline DistributionTable tabulate(const AmcSpec& amc, Metric m, const std::vector<double>& grid) {
  const Vector w = detail::metric_weight(amc, m);
  const Vector a = amc.solver().solve(w);
  const double c = amc.init().dot(a);
  const auto states = expm_action_grid(amc.S(), amc.init(), grid);
  DistributionTable t;
  t.grid = grid;
  t.pdf.reserve(grid.size());
  t.cdf.reserve(grid.size());
  double running = 0.0;
  for (const auto& v : states) {
    t.pdf.push_back(std::max(0.0, v.dot(w) / c));
    running = std::max(running, std::clamp(1.0 - v.dot(a) / c, 0.0, 1.0));
    t.cdf.push_back(running);  // monotone envelope absorbs ~1e-16 rounding
  }
  const auto mom = metric_moments(amc, m, 2);
  t.mean = mom[0];
  t.second_moment = mom[1];
  t.variance = mom[1] - mom[0] * mom[0];
  return t;
}

struct AoiSummary {
  double mean_aoi = 0.0;
  double mean_paoi = 0.0;
  std::array<double, 3> aoi_moments{};
  std::array<double, 3> paoi_moments{};
  double p_success = 0.0;
  DistributionTable aoi_table;
  DistributionTable paoi_table;
};

inline AoiSummary summarize(const AmcSpec& amc, const GridSpec& grid = {}) {
  AoiSummary s;
  const auto am = metric_moments(amc, Metric::kAoi, 3);
  const auto pm = metric_moments(amc, Metric::kPaoi, 3);
  std::copy(am.begin(), am.end(), s.aoi_moments.begin());
  std::copy(pm.begin(), pm.end(), s.paoi_moments.begin());
  s.mean_aoi = am[0];
  s.mean_paoi = pm[0];
  s.p_success = absorption_probability(amc, amc.success_col());
  s.aoi_table = tabulate(amc, Metric::kAoi, log_grid(s.mean_aoi, grid));
  s.paoi_table = tabulate(amc, Metric::kPaoi, log_grid(s.mean_paoi, grid));
  return s;
}

}  // namespace aoi
