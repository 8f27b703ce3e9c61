#pragma once

// JSON and CSV serialization of analysis, simulation and optimization results.
// CSV floats use 12 significant digits.

#include "aoi/aoi_metrics.hpp"
#include "aoi/model.hpp"
#include "aoi/optimizer.hpp"
#include "aoi/simulator.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace aoi {

using json = nlohmann::ordered_json;

inline std::string fmt_num(double v) { return fmt::format("{:.12g}", v); }

namespace detail {
inline json nan_as_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
}  // namespace detail

inline json to_json(const ModelKey& m) {
  json j;
  j["policy"] = std::string(to_string(m.policy));
  j["mu1"] = m.mu1;
  j["mu2"] = m.mu2;
  if (m.policy != Policy::kZw) {
    j["lambda"] = m.lambda;
    j["k"] = m.k;
  }
  return j;
}

inline json to_json(const DistributionTable& t) {
  json j;
  j["mean"] = t.mean;
  j["second_moment"] = t.second_moment;
  j["variance"] = t.variance;
  j["x"] = t.grid;
  j["pdf"] = t.pdf;
  j["cdf"] = t.cdf;
  return j;
}

/// Summary of one metric (aoi or paoi); the table itself goes to CSV.
inline json metric_summary_json(const AnalyticResult& r, Metric m) {
  const auto& s = r.summary;
  const bool aoi = m == Metric::kAoi;
  const auto& t = aoi ? s.aoi_table : s.paoi_table;
  const auto& mom = aoi ? s.aoi_moments : s.paoi_moments;
  json j;
  j["metric"] = aoi ? "aoi" : "paoi";
  j["model"] = to_json(r.model);
  j["mean"] = mom[0];
  j["moments"] = {mom[0], mom[1], mom[2]};
  j["variance"] = t.variance;
  j["p_success"] = s.p_success;
  j["mean_aoi"] = s.mean_aoi;
  j["mean_paoi"] = s.mean_paoi;
  j["grid_points"] = t.grid.size();
  return j;
}

inline json to_json(const AnalyticResult& r) {
  json j;
  j["model"] = to_json(r.model);
  j["mean_aoi"] = r.summary.mean_aoi;
  j["mean_paoi"] = r.summary.mean_paoi;
  j["aoi_moments"] = r.summary.aoi_moments;
  j["paoi_moments"] = r.summary.paoi_moments;
  j["p_success"] = r.summary.p_success;
  j["aoi_table"] = to_json(r.summary.aoi_table);
  j["paoi_table"] = to_json(r.summary.paoi_table);
  return j;
}

inline void write_table_csv(std::ostream& os, const DistributionTable& t) {
  os << "x,pdf,cdf\n";
  for (std::size_t i = 0; i < t.grid.size(); ++i)
    os << fmt_num(t.grid[i]) << ',' << fmt_num(t.pdf[i]) << ',' << fmt_num(t.cdf[i]) << '\n';
}

inline json to_json(const SimResult& r) {
  json j;
  j["model"] = to_json(r.config.model);
  j["horizon"] = r.config.horizon;
  j["warmup"] = r.config.effective_warmup();
  j["seed"] = r.config.seed;
  j["replications"] = r.config.replications;
  j["mean_aoi"] = r.mean_aoi;
  j["mean_aoi_se"] = detail::nan_as_null(r.mean_aoi_se);
  j["mean_paoi"] = r.mean_paoi;
  j["mean_paoi_se"] = detail::nan_as_null(r.mean_paoi_se);
  j["cycle_count"] = r.cycle_count;
  j["generated"] = r.generated;
  j["discarded_at_monitor"] = r.discarded_at_monitor;
  j["preempted"] = r.preempted;
  j["order_violations"] = r.order_violations;
  json reps = json::array();
  for (const auto& s : r.per_replication) reps.push_back({{"mean_aoi", s.mean_aoi}, {"mean_paoi", s.mean_paoi}, {"cycles", s.cycles}});
  j["per_replication"] = reps;
  if (r.config.model.policy == Policy::kFp) j["entry_counts"] = r.entry_counts;
  return j;
}

/// Empirical cdf sampled on a grid: columns x,cdf.
template <class Cdf>
void write_empirical_csv(std::ostream& os, const Cdf& cdf, const std::vector<double>& grid) {
  os << "x,cdf\n";
  for (double x : grid) os << fmt_num(x) << ',' << fmt_num(cdf(x)) << '\n';
}

inline json to_json(const OptResult& r, double mu1, double mu2, int k) {
  json j;
  j["mu1"] = mu1;
  j["mu2"] = mu2;
  j["k"] = k;
  j["lambda_star"] = r.lambda_star;
  j["f_star"] = r.f_star;
  j["aoi_at_star"] = r.aoi_at_star;
  j["zw_aoi"] = r.zw_aoi;
  j["reduction_pct"] = r.reduction_pct;
  j["bracket"] = {r.bracket_lo, r.bracket_hi};
  j["evaluations"] = r.evaluations;
  j["bracket_expanded"] = r.bracket_expanded;
  j["warning"] = r.boundary_hit ? "argmin at bracket boundary" : "";
  j["boundary_hit"] = r.boundary_hit;
  return j;
}

inline constexpr const char* kSweepHeader = "mu2,k,lambda_star,f_star,aoi_star,zw_aoi,reduction_pct";

inline std::string sweep_row(double mu2, int k, const OptResult& r) {
  return fmt::format("{},{},{},{},{},{},{}", fmt_num(mu2), k, fmt_num(r.lambda_star), fmt_num(r.f_star),
                     fmt_num(r.aoi_at_star), fmt_num(r.zw_aoi), fmt_num(r.reduction_pct));
}

}  // namespace aoi
