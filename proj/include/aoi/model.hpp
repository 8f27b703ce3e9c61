#pragma once

#include "aoi/aoi_metrics.hpp"
#include "aoi/fp_model.hpp"
#include "aoi/zw_model.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aoi {

enum class Policy { kZw, kFp, kPreemptOnly };

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::kZw: return "zw";
    case Policy::kFp: return "fp";
    case Policy::kPreemptOnly: return "po";
  }
  return "?";
}

inline Policy parse_policy(std::string_view s) {
  if (s == "zw") return Policy::kZw;
  if (s == "fp") return Policy::kFp;
  if (s == "po" || s == "preempt" || s == "preempt-only") return Policy::kPreemptOnly;
  throw std::invalid_argument("unknown policy '" + std::string(s) + "' (expected zw, fp or po)");
}

/// Policy plus the parameters that fully determine the system.
struct ModelKey {
  Policy policy = Policy::kZw;
  double mu1 = 1.0;
  double mu2 = 1.0;
  double lambda = 0.0;  ///< F/P only
  int k = 0;            ///< F/P only

  /// Validates and orders the servers so that mu1 >= mu2.
  [[nodiscard]] ModelKey normalized() const {
    ModelKey m = *this;
    if (!(m.mu1 > 0.0) || !(m.mu2 > 0.0) || !std::isfinite(m.mu1) || !std::isfinite(m.mu2))
      throw std::invalid_argument("service rates must be finite and > 0");
    if (m.mu1 < m.mu2) std::swap(m.mu1, m.mu2);
    switch (m.policy) {
      case Policy::kZw:
        m.lambda = 0.0;
        m.k = 0;
        break;
      case Policy::kFp:
        if (!(m.lambda > 0.0) || !std::isfinite(m.lambda)) throw std::invalid_argument("lambda must be finite and > 0");
        if (m.k < 1) throw std::invalid_argument("k must be >= 1");
        break;
      case Policy::kPreemptOnly:
        m.lambda = kPreemptOnlyLambda;
        m.k = 1;
        break;
    }
    return m;
  }

  /// Two keys describe the same system. The analytic preemption-only limit
  /// (k = 1, lambda >= 1e8) matches the native preemption-only policy.
  [[nodiscard]] bool same_system(const ModelKey& other) const {
    const auto a = normalized(), b = other.normalized();
    auto canon = [](ModelKey m) {
      if (m.policy == Policy::kFp && m.k == 1 && m.lambda >= kPreemptOnlyLambda) {
        m.policy = Policy::kPreemptOnly;
        m.lambda = kPreemptOnlyLambda;
      }
      return m;
    };
    const auto x = canon(a), y = canon(b);
    auto close = [](double u, double v) { return std::abs(u - v) <= 1e-12 * std::max(std::abs(u), std::abs(v)); };
    return x.policy == y.policy && close(x.mu1, y.mu1) && close(x.mu2, y.mu2) && close(x.lambda, y.lambda) && x.k == y.k;
  }
};

inline AmcSpec build_amc(const ModelKey& key) {
  const auto m = key.normalized();
  switch (m.policy) {
    case Policy::kZw: return build_zw_amc(ZwParams(m.mu1, m.mu2));
    case Policy::kFp:
    case Policy::kPreemptOnly: return make_fp_amc(FpParams(m.mu1, m.mu2, m.lambda, m.k));
  }
  throw std::logic_error("unreachable");
}

/// Analytic summary tagged with the system it describes.
struct AnalyticResult {
  ModelKey model;
  AoiSummary summary;
};

inline AnalyticResult analyze(const ModelKey& key, const GridSpec& grid = {}) {
  const auto m = key.normalized();
  return {m, summarize(build_amc(m), grid)};
}

}  // namespace aoi
