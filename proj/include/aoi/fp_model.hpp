#pragma once

// Freeze/preempt (F/P) policy.
//
// Z(t): per-packet absorbing chain with 9k+5 transient states. Groups
// j in {1,2,4,6,8,10,11,12,13} carry an Erlang freeze phase l = 1..k; groups
// {3,5,7,9,14} are phase-free. Absorbing columns: 0 = success (15), 1 = fail (16).
//
// W(t): recurrent chain with 5k+2 states whose stationary law, seen through
// the packet-generation intensity f, gives the initial vector of Z(t).

#include "aoi/phtype.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aoi {

struct FpParams {
  double mu1 = 1.0;
  double mu2 = 1.0;
  double lambda = 1.0;  ///< freeze rate; mean freeze duration is 1/lambda
  int k = 1;            ///< Erlang order of the freeze duration

  FpParams() = default;
  FpParams(double m1, double m2, double lam, int order) : mu1(m1), mu2(m2), lambda(lam), k(order) {
    if (!(mu1 > 0.0) || !(mu2 > 0.0) || !std::isfinite(mu1) || !std::isfinite(mu2))
      throw std::invalid_argument("FpParams: service rates must be finite and > 0");
    if (mu1 < mu2) std::swap(mu1, mu2);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("FpParams: lambda must be finite and > 0");
    if (k < 1) throw std::invalid_argument("FpParams: k must be >= 1");
  }
};

/// Symbolic state of Z(t); phase == 0 for phase-free groups.
struct FpState {
  int group;
  int phase;
  friend bool operator==(const FpState&, const FpState&) = default;
  [[nodiscard]] std::string label() const {
    return phase == 0 ? std::to_string(group) : "(" + std::to_string(group) + "," + std::to_string(phase) + ")";
  }
};

/// Dense layout: (1,1..k), (2,1..k), 3, (4,1..k), 5, (6,1..k), 7, (8,1..k), 9,
/// (10,1..k), (11,1..k), (12,1..k), (13,1..k), 14.
class FpStateIndex {
 public:
  static constexpr std::array<int, 14> kGroups{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};

  static constexpr bool is_frozen_group(int g) { return !(g == 3 || g == 5 || g == 7 || g == 9 || g == 14); }

  explicit FpStateIndex(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("FpStateIndex: k must be >= 1");
    Eigen::Index next = 0;
    for (int g : kGroups) {
      start_[static_cast<std::size_t>(g)] = next;
      next += is_frozen_group(g) ? k : 1;
    }
    size_ = next;
  }

  [[nodiscard]] int k() const noexcept { return k_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return size_; }

  /// Phase-free group.
  [[nodiscard]] Eigen::Index operator()(int group) const {
    if (group < 1 || group > 14 || is_frozen_group(group))
      throw std::out_of_range("FpStateIndex: group " + std::to_string(group) + " requires a phase");
    return start_[static_cast<std::size_t>(group)];
  }
  /// Freeze group with phase 1..k.
  [[nodiscard]] Eigen::Index operator()(int group, int phase) const {
    if (group < 1 || group > 14 || !is_frozen_group(group))
      throw std::out_of_range("FpStateIndex: group " + std::to_string(group) + " has no phase");
    if (phase < 1 || phase > k_) throw std::out_of_range("FpStateIndex: phase out of range");
    return start_[static_cast<std::size_t>(group)] + (phase - 1);
  }

  [[nodiscard]] FpState state_at(Eigen::Index idx) const {
    if (idx < 0 || idx >= size_) throw std::out_of_range("FpStateIndex: index out of range");
    for (auto it = kGroups.rbegin(); it != kGroups.rend(); ++it) {
      const auto s = start_[static_cast<std::size_t>(*it)];
      if (idx >= s) return {*it, is_frozen_group(*it) ? static_cast<int>(idx - s) + 1 : 0};
    }
    throw std::logic_error("unreachable");
  }

  /// Symbolic label -> dense index, e.g. {"(1,1)": 0, ..., "14": 9k+4}.
  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    for (Eigen::Index i = 0; i < size_; ++i) j[state_at(i).label()] = i;
    return j;
  }

 private:
  int k_;
  Eigen::Index size_ = 0;
  std::array<Eigen::Index, 15> start_{};
};

/// Z(t) without its initial vector.
struct FpAmc {
  FpStateIndex index;
  Matrix S;
  Matrix V;
};

namespace fp_col {
inline constexpr Eigen::Index kSuccess = 0;
inline constexpr Eigen::Index kFail = 1;
}  // namespace fp_col

inline FpAmc build_fp_amc(const FpParams& p) {
  FpStateIndex ix(p.k);
  const auto n = ix.size();
  Matrix S = Matrix::Zero(n, n);
  Matrix V = Matrix::Zero(n, 2);
  const double m1 = p.mu1, m2 = p.mu2, kl = p.k * p.lambda;
  const int k = p.k;
  using fp_col::kFail;
  using fp_col::kSuccess;

  // freeze phase advance, and where the last phase leads
  auto advance = [&](int g, int l, Eigen::Index at_end) {
    S(ix(g, l), l < k ? ix(g, l + 1) : at_end) += kl;
  };
  for (int l = 1; l <= k; ++l) {
    advance(1, l, ix(4, 1));
    S(ix(1, l), ix(11, l)) += m1;

    advance(2, l, ix(8, 1));
    S(ix(2, l), ix(11, l)) += m2;

    advance(4, l, ix(3));
    S(ix(4, l), ix(13, l)) += m1;
    V(ix(4, l), kFail) += m2;

    advance(6, l, ix(5));
    S(ix(6, l), ix(11, l)) += m1;
    S(ix(6, l), ix(1, l)) += m2;

    advance(8, l, ix(7));
    V(ix(8, l), kFail) += m1;
    S(ix(8, l), ix(12, l)) += m2;

    advance(10, l, ix(9));
    S(ix(10, l), ix(2, l)) += m1;
    S(ix(10, l), ix(11, l)) += m2;  // the older packet on S1 is preempted: both idle

    advance(11, l, ix(12, 1));

    advance(12, l, ix(14));
    V(ix(12, l), kSuccess) += m1;

    advance(13, l, ix(14));
    V(ix(13, l), kSuccess) += m2;
  }
  S(ix(3), ix(14)) += m1;
  V(ix(3), kFail) += m2;
  S(ix(5), ix(12, 1)) += m1;
  S(ix(5), ix(4, 1)) += m2;
  V(ix(7), kFail) += m1;
  S(ix(7), ix(14)) += m2;
  S(ix(9), ix(8, 1)) += m1;
  S(ix(9), ix(12, 1)) += m2;
  V(ix(14), kSuccess) += m1 + m2;

  for (Eigen::Index i = 0; i < n; ++i) S(i, i) = -(S.row(i).sum() + V.row(i).sum());
  return {std::move(ix), std::move(S), std::move(V)};
}

/// W(t) layout: (j,1..k) for j = 1..5, then 6, 7.
class RmcIndex {
 public:
  explicit RmcIndex(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("RmcIndex: k must be >= 1");
  }
  [[nodiscard]] int k() const noexcept { return k_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return 5 * k_ + 2; }
  [[nodiscard]] Eigen::Index operator()(int group, int phase) const {
    if (group < 1 || group > 5 || phase < 1 || phase > k_) throw std::out_of_range("RmcIndex: bad (group, phase)");
    return static_cast<Eigen::Index>(group - 1) * k_ + (phase - 1);
  }
  [[nodiscard]] Eigen::Index operator()(int group) const {
    if (group != 6 && group != 7) throw std::out_of_range("RmcIndex: only 6 and 7 are phase-free");
    return 5 * k_ + (group - 6);
  }

 private:
  int k_;
};

inline Matrix build_fp_rmc(const FpParams& p) {
  const RmcIndex ix(p.k);
  const auto n = ix.size();
  Matrix P = Matrix::Zero(n, n);
  const double m1 = p.mu1, m2 = p.mu2, kl = p.k * p.lambda;
  const int k = p.k;
  auto advance = [&](int g, int l, Eigen::Index at_end) { P(ix(g, l), l < k ? ix(g, l + 1) : at_end) += kl; };
  for (int l = 1; l <= k; ++l) {
    advance(1, l, ix(2, 1));
    advance(2, l, ix(4, 1));
    P(ix(2, l), ix(1, l)) += m1;
    advance(3, l, ix(5, 1));
    P(ix(3, l), ix(1, l)) += m2;
    advance(4, l, ix(6));
    P(ix(4, l), ix(3, l)) += m1;
    P(ix(4, l), ix(1, l)) += m2;
    advance(5, l, ix(7));
    P(ix(5, l), ix(1, l)) += m1;
    P(ix(5, l), ix(2, l)) += m2;
  }
  P(ix(6), ix(5, 1)) += m1;
  P(ix(6), ix(2, 1)) += m2;
  P(ix(7), ix(2, 1)) += m1;
  P(ix(7), ix(4, 1)) += m2;
  for (Eigen::Index i = 0; i < n; ++i) P(i, i) = -P.row(i).sum();
  return P;
}

struct RmcStationary {
  RowVector pi;
  double f = 0.0;  ///< packet-generation intensity
};

/// Stationary law of an irreducible generator: last balance equation replaced
/// by normalization, square system solved by LU. Residual is checked against
/// 1e-10 scaled by the largest rate.
namespace detail {

/// Every state reaches state 0 and is reached from it.
inline bool irreducible(const Matrix& P) {
  const auto n = P.rows();
  for (bool forward : {true, false}) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double rate = forward ? P(i, j) : P(j, i);
        if (j != i && rate > 0.0 && !seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = 1;
          stack.push_back(j);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) return false;
  }
  return true;
}

}  // namespace detail

inline RowVector stationary_distribution(const Matrix& P) {
  const auto n = P.rows();
  if (n == 0 || P.cols() != n) throw std::invalid_argument("stationary_distribution: generator must be square");
  if (!detail::irreducible(P)) throw NumericalError("stationary_distribution: generator is reducible");
  Matrix A = P.transpose();
  A.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::PartialPivLU<Matrix> lu(A);
  Vector pi = lu.solve(rhs);
  double scale = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(P(i, i)));
  if (!pi.allFinite()) throw NumericalError("stationary_distribution: singular system");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi(i) < -1e-12) throw NumericalError("stationary_distribution: negative probability (reducible generator?)");
    pi(i) = std::max(pi(i), 0.0);
  }
  pi /= pi.sum();
  const double residual = (pi.transpose() * P).cwiseAbs().maxCoeff();
  if (residual > 1e-10 * scale) throw NumericalError("stationary_distribution: residual tolerance not attained");
  return pi.transpose();
}

inline RmcStationary rmc_stationary(const FpParams& p, const Matrix& P) {
  const RmcIndex ix(p.k);
  if (P.rows() != ix.size()) throw std::invalid_argument("rmc_stationary: generator size does not match k");
  RmcStationary st;
  st.pi = stationary_distribution(P);
  const double kl = p.k * p.lambda;
  const auto& pi = st.pi;
  st.f = kl * (pi(ix(1, p.k)) + pi(ix(2, p.k)) + pi(ix(3, p.k))) + (p.mu1 + p.mu2) * (pi(ix(6)) + pi(ix(7)));
  if (!(st.f > 0.0)) throw NumericalError("rmc_stationary: non-positive generation intensity");
  return st;
}

struct FpEntryProbabilities {
  double p1;  ///< new packet enters Z at (1,1)
  double p2;  ///< ... at (10,1)
  double p3;  ///< ... at (6,1)
};

inline FpEntryProbabilities fp_entry_probabilities(const FpParams& p, const RmcStationary& st) {
  const RmcIndex ix(p.k);
  const auto& pi = st.pi;
  const double kl = p.k * p.lambda;
  return {(kl * pi(ix(1, p.k)) + p.mu2 * pi(ix(6)) + p.mu1 * pi(ix(7))) / st.f,
          (kl * pi(ix(2, p.k)) + p.mu2 * pi(ix(7))) / st.f,
          (kl * pi(ix(3, p.k)) + p.mu1 * pi(ix(6))) / st.f};
}

inline RowVector fp_initial_vector(const FpParams& p, const RmcStationary& st) {
  const FpStateIndex ix(p.k);
  const auto e = fp_entry_probabilities(p, st);
  RowVector beta = RowVector::Zero(ix.size());
  beta(ix(1, 1)) = e.p1;
  beta(ix(10, 1)) = e.p2;
  beta(ix(6, 1)) = e.p3;
  return beta;
}

/// 1 on (11,.), (12,.), (13,.) and 14.
inline Vector fp_aoi_mask(int k) {
  const FpStateIndex ix(k);
  Vector h = Vector::Zero(ix.size());
  for (int g : {11, 12, 13})
    for (int l = 1; l <= k; ++l) h(ix(g, l)) = 1.0;
  h(ix(14)) = 1.0;
  return h;
}

/// Complete F/P chain: Z(t) with initial vector from W(t) and mask h.
inline AmcSpec make_fp_amc(const FpParams& p) {
  auto z = build_fp_amc(p);
  const auto st = rmc_stationary(p, build_fp_rmc(p));
  RowVector beta = fp_initial_vector(p, st);
  // the three entries sum to 1 up to rounding; renormalize to keep the
  // AmcSpec mass check exact
  beta /= beta.sum();
  return AmcSpec(std::move(z.S), std::move(z.V), std::move(beta), fp_aoi_mask(p.k), fp_col::kSuccess);
}

inline constexpr double kPreemptOnlyLambda = 1e8;

/// Preemption-only limit: k = 1 and a vanishing freeze.
inline FpParams preempt_only_params(double mu1, double mu2) { return FpParams(mu1, mu2, kPreemptOnlyLambda, 1); }

}  // namespace aoi
