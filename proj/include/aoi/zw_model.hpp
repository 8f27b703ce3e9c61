#pragma once

// Zero-wait (ZW) policy: both servers always busy, out-of-order packets are
// discarded at the monitor. Seven transient states, absorbing columns
// (success, fail).
//
//   1  P* on S1, T2 <= T1        5  P1, P2 up to date
//   2  P* on S1, T2 >  T1        6  P1 up to date, P2 obsolete
//   3  P* on S2, T1 <= T2        7  P1 obsolete, P2 up to date
//   4  P* on S2, T1 >  T2

#include "aoi/phtype.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace aoi {

struct ZwParams {
  double mu1 = 1.0;
  double mu2 = 1.0;
  bool swapped = false;  ///< true when the caller passed mu1 < mu2

  ZwParams() = default;
  ZwParams(double a, double b) : mu1(a), mu2(b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw std::invalid_argument("ZwParams: service rates must be finite and > 0");
    if (mu1 < mu2) {
      std::swap(mu1, mu2);
      swapped = true;
    }
  }
};

namespace zw_state {
inline constexpr Eigen::Index kCount = 7;
inline constexpr Eigen::Index kSuccess = 0;
inline constexpr Eigen::Index kFail = 1;
}  // namespace zw_state

inline AmcSpec build_zw_amc(const ZwParams& p) {
  const double m1 = p.mu1, m2 = p.mu2;
  Matrix S = Matrix::Zero(7, 7);
  Matrix V = Matrix::Zero(7, 2);
  using zw_state::kFail;
  using zw_state::kSuccess;
  // zero-based: state j in the table is row j-1
  S(0, 5) = m1;  S(0, 1) = m2;
  S(1, 4) = m1;  V(1, kFail) = m2;
  S(2, 3) = m1;  S(2, 6) = m2;
  V(3, kFail) = m1;  S(3, 4) = m2;
  V(4, kSuccess) = m1 + m2;
  V(5, kSuccess) = m1;  S(5, 4) = m2;
  S(6, 4) = m1;  V(6, kSuccess) = m2;
  for (Eigen::Index i = 0; i < 7; ++i) S(i, i) = -(S.row(i).sum() + V.row(i).sum());

  RowVector init = RowVector::Zero(7);
  init(0) = m1 / (m1 + m2);
  init(2) = m2 / (m1 + m2);
  Vector mask = Vector::Zero(7);
  mask(4) = mask(5) = mask(6) = 1.0;
  return AmcSpec(std::move(S), std::move(V), std::move(init), std::move(mask), kSuccess);
}

/// Closed-form S^{-1} for the ZW chain. Used only as an oracle.
inline Matrix zw_explicit_inverse(const ZwParams& p) {
  const double sum = p.mu1 + p.mu2;
  const double a = p.mu1 / sum;  // mu1'
  const double b = p.mu2 / sum;  // mu2'
  Matrix M = Matrix::Zero(7, 7);
  for (Eigen::Index i = 0; i < 7; ++i) M(i, i) = 1.0;
  M(0, 1) = b;  M(0, 4) = 2 * a * b;  M(0, 5) = a;
  M(1, 4) = a;
  M(2, 3) = a;  M(2, 4) = 2 * a * b;  M(2, 6) = b;
  M(3, 4) = b;
  M(5, 4) = b;
  M(6, 4) = a;
  return -M / sum;
}

struct ZwMeans {
  double mean_paoi;
  double mean_aoi;
};

inline ZwMeans zw_closed_form_means(const ZwParams& p) {
  const double m1 = p.mu1, m2 = p.mu2;
  const double s = m1 + m2;
  return {2.0 * s / (m1 * m1 + m1 * m2 + m2 * m2), 2.0 * (m1 * m1 + 3.0 * m1 * m2 + m2 * m2) / (s * s * s)};
}

}  // namespace aoi
