#pragma once

// Phase-type distributions and absorbing continuous-time Markov chains.
//
// Everything downstream (ZW and F/P chains, AoI/PAoI distributions) reduces to
// three kernels defined here: the action of a matrix exponential on a row
// vector (uniformization), linear solves with the sub-generator (partial-pivot
// LU), and eager structural validation of the chain.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aoi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;        // column vector
using RowVector = Eigen::RowVectorXd;  // row vector (initial / occupancy vectors)

/// Raised when a numerical procedure cannot deliver its contracted accuracy
/// (singular system, residual too large, search failing to contract).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr double kStructTol = 1e-12;

// Row-sum tolerance scales with the largest rate so that chains with very
// fast phases (rate 1e8) are not rejected for floating-point noise.
inline double scaled_tol(const Matrix& S) {
  double scale = 1.0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) scale = std::max(scale, std::abs(S(i, i)));
  return kStructTol * scale;
}

inline void check_square(const Matrix& S, const char* what) {
  if (S.rows() != S.cols() || S.rows() == 0)
    throw std::invalid_argument(std::string(what) + ": sub-generator must be square and non-empty");
}

inline void check_subgenerator_signs(const Matrix& S, const char* what) {
  const double tol = scaled_tol(S);
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    if (!std::isfinite(S(i, i)) || S(i, i) > 0.0)
      throw std::invalid_argument(std::string(what) + ": diagonal entry " + std::to_string(i) + " must be <= 0");
    double row = 0.0;
    for (Eigen::Index j = 0; j < S.cols(); ++j) {
      if (i != j && (!std::isfinite(S(i, j)) || S(i, j) < 0.0))
        throw std::invalid_argument(std::string(what) + ": negative off-diagonal rate at (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
      row += S(i, j);
    }
    if (row > tol)
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(i) + " sums to a positive value");
  }
}

// A sub-generator is nonsingular iff every state can reach a state with a
// strictly negative row sum (an exit to absorption).
inline void check_all_transient(const Matrix& S, const char* what) {
  const auto n = S.rows();
  const double tol = scaled_tol(S);
  std::vector<char> reaches(static_cast<std::size_t>(n), 0);
  std::queue<Eigen::Index> frontier;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (S.row(i).sum() < -tol) {
      reaches[static_cast<std::size_t>(i)] = 1;
      frontier.push(i);
    }
  }
  while (!frontier.empty()) {
    const auto j = frontier.front();
    frontier.pop();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j && !reaches[static_cast<std::size_t>(i)] && S(i, j) > 0.0) {
        reaches[static_cast<std::size_t>(i)] = 1;
        frontier.push(i);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!reaches[static_cast<std::size_t>(i)])
      throw std::invalid_argument(std::string(what) + ": state " + std::to_string(i) +
                                  " cannot reach absorption (singular sub-generator)");
}

inline void check_probability_vector(const RowVector& v, double max_sum, bool exact, const char* what) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || v(i) < 0.0)
      throw std::invalid_argument(std::string(what) + ": negative or non-finite probability entry");
    sum += v(i);
  }
  if (sum > max_sum + kStructTol || (exact && std::abs(sum - max_sum) > kStructTol))
    throw std::invalid_argument(std::string(what) + ": probability vector has invalid total mass");
}

inline void check_time(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("time argument must be finite and >= 0");
}

// Poisson(mean) weights w_j for j = 0..J with the truncated tail below tol.
// Requires mean <= ~700 so that e^{-mean} is representable.
inline std::vector<double> poisson_weights(double mean, double tol) {
  // Stops once a geometric bound on the remaining tail drops below tol; the
  // bound stays meaningful below machine epsilon, unlike 1 - partial sum.
  std::vector<double> w;
  double term = std::exp(-mean);
  for (std::size_t j = 0;; ++j) {
    w.push_back(term);
    const double jn = static_cast<double>(j + 1);
    term *= mean / jn;
    if (jn > mean && term / (1.0 - mean / (jn + 1.0)) <= tol) break;
    if (j > 10 * static_cast<std::size_t>(mean) + 1000) break;
  }
  return w;
}

inline constexpr double kUniformizationStep = 30.0;  // max q*dt per Poisson sweep
inline constexpr double kPoissonTailTol = 1e-14;

}  // namespace detail

/// Cached factorization of -S. All S^{-1} products in the library go through
/// this; S^{-1} itself is never formed.
class NegSubgenSolver {
 public:
  NegSubgenSolver() = default;
  explicit NegSubgenSolver(const Matrix& S) : lu_(-S), lu_t_(-S.transpose()) {}

  /// x = (-S)^{-1} b
  [[nodiscard]] Vector solve(const Vector& b) const { return lu_.solve(b); }
  /// y = v (-S)^{-1}
  [[nodiscard]] RowVector solve_left(const RowVector& v) const {
    return lu_t_.solve(v.transpose()).transpose();
  }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
  Eigen::PartialPivLU<Matrix> lu_t_;  // this Eigen lacks transposed LU solves
};

/// v * exp(S x) by uniformization. S must be a sub-generator (nonnegative
/// off-diagonal entries). Long horizons are split into sweeps of q*dt <= 30;
/// when the number of sweeps would exceed the cost of forming exp(S dt) and
/// squaring it, the dense route is taken instead. Both routes only add
/// nonnegative terms, so nonnegative v yields a nonnegative result.
inline RowVector expm_action(const Matrix& S, double x, const RowVector& v) {
  detail::check_square(S, "expm_action");
  if (v.size() != S.rows()) throw std::invalid_argument("expm_action: dimension mismatch");
  detail::check_time(x);
  const auto n = S.rows();
  double q = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) q = std::max(q, -S(i, i));
  if (x == 0.0 || q == 0.0) return v;

  const Matrix P = Matrix::Identity(n, n) + S / q;
  const double qx = q * x;
  const double sweeps = std::ceil(qx / detail::kUniformizationStep);
  const double per_sweep_terms = detail::kUniformizationStep + 8.0 * std::sqrt(detail::kUniformizationStep) + 10.0;
  const double matvec_cost = sweeps * per_sweep_terms * static_cast<double>(n * n);
  const double squarings = std::max(0.0, std::ceil(std::log2(sweeps)));
  const double dense_cost = (per_sweep_terms + squarings) * static_cast<double>(n * n * n);

  if (matvec_cost <= dense_cost) {
    const auto m = static_cast<std::size_t>(sweeps);
    const auto w = detail::poisson_weights(qx / static_cast<double>(m), detail::kPoissonTailTol);
    RowVector out = v;
    for (std::size_t s = 0; s < m; ++s) {
      RowVector term = out;
      RowVector acc = w[0] * term;
      for (std::size_t j = 1; j < w.size(); ++j) {
        term = term * P;
        acc.noalias() += w[j] * term;
      }
      out = acc;
    }
    return out;
  }

  const int s = static_cast<int>(squarings);
  const double dt_q = qx / std::ldexp(1.0, s);
  // each squaring doubles the truncation deficit
  const auto w = detail::poisson_weights(dt_q, std::ldexp(detail::kPoissonTailTol, -s));
  Matrix term = Matrix::Identity(n, n);
  Matrix E = w[0] * term;
  for (std::size_t j = 1; j < w.size(); ++j) {
    term = term * P;
    E.noalias() += w[j] * term;
  }
  for (int i = 0; i < s; ++i) E = E * E;
  return v * E;
}

/// Evaluates v * exp(S x_i) on a nondecreasing grid by propagating between
/// consecutive grid points.
inline std::vector<RowVector> expm_action_grid(const Matrix& S, const RowVector& v, const std::vector<double>& grid) {
  std::vector<RowVector> out;
  out.reserve(grid.size());
  RowVector cur = v;
  double t = 0.0;
  for (double x : grid) {
    detail::check_time(x);
    if (x < t) throw std::invalid_argument("expm_action_grid: grid must be nondecreasing");
    cur = expm_action(S, x - t, cur);
    t = x;
    out.push_back(cur);
  }
  return out;
}

/// PH(sigma, S): time to absorption of a finite transient CTMC. Validated on
/// construction; immutable afterwards.
class PhaseType {
 public:
  PhaseType(RowVector sigma, Matrix S) : sigma_(std::move(sigma)), S_(std::move(S)) {
    detail::check_square(S_, "PhaseType");
    if (sigma_.size() != S_.rows()) throw std::invalid_argument("PhaseType: sigma and S dimensions differ");
    detail::check_subgenerator_signs(S_, "PhaseType");
    detail::check_probability_vector(sigma_, 1.0, false, "PhaseType");
    detail::check_all_transient(S_, "PhaseType");
    exit_ = -(S_ * Vector::Ones(S_.rows()));
    solver_ = NegSubgenSolver(S_);
  }

  [[nodiscard]] const RowVector& sigma() const noexcept { return sigma_; }
  [[nodiscard]] const Matrix& S() const noexcept { return S_; }
  /// nu = -S 1
  [[nodiscard]] const Vector& exit_rates() const noexcept { return exit_; }
  [[nodiscard]] Eigen::Index order() const noexcept { return S_.rows(); }
  [[nodiscard]] const NegSubgenSolver& solver() const noexcept { return solver_; }

 private:
  RowVector sigma_;
  Matrix S_;
  Vector exit_;
  NegSubgenSolver solver_;
};

inline double ph_pdf(const PhaseType& ph, double x) {
  detail::check_time(x);
  return std::max(0.0, expm_action(ph.S(), x, ph.sigma()).dot(ph.exit_rates()));
}

// sigma (e^{Sx} - I) S^{-1} nu = sigma 1 - sigma e^{Sx} 1
inline double ph_cdf(const PhaseType& ph, double x) {
  detail::check_time(x);
  const double survival = expm_action(ph.S(), x, ph.sigma()).sum();
  return std::clamp(ph.sigma().sum() - survival, 0.0, 1.0);
}

/// i-th non-central moment, i! sigma (-S)^{-i} 1, by i repeated solves.
inline double ph_moment(const PhaseType& ph, int i) {
  if (i < 1) throw std::invalid_argument("ph_moment: order must be >= 1");
  RowVector r = ph.sigma();
  double factorial = 1.0;
  for (int j = 1; j <= i; ++j) {
    r = ph.solver().solve_left(r);
    factorial *= j;
  }
  return factorial * r.sum();
}

/// Erlang-k with mean 1/lambda: bidiagonal chain with rate k*lambda per phase.
inline PhaseType erlang_ph(double lambda, int k) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("erlang_ph: lambda must be > 0");
  if (k < 1) throw std::invalid_argument("erlang_ph: k must be >= 1");
  const double rate = k * lambda;
  Matrix S = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    S(i, i) = -rate;
    if (i + 1 < k) S(i, i + 1) = rate;
  }
  RowVector sigma = RowVector::Zero(k);
  sigma(0) = 1.0;
  return PhaseType(std::move(sigma), std::move(S));
}

/// Absorbing chain [S V; 0 0] with an initial vector, an AoI-overlap mask and
/// the column of V that denotes successful absorption.
class AmcSpec {
 public:
  AmcSpec(Matrix S, Matrix V, RowVector init, Vector aoi_mask, Eigen::Index success_col = 0)
      : S_(std::move(S)), V_(std::move(V)), init_(std::move(init)), mask_(std::move(aoi_mask)),
        success_col_(success_col) {
    detail::check_square(S_, "AmcSpec");
    const auto n = S_.rows();
    if (V_.rows() != n || V_.cols() < 1) throw std::invalid_argument("AmcSpec: V must have one row per transient state");
    if (init_.size() != n || mask_.size() != n) throw std::invalid_argument("AmcSpec: init/mask dimension mismatch");
    if (success_col_ < 0 || success_col_ >= V_.cols()) throw std::invalid_argument("AmcSpec: success column out of range");
    detail::check_subgenerator_signs(S_, "AmcSpec");
    const double tol = detail::scaled_tol(S_);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index m = 0; m < V_.cols(); ++m)
        if (!std::isfinite(V_(i, m)) || V_(i, m) < 0.0) throw std::invalid_argument("AmcSpec: negative absorbing rate");
      if (std::abs(S_.row(i).sum() + V_.row(i).sum()) > tol)
        throw std::invalid_argument("AmcSpec: generator row " + std::to_string(i) + " does not sum to zero");
    }
    detail::check_probability_vector(init_, 1.0, true, "AmcSpec");
    bool any = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask_(i) != 0.0 && mask_(i) != 1.0) throw std::invalid_argument("AmcSpec: mask entries must be 0 or 1");
      any = any || mask_(i) == 1.0;
    }
    if (!any) throw std::invalid_argument("AmcSpec: mask selects no state");
    detail::check_all_transient(S_, "AmcSpec");
    solver_ = NegSubgenSolver(S_);
  }

  [[nodiscard]] const Matrix& S() const noexcept { return S_; }
  [[nodiscard]] const Matrix& V() const noexcept { return V_; }
  [[nodiscard]] const RowVector& init() const noexcept { return init_; }
  [[nodiscard]] const Vector& aoi_mask() const noexcept { return mask_; }
  [[nodiscard]] Eigen::Index success_col() const noexcept { return success_col_; }
  [[nodiscard]] Eigen::Index transient_count() const noexcept { return S_.rows(); }
  [[nodiscard]] Eigen::Index absorbing_count() const noexcept { return V_.cols(); }
  [[nodiscard]] Vector success_rates() const { return V_.col(success_col_); }
  [[nodiscard]] const NegSubgenSolver& solver() const noexcept { return solver_; }

 private:
  Matrix S_;
  Matrix V_;
  RowVector init_;
  Vector mask_;
  Eigen::Index success_col_;
  NegSubgenSolver solver_;
};

/// p_m = -init S^{-1} V_m
inline double absorption_probability(const AmcSpec& amc, Eigen::Index m) {
  if (m < 0 || m >= amc.absorbing_count()) throw std::out_of_range("absorption_probability: column out of range");
  return amc.solver().solve_left(amc.init()).dot(amc.V().col(m));
}

/// Row-major CSV dump for debugging and audit.
inline void dump_csv(std::ostream& os, const Matrix& M) {
  const auto old = os.precision(17);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) os << ',';
      os << M(i, j);
    }
    os << '\n';
  }
  os.precision(old);
}

}  // namespace aoi
