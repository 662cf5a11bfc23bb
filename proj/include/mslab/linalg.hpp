#pragma once

// Sparse/dense linear algebra used throughout mslab: row-compressed matrices
// built from triplets, Krylov solvers (CG, BiCGStab), a small dense solver and
// a Lanczos Ritz-value estimator. Everything is templated on the scalar type
// and operates on Eigen vectors.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mslab/exceptions.hpp"

namespace mslab {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;
template <typename Scalar>
using Triplet = Eigen::Triplet<Scalar, int>;

using VectorXd = VectorX<double>;
using MatrixXd = MatrixX<double>;
using SparseMatrixd = SparseMatrix<double>;
using Tripletd = Triplet<double>;

/// Compressed matrix from coordinate triplets; duplicates are summed in input
/// order, structural entries that sum to zero are kept.
template <typename Scalar>
SparseMatrix<Scalar> from_triplets(int rows, int cols, const std::vector<Triplet<Scalar>>& triplets) {
  for (const auto& t : triplets) {
    if (t.row() < 0 || t.row() >= rows || t.col() < 0 || t.col() >= cols) {
      throw std::out_of_range("triplet (" + std::to_string(t.row()) + "," + std::to_string(t.col()) +
                              ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  SparseMatrix<Scalar> A(rows, cols);
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  return A;
}

/// IncompleteCholesky suits SPD systems, IncompleteLU general ones.
enum class Preconditioner { None, Jacobi, IncompleteCholesky, IncompleteLU };

/// RoundoffLimited: the true residual sits below the rounding floor
/// 1e3 u (|A|_inf |x| + |b|) but above rtol |b| and has stopped improving.
enum class SolveStatus { Converged, MaxIterations, Breakdown, RoundoffLimited };

struct SolveOptions {
  double rtol = 1e-10;
  int max_iterations = 0;  // 0: 10 * n + 100
  Preconditioner preconditioner = Preconditioner::Jacobi;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  SolveStatus status = SolveStatus::Converged;
  double wall_ms = 0.0;

  /// Residual within rtol.
  bool converged() const { return status == SolveStatus::Converged; }
  /// Converged, or as close as rounding allows.
  bool acceptable() const { return converged() || status == SolveStatus::RoundoffLimited; }
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max iterations reached";
    case SolveStatus::Breakdown: return "breakdown";
    case SolveStatus::RoundoffLimited: return "stagnated at the rounding floor";
  }
  return "?";
}

/// Called after every iteration with the current iterate.
template <typename Scalar>
using IterationObserver = std::function<void(int, const VectorX<Scalar>&)>;

namespace detail {

template <typename Scalar>
VectorX<Scalar> inverse_diagonal(const SparseMatrix<Scalar>& A) {
  VectorX<Scalar> d = VectorX<Scalar>::Ones(A.rows());
  VectorX<Scalar> diag = A.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (diag[i] != Scalar(0)) d[i] = Scalar(1) / diag[i];
  }
  return d;
}

/// z = M^{-1} r for the selected preconditioner.
template <typename Scalar>
class PreconditionerApply {
 public:
  PreconditionerApply(const SparseMatrix<Scalar>& A, Preconditioner kind) : kind_(kind) {
    using ColMajor = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;
    switch (kind) {
      case Preconditioner::None: break;
      case Preconditioner::Jacobi: dinv_ = inverse_diagonal(A); break;
      case Preconditioner::IncompleteCholesky:
        ic_.compute(ColMajor(A));
        if (ic_.info() != Eigen::Success) throw SingularMatrixError("incomplete Cholesky factorisation failed");
        break;
      case Preconditioner::IncompleteLU:
        ilu_.setDroptol(Scalar(1e-6));
        ilu_.setFillfactor(10);
        ilu_.compute(ColMajor(A));
        if (ilu_.info() != Eigen::Success) throw SingularMatrixError("incomplete LU factorisation failed");
        break;
    }
  }

  void apply(const VectorX<Scalar>& r, VectorX<Scalar>& z) const {
    switch (kind_) {
      case Preconditioner::None: z = r; break;
      case Preconditioner::Jacobi: z = dinv_.cwiseProduct(r); break;
      case Preconditioner::IncompleteCholesky: z = ic_.solve(r); break;
      case Preconditioner::IncompleteLU: z = ilu_.solve(r); break;
    }
  }

 private:
  Preconditioner kind_;
  VectorX<Scalar> dinv_;
  Eigen::IncompleteCholesky<Scalar, Eigen::Lower, Eigen::AMDOrdering<int>> ic_;
  Eigen::IncompleteLUT<Scalar, int> ilu_;
};

template <typename Scalar>
Scalar inf_norm(const SparseMatrix<Scalar>& A) {
  Scalar m = 0;
  for (Eigen::Index i = 0; i < A.outerSize(); ++i) {
    Scalar s = 0;
    for (typename SparseMatrix<Scalar>::InnerIterator it(A, i); it; ++it) s += std::abs(it.value());
    m = std::max(m, s);
  }
  return m;
}

/// Residual norm below which further progress is lost to rounding:
/// 1e3 u (|A|_inf |x| + |b|).
template <typename Scalar>
Scalar roundoff_floor(Scalar a_norm, const VectorX<Scalar>& x, Scalar b_norm) {
  return Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * (a_norm * x.norm() + b_norm);
}

/// Decides when a Krylov loop may stop, from occasional true residuals.
/// Above the rounding floor a failed check asks for a restart; below it the
/// residual is sampled every 10 iterations and three samples without halving
/// end the solve.
template <typename Scalar>
class StopTest {
 public:
  enum class Verdict { Continue, Restart, Converged, Stagnated };

  StopTest(const SparseMatrix<Scalar>& A, const VectorX<Scalar>& b, double rtol)
      : A_(A), b_(b), bnorm_(b.norm()), anorm_(inf_norm(A)), target_(Scalar(rtol) * bnorm_) {}

  Scalar target() const { return target_; }

  /// Whether the true residual should be computed now.
  bool due(int it, Scalar recursive_norm, const VectorX<Scalar>& x) const {
    if (floor_regime_) return it % 10 == 0;
    return recursive_norm <= std::max(target_, roundoff_floor(anorm_, x, bnorm_));
  }

  Verdict check(const VectorX<Scalar>& x, VectorX<Scalar>& r_true) {
    r_true = b_ - A_ * x;
    const Scalar tn = r_true.norm();
    if (tn <= target_) return Verdict::Converged;
    if (tn > roundoff_floor(anorm_, x, bnorm_)) {
      floor_regime_ = false;
      return Verdict::Restart;
    }
    floor_regime_ = true;
    if (tn < Scalar(0.5) * best_) {
      best_ = tn;
      stalls_ = 0;
    } else if (++stalls_ >= 3) {
      return Verdict::Stagnated;
    }
    return Verdict::Continue;
  }

  /// Status for a loop that ran out of iterations or broke down.
  SolveStatus final_status(const VectorX<Scalar>& x) const {
    const Scalar tn = (b_ - A_ * x).norm();
    if (tn <= target_) return SolveStatus::Converged;
    return SolveStatus::MaxIterations;
  }

 private:
  const SparseMatrix<Scalar>& A_;
  const VectorX<Scalar>& b_;
  Scalar bnorm_, anorm_, target_;
  bool floor_regime_ = false;
  Scalar best_ = std::numeric_limits<Scalar>::infinity();
  int stalls_ = 0;
};

inline int iteration_limit(const SolveOptions& o, Eigen::Index n) {
  return o.max_iterations > 0 ? o.max_iterations : static_cast<int>(10 * n + 100);
}

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Preconditioned conjugate gradients. `x` is used as the initial guess when
/// it has the right size, otherwise zero. Converged means the true residual
/// satisfies ||b - Ax|| <= rtol ||b||; strong coefficient contrast can put the
/// rounding floor above that, which ends as RoundoffLimited once the residual
/// stops improving.
template <typename Scalar>
SolveReport cg(const SparseMatrix<Scalar>& A, const VectorX<Scalar>& b, VectorX<Scalar>& x,
               const SolveOptions& options = {}, const IterationObserver<Scalar>& observe = {}) {
  detail::Stopwatch clock;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = VectorX<Scalar>::Zero(n);
  SolveReport report;
  const Scalar bnorm = b.norm();
  if (bnorm == Scalar(0)) {
    x.setZero();
    report.wall_ms = clock.elapsed_ms();
    return report;
  }
  const detail::PreconditionerApply<Scalar> prec(A, options.preconditioner);
  const int maxit = detail::iteration_limit(options, n);
  detail::StopTest<Scalar> stop(A, b, options.rtol);
  using Verdict = typename detail::StopTest<Scalar>::Verdict;

  VectorX<Scalar> r = b - A * x;
  VectorX<Scalar> z;
  prec.apply(r, z);
  VectorX<Scalar> p = z;
  VectorX<Scalar> q(n), r_true(n);
  Scalar rz = r.dot(z);
  int it = 0;
  std::optional<SolveStatus> status;
  while (!status) {
    if (stop.due(it, r.norm(), x)) {
      const Verdict v = stop.check(x, r_true);
      if (v == Verdict::Converged) status = SolveStatus::Converged;
      if (v == Verdict::Stagnated) status = SolveStatus::RoundoffLimited;
      if (status) break;
      if (v == Verdict::Restart) {
        r = r_true;
        prec.apply(r, z);
        p = z;
        rz = r.dot(z);
      }
    }
    if (it >= maxit) break;
    q.noalias() = A * p;
    const Scalar pq = p.dot(q);
    if (!(pq > Scalar(0))) {
      status = SolveStatus::Breakdown;
      break;
    }
    const Scalar alpha = rz / pq;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    prec.apply(r, z);
    const Scalar rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    ++it;
    if (observe) observe(it, x);
  }
  report.iterations = it;
  report.relative_residual = static_cast<double>((b - A * x).norm() / bnorm);
  report.status = status ? *status : stop.final_status(x);
  report.wall_ms = clock.elapsed_ms();
  return report;
}

/// Right-preconditioned BiCGStab with the same stopping rules as cg.
/// Breakdown (rho or omega vanishing) is reported as SolveStatus::Breakdown,
/// distinct from running out of iterations.
template <typename Scalar>
SolveReport bicgstab(const SparseMatrix<Scalar>& A, const VectorX<Scalar>& b, VectorX<Scalar>& x,
                     const SolveOptions& options = {}, const IterationObserver<Scalar>& observe = {}) {
  detail::Stopwatch clock;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = VectorX<Scalar>::Zero(n);
  SolveReport report;
  const Scalar bnorm = b.norm();
  if (bnorm == Scalar(0)) {
    x.setZero();
    report.wall_ms = clock.elapsed_ms();
    return report;
  }
  const detail::PreconditionerApply<Scalar> prec(A, options.preconditioner);
  const int maxit = detail::iteration_limit(options, n);
  detail::StopTest<Scalar> stop(A, b, options.rtol);
  using Verdict = typename detail::StopTest<Scalar>::Verdict;
  const Scalar tiny = std::numeric_limits<Scalar>::epsilon() * std::numeric_limits<Scalar>::epsilon();

  VectorX<Scalar> r = b - A * x;
  VectorX<Scalar> r_hat = r;
  VectorX<Scalar> p = VectorX<Scalar>::Zero(n), v = VectorX<Scalar>::Zero(n);
  VectorX<Scalar> s(n), t(n), y(n), zz(n), r_true(n);
  Scalar rho = 1, alpha = 1, omega = 1;
  int it = 0;
  std::optional<SolveStatus> status;
  auto restart = [&] {
    r_hat = r;
    p.setZero();
    v.setZero();
    rho = alpha = omega = 1;
  };
  while (!status) {
    if (stop.due(it, r.norm(), x)) {
      const Verdict verdict = stop.check(x, r_true);
      if (verdict == Verdict::Converged) status = SolveStatus::Converged;
      if (verdict == Verdict::Stagnated) status = SolveStatus::RoundoffLimited;
      if (status) break;
      if (verdict == Verdict::Restart) {
        r = r_true;
        restart();
      }
    }
    if (it >= maxit) break;
    const Scalar rho_next = r_hat.dot(r);
    if (std::abs(rho_next) <= tiny * r_hat.norm() * r.norm()) {
      // one fresh shadow residual before giving up
      restart();
      if (r.norm() == Scalar(0)) {
        status = SolveStatus::Breakdown;
        break;
      }
      continue;
    }
    const Scalar beta = (rho_next / rho) * (alpha / omega);
    rho = rho_next;
    p = r + beta * (p - omega * v);
    prec.apply(p, y);
    v.noalias() = A * y;
    const Scalar rv = r_hat.dot(v);
    if (std::abs(rv) <= tiny * r_hat.norm() * v.norm()) {
      status = SolveStatus::Breakdown;
      break;
    }
    alpha = rho / rv;
    s = r - alpha * v;
    if (s.norm() <= stop.target()) {
      x.noalias() += alpha * y;
      r = s;
      ++it;
      if (observe) observe(it, x);
      continue;
    }
    prec.apply(s, zz);
    t.noalias() = A * zz;
    const Scalar tt = t.dot(t);
    if (tt == Scalar(0)) {
      status = SolveStatus::Breakdown;
      break;
    }
    omega = t.dot(s) / tt;
    x.noalias() += alpha * y + omega * zz;
    r = s - omega * t;
    ++it;
    if (observe) observe(it, x);
    if (omega == Scalar(0)) {
      status = SolveStatus::Breakdown;
      break;
    }
  }
  report.iterations = it;
  report.relative_residual = static_cast<double>((b - A * x).norm() / bnorm);
  report.status = status ? *status : stop.final_status(x);
  report.wall_ms = clock.elapsed_ms();
  return report;
}

/// Dense LU solve with partial pivoting for small systems (n <= 64).
template <typename Scalar>
VectorX<Scalar> dense_solve(const MatrixX<Scalar>& A, const VectorX<Scalar>& b) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw std::invalid_argument("dense_solve: dimension mismatch");
  if (A.rows() > 64) throw std::invalid_argument("dense_solve: limited to n <= 64");
  Eigen::PartialPivLU<MatrixX<Scalar>> lu(A);
  const auto& U = lu.matrixLU();
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    if (std::abs(U(i, i)) < Scalar(1e-14)) {
      throw SingularMatrixError("dense_solve: pivot " + std::to_string(static_cast<double>(std::abs(U(i, i)))) +
                                " below 1e-14 at column " + std::to_string(i));
    }
  }
  return lu.solve(b);
}

/// max |A - A^T| / max |A|; zero for the empty matrix.
template <typename Scalar>
double relative_asymmetry(const SparseMatrix<Scalar>& A) {
  SparseMatrix<Scalar> At = A.transpose();
  SparseMatrix<Scalar> D = A - At;
  double dmax = 0, amax = 0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (typename SparseMatrix<Scalar>::InnerIterator it(D, k); it; ++it)
      dmax = std::max(dmax, static_cast<double>(std::abs(it.value())));
  for (int k = 0; k < A.outerSize(); ++k)
    for (typename SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it)
      amax = std::max(amax, static_cast<double>(std::abs(it.value())));
  return amax > 0 ? dmax / amax : 0.0;
}

/// max over random pairs of |<Ax,y> - <x,Ay>| / (||A||_max ||x|| ||y||).
template <typename Scalar>
double transpose_defect(const SparseMatrix<Scalar>& A, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double amax = 0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (typename SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it)
      amax = std::max(amax, static_cast<double>(std::abs(it.value())));
  double worst = 0;
  VectorX<Scalar> x(A.cols()), y(A.rows());
  for (int t = 0; t < trials; ++t) {
    for (auto& v : x) v = Scalar(u(rng));
    for (auto& v : y) v = Scalar(u(rng));
    const double lhs = static_cast<double>((A * x).dot(y));
    const double rhs = static_cast<double>(x.dot(A * y));
    const double scale = amax * static_cast<double>(x.norm() * y.norm());
    if (scale > 0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

/// Ritz values (ascending) of a symmetric operator after `steps` Lanczos
/// iterations with full reorthogonalisation, started from a seeded random
/// vector. `apply(v)` must return the operator applied to v.
template <typename Scalar, typename Apply>
std::vector<double> lanczos_ritz_values(Apply&& apply, Eigen::Index n, int steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int m = static_cast<int>(std::min<Eigen::Index>(steps, n));
  MatrixX<Scalar> Q(n, m);
  std::vector<double> alpha, beta;
  VectorX<Scalar> q(n);
  for (auto& v : q) v = Scalar(u(rng));
  q.normalize();
  for (int j = 0; j < m; ++j) {
    Q.col(j) = q;
    VectorX<Scalar> w = apply(q);
    const Scalar a = q.dot(w);
    alpha.push_back(static_cast<double>(a));
    for (int pass = 0; pass < 2; ++pass) {
      const VectorX<Scalar> coeffs = Q.leftCols(j + 1).transpose() * w;
      w -= Q.leftCols(j + 1) * coeffs;
    }
    const Scalar b = w.norm();
    if (j + 1 == m || b <= Scalar(1e-14)) break;
    beta.push_back(static_cast<double>(b));
    q = w / b;
  }
  const int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().data(), eig.eigenvalues().data() + k};
}

/// Coordinate text dump, one `i j value` line per stored entry.
template <typename Scalar>
void write_coordinate(std::ostream& os, const SparseMatrix<Scalar>& A) {
  for (int k = 0; k < A.outerSize(); ++k) {
    for (typename SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << std::setprecision(17) << static_cast<double>(it.value()) << '\n';
    }
  }
}

template <typename Scalar>
SparseMatrix<Scalar> read_coordinate(std::istream& is, int rows, int cols) {
  std::vector<Triplet<Scalar>> t;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int i, j;
    double v;
    if (!(ss >> i >> j >> v)) throw ParseError("expected `i j value`", lineno);
    t.emplace_back(i, j, Scalar(v));
  }
  return from_triplets<Scalar>(rows, cols, t);
}

}  // namespace mslab
