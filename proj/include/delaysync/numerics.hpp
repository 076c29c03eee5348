#pragma once

// Dense linear-algebra substrate: tolerance-aware rank, kernel and image
// bases, eigenvalues, PBH tests, and Riccati-based stabilizing gains.

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "delaysync/errors.hpp"

namespace delaysync {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Relative singular-value threshold used for every rank decision.
struct RankTolerance {
  double relative_epsilon = 1e-9;

  RankTolerance() = default;
  explicit RankTolerance(double eps) : relative_epsilon(eps) {
    if (!(eps > 0.0 && eps < 1.0)) {
      std::ostringstream os;
      os << "rank tolerance must lie in (0, 1), got " << eps;
      throw ConfigError(os.str());
    }
  }
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& M) {
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      if (!std::isfinite(std::abs(M(i, j)))) return false;
    }
  }
  return true;
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& M,
                    const std::string& name) {
  if (!all_finite(M)) {
    throw DimensionError("matrix '" + name + "' has non-finite entries");
  }
}

inline void require_square(Eigen::Index rows, Eigen::Index cols,
                           const std::string& what) {
  if (rows != cols) {
    std::ostringstream os;
    os << what << ": expected a square matrix, got " << rows << "x" << cols;
    throw DimensionError(os.str());
  }
}

namespace internal {

template <typename Scalar>
using DynMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Count of singular values above eps * sigma_max.
inline int count_above(const Eigen::VectorXd& sv, double eps) {
  if (sv.size() == 0) return 0;
  const double smax = sv.maxCoeff();
  if (!(smax > 0.0)) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > eps * smax) ++r;
  }
  return r;
}

}  // namespace internal

template <typename Derived>
int rank_of(const Eigen::MatrixBase<Derived>& M, RankTolerance tol = {}) {
  using Scalar = typename Derived::Scalar;
  if (M.size() == 0) return 0;
  const internal::DynMat<Scalar> X = M;
  Eigen::JacobiSVD<internal::DynMat<Scalar>> svd(X);
  return internal::count_above(svd.singularValues(), tol.relative_epsilon);
}

template <typename Derived>
double sigma_max(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  if (M.size() == 0) return 0.0;
  const internal::DynMat<Scalar> X = M;
  Eigen::JacobiSVD<internal::DynMat<Scalar>> svd(X);
  return svd.singularValues()(0);
}

template <typename Derived>
double sigma_min(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  if (M.size() == 0) return 0.0;
  const internal::DynMat<Scalar> X = M;
  Eigen::JacobiSVD<internal::DynMat<Scalar>> svd(X);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

/// Orthonormal basis of the null space of M, as columns.
inline Mat kernel_basis(const Mat& M, RankTolerance tol = {}) {
  const Eigen::Index cols = M.cols();
  if (cols == 0) return Mat(0, 0);
  if (M.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const int r = internal::count_above(svd.singularValues(),
                                      tol.relative_epsilon);
  return svd.matrixV().rightCols(cols - r);
}

/// Orthonormal basis of the column space of M.
inline Mat image_basis(const Mat& M, RankTolerance tol = {}) {
  const Eigen::Index rows = M.rows();
  if (M.cols() == 0 || rows == 0) return Mat(rows, 0);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU);
  const int r = internal::count_above(svd.singularValues(),
                                      tol.relative_epsilon);
  return svd.matrixU().leftCols(r);
}

/// Orthonormal basis of the orthogonal complement of the column space of M.
inline Mat cokernel_basis(const Mat& M, RankTolerance tol = {}) {
  const Eigen::Index rows = M.rows();
  if (rows == 0) return Mat(0, 0);
  if (M.cols() == 0) return Mat::Identity(rows, rows);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU);
  const int r = internal::count_above(svd.singularValues(),
                                      tol.relative_epsilon);
  return svd.matrixU().rightCols(rows - r);
}

/// Minimum-norm least-squares solution of M X = Y.
inline Mat lstsq(const Mat& M, const Mat& Y, RankTolerance tol = {}) {
  if (M.rows() != Y.rows()) {
    throw DimensionError("lstsq: row mismatch");
  }
  if (M.cols() == 0 || Y.cols() == 0) return Mat::Zero(M.cols(), Y.cols());
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(tol.relative_epsilon);
  return svd.solve(Y);
}

inline CVec eigenvalues(const Mat& M) {
  require_square(M.rows(), M.cols(), "eigenvalues");
  if (M.rows() == 0) return CVec(0);
  Eigen::EigenSolver<Mat> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("eigenvalue iteration did not converge");
  }
  return es.eigenvalues();
}

inline CVec eigenvalues(const CMat& M) {
  require_square(M.rows(), M.cols(), "eigenvalues");
  if (M.rows() == 0) return CVec(0);
  Eigen::ComplexEigenSolver<CMat> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("eigenvalue iteration did not converge");
  }
  return es.eigenvalues();
}

template <typename MatrixType>
double spectral_radius(const MatrixType& M) {
  const CVec ev = eigenvalues(M);
  double r = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) r = std::max(r, std::abs(ev(i)));
  return r;
}

/// Spectral radius with each cluster of eigenvalues (single linkage within
/// `spread`) replaced by its mean. A k x k Jordan block comes back from a
/// dense solver smeared over a circle of radius ~eps^(1/k); the cluster mean
/// stays accurate to rounding.
template <typename MatrixType>
double clustered_spectral_radius(const MatrixType& M, double spread = 1e-4) {
  const CVec ev = eigenvalues(M);
  const auto n = ev.size();
  std::vector<Eigen::Index> group(n);
  for (Eigen::Index i = 0; i < n; ++i) group[i] = i;
  const auto find = [&](Eigen::Index i) {
    while (group[i] != i) i = group[i] = group[group[i]];
    return i;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(ev(i) - ev(j)) <= spread) group[find(i)] = find(j);
    }
  }
  std::vector<Complex> sum(n, Complex(0.0));
  std::vector<int> count(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    sum[find(i)] += ev(i);
    ++count[find(i)];
  }
  double r = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (count[i] > 0) r = std::max(r, std::abs(sum[i] / static_cast<double>(count[i])));
  }
  return r;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// PBH test. A mode z is checked when |z| >= 1 - unit_circle_tol.
inline bool pbh_stabilizable(const Mat& A, const Mat& B, RankTolerance tol = {},
                             double unit_circle_tol = 1e-9) {
  require_square(A.rows(), A.cols(), "stabilizability test");
  if (B.rows() != A.rows()) throw DimensionError("stabilizability test: B rows");
  const Eigen::Index n = A.rows();
  const CVec ev = eigenvalues(A);
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    const Complex z = ev(k);
    if (std::abs(z) < 1.0 - unit_circle_tol) continue;
    CMat pencil(n, n + B.cols());
    pencil.leftCols(n) = z * CMat::Identity(n, n) - A.cast<Complex>();
    pencil.rightCols(B.cols()) = B.cast<Complex>();
    if (rank_of(pencil, tol) < n) return false;
  }
  return true;
}

inline bool pbh_detectable(const Mat& A, const Mat& C, RankTolerance tol = {},
                           double unit_circle_tol = 1e-9) {
  if (C.cols() != A.cols()) throw DimensionError("detectability test: C cols");
  return pbh_stabilizable(A.transpose(), C.transpose(), tol, unit_circle_tol);
}

struct RiccatiSolution {
  Mat P;
  int iterations = 0;
  double residual = 0.0;
};

/// Stabilizing solution of
///   P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q
/// by the structure-preserving doubling iteration. Requires (A, B)
/// stabilizable and (A, Q^{1/2}) detectable.
inline RiccatiSolution solve_dare(const Mat& A, const Mat& B, const Mat& Q,
                                  const Mat& R, double residual_tol = 1e-10,
                                  int max_iterations = 200) {
  const Eigen::Index n = A.rows();
  require_square(n, A.cols(), "solve_dare A");
  if (B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw DimensionError("solve_dare: inconsistent dimensions");
  }
  const Mat I = Mat::Identity(n, n);
  Mat Ak = A;
  Mat Gk = B * R.ldlt().solve(B.transpose());
  Mat Hk = Q;

  RiccatiSolution out;
  bool converged = false;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::PartialPivLU<Mat> W(I + Gk * Hk);
    const Mat WinvA = W.solve(Ak);
    const Mat WinvG = W.solve(Gk);
    const Mat H_next = Hk + Ak.transpose() * Hk * WinvA;
    const Mat G_next = Gk + Ak * WinvG * Ak.transpose();
    const Mat A_next = Ak * WinvA;
    const double change = (H_next - Hk).norm();
    Hk = 0.5 * (H_next + H_next.transpose());
    Gk = 0.5 * (G_next + G_next.transpose());
    Ak = A_next;
    out.iterations = it;
    if (!all_finite(Hk)) break;
    if (change <= 1e-14 * std::max(1.0, Hk.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("Riccati doubling iteration did not converge in " +
                           std::to_string(max_iterations) + " passes");
  }
  const Mat& P = Hk;
  const Mat BtP = B.transpose() * P;
  const Mat residual = A.transpose() * P * A - P -
                       (BtP * A).transpose() *
                           (R + BtP * B).ldlt().solve(BtP * A) +
                       Q;
  out.P = P;
  out.residual = residual.norm() / std::max(1.0, P.norm());
  if (!(out.residual <= residual_tol)) {
    std::ostringstream os;
    os << "Riccati residual " << out.residual << " exceeds " << residual_tol;
    throw ConvergenceError(os.str());
  }
  return out;
}

/// Gain K with A - B K Schur stable, from the identity-weighted discrete
/// Riccati equation: K = (I + B'PB)^{-1} B'PA.
inline Mat design_stabilizing_gain(const Mat& A, const Mat& B,
                                   RankTolerance tol = {}) {
  require_square(A.rows(), A.cols(), "design_stabilizing_gain");
  if (B.rows() != A.rows()) {
    throw DimensionError("design_stabilizing_gain: B rows");
  }
  require_finite(A, "A");
  require_finite(B, "B");
  if (!pbh_stabilizable(A, B, tol)) {
    throw ModelAssumptionError("stabilizable",
                               "gain design: pair (A, B) is not stabilizable");
  }
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (m == 0) {
    // Nothing to design; A must already be Schur.
    if (spectral_radius(A) >= 1.0) {
      throw ModelAssumptionError("stabilizable", "no inputs and A not Schur");
    }
    return Mat(0, n);
  }
  const Mat Rw = Mat::Identity(m, m);
  const RiccatiSolution sol = solve_dare(A, B, Mat::Identity(n, n), Rw);
  const Mat BtP = B.transpose() * sol.P;
  Mat K = (Rw + BtP * B).ldlt().solve(BtP * A);
  const double rho = spectral_radius(Mat(A - B * K));
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "designed gain is not stabilizing (spectral radius " << rho << ")";
    throw ConvergenceError(os.str());
  }
  return K;
}

}  // namespace delaysync
