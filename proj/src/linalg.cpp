#include "pdip/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>

namespace pdip {

Matrix nullspace_basis(const Matrix& A) {
  const Index n = A.rows();
  if (A.cols() == 0 || A.norm() == 0.0) {
    return Matrix::Identity(n, n);
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  const double tol = 1e-11 * qr.maxPivot();
  Index rank = 0;
  const Index diag = std::min(A.rows(), A.cols());
  for (Index i = 0; i < diag; ++i) {
    if (std::abs(qr.matrixR()(i, i)) > tol) ++rank;
  }

  // Q's trailing columns are orthonormal and annihilated by A^T.
  Matrix q = qr.householderQ();
  return q.rightCols(n - rank);
}

SpdSolveResult spd_solve(const Matrix& M, const Vector& b) {
  SpdSolveResult out;
  const Index dim = M.rows();
  if (dim == 0) {
    out.x = Vector();
    return out;
  }

  Eigen::LLT<Matrix> llt(M);
  if (llt.info() == Eigen::Success) {
    out.x = llt.solve(b);
    return out;
  }

  double tau = 1e-8 * std::max(1.0, M.trace() / static_cast<double>(dim));
  while (tau <= 1.0) {
    ++out.retries;
    llt.compute(M + tau * Matrix::Identity(dim, dim));
    if (llt.info() == Eigen::Success) {
      out.x = llt.solve(b);
      out.tau = tau;
      return out;
    }
    tau *= 10.0;
  }
  throw FactorizationFailure("spd_solve: matrix indefinite after maximal shift");
}

}  // namespace pdip
