#pragma once

#include "pdip/types.hpp"

namespace pdip {

/// Orthonormal basis of null(A^T) for an (n x q) matrix A, computed from a
/// full QR factorization of A with column pivoting. Rank is decided with the
/// relative tolerance 1e-11 * max|pivot|; this tolerance matters because
/// terminal classification of degenerate problems is rank-sensitive.
///
/// Returns an n x (n - rank(A)) matrix W with W^T W = I and A^T W = 0.
/// For A = 0 (or q = 0) the result is the n x n identity.
Matrix nullspace_basis(const Matrix& A);

struct SpdSolveResult {
  Vector x;
  double tau = 0.0;  ///< diagonal shift that was needed (0 for SPD input)
  int retries = 0;
};

/// Solves M x = b by Cholesky factorization for symmetric M. If the
/// factorization fails, retries with M + tau*I, tau starting at
/// 1e-8 * max(1, trace(M)/dim) and growing tenfold up to 1, and reports the
/// shift used. Throws FactorizationFailure if no shift in that range works.
SpdSolveResult spd_solve(const Matrix& M, const Vector& b);

}  // namespace pdip
