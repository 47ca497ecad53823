#pragma once

#include <rescut/types.hpp>

namespace rescut::oracle {

// Dense reference routines for tests. Everything here works on explicit
// dense matrices and never touches the sparse kernels or the iterative
// solvers, so test comparisons stay independent of the code under test.
// Sizes are capped at 512 to keep accidental misuse on large systems loud.

DenseMatrix to_dense(const CsrMatrix& A);

// LU with partial pivoting. Throws if a pivot falls below
// 1e-14 * max|A| (reported with the failing elimination step).
Vector dense_solve(const DenseMatrix& A, const Vector& b);

// Arnoldi with classical Gram-Schmidt applied twice. Returns an
// orthonormal basis of span{b, Ab, ..., A^(m-1) b} as columns; stops
// early (fewer columns) if the subspace becomes invariant.
DenseMatrix krylov_basis(const DenseMatrix& A, const Vector& b, int m);

// Minimal residual norms over affine corrections from growing Krylov
// spaces: entry k is min over y in K_k(A, b) of ||b - A y||, entry 0 is
// ||b||. Length m+1; once the space stops growing the value repeats.
Vector full_minres_oracle(const DenseMatrix& A, const Vector& b, int m);

// Least squares via SVD with relative truncation threshold 1e-12.
Vector dense_least_squares(const DenseMatrix& A, const Vector& b);

}  // namespace rescut::oracle
