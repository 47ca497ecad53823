#pragma once

#include <rescut/types.hpp>

namespace rescut {

/// Checks the CSR invariants: compressed storage, non-decreasing row
/// pointers, strictly increasing in-range column indices per row, finite
/// values. Throws std::invalid_argument naming the first violation.
void validate_csr(const CsrMatrix& A);

// ---------------------------------------------------------------------------
// Instrumented vector kernels. Every call bumps the corresponding counter;
// pass OpCounters::discard() when the cost should not be recorded.
// ---------------------------------------------------------------------------

Real dot(const Vector& x, const Vector& y, OpCounters& c = OpCounters::discard());
Real norm2(const Vector& x, OpCounters& c = OpCounters::discard());

/// y_out = a*x + y
Vector axpy(Real a, const Vector& x, const Vector& y, OpCounters& c = OpCounters::discard());
/// y += a*x
void axpy_inplace(Real a, const Vector& x, Vector& y, OpCounters& c = OpCounters::discard());
Vector scale(Real a, const Vector& x, OpCounters& c = OpCounters::discard());

/// y = A*x. A must be compressed and square-conformal with x.
void matvec_into(const CsrMatrix& A, const Vector& x, Vector& y,
                 OpCounters& c = OpCounters::discard());
Vector matvec(const CsrMatrix& A, const Vector& x, OpCounters& c = OpCounters::discard());

// ---------------------------------------------------------------------------
// Structural operations
// ---------------------------------------------------------------------------

CsrMatrix transpose(const CsrMatrix& A);

/// (A + A^T)/2 in canonical CSR. The result is entrywise exactly symmetric.
CsrMatrix symmetrize(const CsrMatrix& A);

/// True iff A equals its transpose entrywise exactly.
bool is_symmetric_exact(const CsrMatrix& A);

/// Strict lower / diagonal / strict upper partition of a square matrix.
/// lower + diag + upper reassembles the source entrywise.
struct TriangularSplit {
  CsrMatrix lower;
  Vector diag;
  CsrMatrix upper;
  /// Set when some diagonal entry is structurally missing or stored as zero;
  /// relaxation sweeps cannot use such a split.
  bool zero_diagonal = false;
};

TriangularSplit triangular_split(const CsrMatrix& A);

/// Frobenius norm, used to scale debug drift checks.
Real frobenius_norm(const CsrMatrix& A);

}  // namespace rescut
