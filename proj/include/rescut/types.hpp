#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace rescut {

using Real = double;
using Index = int;

/// Dense column vector; the only vector representation the solvers use.
using Vector = Eigen::VectorXd;

/// Square sparse operator in compressed row storage. Row pointers, column
/// indices and values are reachable through outerIndexPtr(), innerIndexPtr()
/// and valuePtr() once the matrix is compressed.
using CsrMatrix = Eigen::SparseMatrix<Real, Eigen::RowMajor, Index>;

using DenseMatrix = Eigen::MatrixXd;

/// Operation tallies for one solver run. matvec/dot/axpy counts are bumped by
/// the instrumented kernels; peak_vectors tracks the largest number of
/// auxiliary length-n vectors the solver had alive at once (the solution,
/// right-hand side and residual are not counted).
struct OpCounters {
  std::int64_t matvec_count = 0;
  std::int64_t dot_count = 0;
  std::int64_t axpy_count = 0;
  int peak_vectors = 0;

  void note_alive(int nvec) {
    if (nvec > peak_vectors) peak_vectors = nvec;
  }

  /// Thread-local sink for calls whose cost should not be recorded
  /// (debug re-checks, test scaffolding).
  static OpCounters& discard();
};

struct TraceRow {
  int iteration = 0;
  Real residual_norm = 0;
  Real relative_residual = 0;
  std::int64_t cumulative_matvec = 0;
  Real elapsed_seconds = 0;
};

/// Per-iteration convergence history. Row 0 always records the initial
/// residual with relative_residual = 1.
struct ConvergenceTrace {
  std::vector<TraceRow> rows;

  bool empty() const { return rows.empty(); }
  const TraceRow& back() const { return rows.back(); }
};

}  // namespace rescut
