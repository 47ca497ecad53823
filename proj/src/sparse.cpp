#include <rescut/sparse.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rescut {

OpCounters& OpCounters::discard() {
  thread_local OpCounters sink;
  return sink;
}

namespace {

void require_same_size(const Vector& x, const Vector& y, const char* op) {
  if (x.size() != y.size()) {
    std::ostringstream msg;
    msg << op << ": dimension mismatch (" << x.size() << " vs " << y.size() << ")";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

void validate_csr(const CsrMatrix& A) {
  if (!A.isCompressed()) throw std::invalid_argument("csr: matrix is not compressed");
  const Index n = static_cast<Index>(A.rows());
  const Index cols = static_cast<Index>(A.cols());
  const Index* rp = A.outerIndexPtr();
  const Index* ci = A.innerIndexPtr();
  const Real* v = A.valuePtr();
  if (rp[0] != 0) throw std::invalid_argument("csr: row_ptr[0] != 0");
  if (rp[n] != A.nonZeros()) throw std::invalid_argument("csr: row_ptr[n] != nnz");
  for (Index i = 0; i < n; ++i) {
    if (rp[i + 1] < rp[i]) {
      std::ostringstream msg;
      msg << "csr: row_ptr decreases at row " << i;
      throw std::invalid_argument(msg.str());
    }
    for (Index k = rp[i]; k < rp[i + 1]; ++k) {
      if (ci[k] < 0 || ci[k] >= cols) {
        std::ostringstream msg;
        msg << "csr: column index out of range at row " << i;
        throw std::invalid_argument(msg.str());
      }
      if (k > rp[i] && ci[k] <= ci[k - 1]) {
        std::ostringstream msg;
        msg << "csr: column indices not strictly increasing in row " << i;
        throw std::invalid_argument(msg.str());
      }
      if (!std::isfinite(v[k])) {
        std::ostringstream msg;
        msg << "csr: non-finite value at row " << i;
        throw std::invalid_argument(msg.str());
      }
    }
  }
}

Real dot(const Vector& x, const Vector& y, OpCounters& c) {
  require_same_size(x, y, "dot");
  ++c.dot_count;
  return x.dot(y);
}

Real norm2(const Vector& x, OpCounters& c) {
  ++c.dot_count;
  return x.norm();
}

Vector axpy(Real a, const Vector& x, const Vector& y, OpCounters& c) {
  require_same_size(x, y, "axpy");
  ++c.axpy_count;
  return a * x + y;
}

void axpy_inplace(Real a, const Vector& x, Vector& y, OpCounters& c) {
  require_same_size(x, y, "axpy");
  ++c.axpy_count;
  y += a * x;
}

Vector scale(Real a, const Vector& x, OpCounters& c) {
  ++c.axpy_count;
  return a * x;
}

void matvec_into(const CsrMatrix& A, const Vector& x, Vector& y, OpCounters& c) {
  if (A.cols() != x.size()) {
    std::ostringstream msg;
    msg << "matvec: dimension mismatch (matrix " << A.rows() << "x" << A.cols()
        << ", vector " << x.size() << ")";
    throw std::invalid_argument(msg.str());
  }
  const Index n = static_cast<Index>(A.rows());
  y.resize(n);
  const Index* rp = A.outerIndexPtr();
  const Index* ci = A.innerIndexPtr();
  const Real* v = A.valuePtr();
  for (Index i = 0; i < n; ++i) {
    Real s = 0;
    for (Index k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * x[ci[k]];
    y[i] = s;
  }
  ++c.matvec_count;
}

Vector matvec(const CsrMatrix& A, const Vector& x, OpCounters& c) {
  Vector y;
  matvec_into(A, x, y, c);
  return y;
}

CsrMatrix transpose(const CsrMatrix& A) {
  CsrMatrix t = A.transpose();
  t.makeCompressed();
  return t;
}

CsrMatrix symmetrize(const CsrMatrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("symmetrize: matrix not square");
  CsrMatrix at = transpose(A);
  CsrMatrix s = Real(0.5) * (A + at);
  s.makeCompressed();
  return s;
}

bool is_symmetric_exact(const CsrMatrix& A) {
  if (A.rows() != A.cols()) return false;
  CsrMatrix at = transpose(A);
  if (at.nonZeros() != A.nonZeros()) return false;
  const Index n = static_cast<Index>(A.rows());
  for (Index i = 0; i <= n; ++i)
    if (A.outerIndexPtr()[i] != at.outerIndexPtr()[i]) return false;
  for (Index k = 0; k < A.nonZeros(); ++k) {
    if (A.innerIndexPtr()[k] != at.innerIndexPtr()[k]) return false;
    if (A.valuePtr()[k] != at.valuePtr()[k]) return false;
  }
  return true;
}

TriangularSplit triangular_split(const CsrMatrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("triangular_split: matrix not square");
  const Index n = static_cast<Index>(A.rows());
  TriangularSplit out;
  out.diag = Vector::Zero(n);
  out.lower.resize(n, n);
  out.upper.resize(n, n);

  Eigen::VectorXi lower_counts = Eigen::VectorXi::Zero(n);
  Eigen::VectorXi upper_counts = Eigen::VectorXi::Zero(n);
  const Index* rp = A.outerIndexPtr();
  const Index* ci = A.innerIndexPtr();
  for (Index i = 0; i < n; ++i) {
    for (Index k = rp[i]; k < rp[i + 1]; ++k) {
      if (ci[k] < i) ++lower_counts[i];
      else if (ci[k] > i) ++upper_counts[i];
    }
  }
  out.lower.reserve(lower_counts);
  out.upper.reserve(upper_counts);

  const Real* v = A.valuePtr();
  for (Index i = 0; i < n; ++i) {
    for (Index k = rp[i]; k < rp[i + 1]; ++k) {
      const Index j = ci[k];
      if (j < i) out.lower.insert(i, j) = v[k];
      else if (j > i) out.upper.insert(i, j) = v[k];
      else out.diag[i] = v[k];
    }
  }
  out.lower.makeCompressed();
  out.upper.makeCompressed();
  for (Index i = 0; i < n; ++i) {
    if (out.diag[i] == Real(0)) {
      out.zero_diagonal = true;
      break;
    }
  }
  return out;
}

Real frobenius_norm(const CsrMatrix& A) {
  Real s = 0;
  const Real* v = A.valuePtr();
  for (Index k = 0; k < A.nonZeros(); ++k) s += v[k] * v[k];
  return std::sqrt(s);
}

}  // namespace rescut
