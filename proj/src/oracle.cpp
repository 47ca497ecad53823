#include <rescut/oracle.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rescut::oracle {

namespace {

constexpr Index kMaxDim = 512;

void check_dim(Eigen::Index n, const char* who) {
  if (n > kMaxDim) {
    std::ostringstream msg;
    msg << who << ": dimension " << n << " exceeds the dense reference cap " << kMaxDim;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

DenseMatrix to_dense(const CsrMatrix& A) {
  check_dim(std::max(A.rows(), A.cols()), "to_dense");
  return DenseMatrix(A);
}

Vector dense_solve(const DenseMatrix& A, const Vector& b) {
  if (A.rows() != A.cols()) throw std::invalid_argument("dense_solve: matrix not square");
  if (A.rows() != b.size()) throw std::invalid_argument("dense_solve: size mismatch");
  check_dim(A.rows(), "dense_solve");
  const Eigen::Index n = A.rows();
  const Real scale = A.cwiseAbs().maxCoeff();
  if (scale == Real(0)) throw std::runtime_error("dense_solve: zero matrix");

  // Plain LU with partial pivoting, spelled out so the pivot check can
  // name the elimination step that failed.
  DenseMatrix m = A;
  Vector x = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    Real best = std::abs(m(k, k));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const Real cand = std::abs(m(i, k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (best < Real(1e-14) * scale) {
      std::ostringstream msg;
      msg << "dense_solve: pivot " << best << " at step " << k
          << " is below 1e-14 * max|A| = " << Real(1e-14) * scale;
      throw std::runtime_error(msg.str());
    }
    if (piv != k) {
      m.row(piv).swap(m.row(k));
      std::swap(x[piv], x[k]);
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const Real f = m(i, k) / m(k, k);
      m(i, k) = 0;
      if (f != Real(0)) {
        m.row(i).tail(n - k - 1) -= f * m.row(k).tail(n - k - 1);
        x[i] -= f * x[k];
      }
    }
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    Real s = x[i];
    for (Eigen::Index j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

DenseMatrix krylov_basis(const DenseMatrix& A, const Vector& b, int m) {
  if (A.rows() != A.cols()) throw std::invalid_argument("krylov_basis: matrix not square");
  if (A.rows() != b.size()) throw std::invalid_argument("krylov_basis: size mismatch");
  check_dim(A.rows(), "krylov_basis");
  const Eigen::Index n = A.rows();
  m = std::min<int>(m, static_cast<int>(n));

  DenseMatrix V(n, m);
  const Real bnorm = b.norm();
  if (bnorm == Real(0) || m == 0) return DenseMatrix(n, 0);
  V.col(0) = b / bnorm;
  int cols = 1;
  for (int j = 1; j < m; ++j) {
    Vector w = A * V.col(j - 1);
    // Classical Gram-Schmidt, twice, keeps the basis orthonormal to
    // machine precision without the sequential data flow of MGS.
    for (int pass = 0; pass < 2; ++pass) {
      Vector h = V.leftCols(cols).transpose() * w;
      w -= V.leftCols(cols) * h;
    }
    const Real wn = w.norm();
    if (wn <= Real(1e-12) * bnorm) break;  // invariant subspace reached
    V.col(cols) = w / wn;
    ++cols;
  }
  return V.leftCols(cols);
}

Vector full_minres_oracle(const DenseMatrix& A, const Vector& b, int m) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("full_minres_oracle: matrix not square");
  if (A.rows() != b.size()) throw std::invalid_argument("full_minres_oracle: size mismatch");
  check_dim(A.rows(), "full_minres_oracle");

  Vector out(m + 1);
  out[0] = b.norm();
  DenseMatrix V = krylov_basis(A, b, m);
  Real last = out[0];
  for (int k = 1; k <= m; ++k) {
    if (k <= V.cols()) {
      DenseMatrix AV = A * V.leftCols(k);
      Vector y = dense_least_squares(AV, b);
      last = (b - AV * y).norm();
    }
    out[k] = last;  // repeats once the space stops growing
  }
  return out;
}

Vector dense_least_squares(const DenseMatrix& A, const Vector& b) {
  if (A.rows() != b.size())
    throw std::invalid_argument("dense_least_squares: size mismatch");
  check_dim(std::max(A.rows(), A.cols()), "dense_least_squares");
  Eigen::JacobiSVD<DenseMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(Real(1e-12));
  return svd.solve(b);
}

}  // namespace rescut::oracle
