#include <rescut/generators.hpp>

#include <rescut/sparse.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rescut {

namespace {

// n^3 rows and up to 7 entries a row must stay within 32-bit indexing.
constexpr int kMaxGridN = 600;

void check_n(int n) {
  if (n < 3) throw std::invalid_argument("GridSpec.n must be >= 3");
  if (n > kMaxGridN)
    throw std::invalid_argument("GridSpec.n above " + std::to_string(kMaxGridN) +
                                " would overflow 32-bit index arithmetic");
}

Eigen::VectorXi stencil_counts(int n) {
  const Index dim = static_cast<Index>(n) * n * n;
  Eigen::VectorXi counts(dim);
  Index row = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++row)
        counts[row] = 7 - (i == 0) - (i == n - 1) - (j == 0) - (j == n - 1) -
                      (k == 0) - (k == n - 1);
  return counts;
}

std::vector<Real> cell_widths(int n, Real stretch) {
  std::vector<Real> w(static_cast<std::size_t>(n));
  if (stretch == 1) {
    for (auto& wi : w) wi = Real(1) / n;
  } else {
    // geometric partition of [0,1]: w_i = w_0 * stretch^i
    const Real w0 = (stretch - 1) / (std::pow(stretch, n) - 1);
    Real cur = w0;
    for (int i = 0; i < n; ++i) {
      w[static_cast<std::size_t>(i)] = cur;
      cur *= stretch;
    }
  }
  return w;
}

std::vector<Real> cell_centers(const std::vector<Real>& w) {
  std::vector<Real> c(w.size());
  Real left = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    c[i] = left + w[i] / 2;
    left += w[i];
  }
  return c;
}

}  // namespace

ConvDiffDims conv_diff_dimensions(int n) {
  if (n < 3) throw std::invalid_argument("GridSpec.n must be >= 3");
  const std::int64_t nn = n;
  ConvDiffDims d;
  d.rows = nn * nn * nn;
  // one diagonal per row plus two directed links per interior face pair,
  // n^2 (n-1) pairs per axis, three axes
  d.nnz = d.rows + 6 * nn * nn * (nn - 1);
  return d;
}

std::pair<CsrMatrix, Vector> gen_convection_diffusion(const GridSpec& spec) {
  check_n(spec.n);
  if (!std::isfinite(spec.convection))
    throw std::invalid_argument("GridSpec.convection must be finite");
  const int n = spec.n;
  const Index dim = static_cast<Index>(n) * n * n;
  const Real h = Real(1) / (n + 1);
  const Real inv_h2 = Real(1) / (h * h);
  const Real diag = 6 * inv_h2;
  const Real off = -inv_h2;
  const Real conv = spec.convection / (2 * h);
  const Real xm = off + conv;
  const Real xp = off - conv;

  CsrMatrix A(dim, dim);
  A.reserve(stencil_counts(n));
  const Index sx = 1;
  const Index sy = n;
  const Index sz = static_cast<Index>(n) * n;
  Index row = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++row) {
        if (k > 0) A.insert(row, row - sz) = off;
        if (j > 0) A.insert(row, row - sy) = off;
        if (i > 0) A.insert(row, row - sx) = xm;
        A.insert(row, row) = diag;
        if (i < n - 1) A.insert(row, row + sx) = xp;
        if (j < n - 1) A.insert(row, row + sy) = off;
        if (k < n - 1) A.insert(row, row + sz) = off;
      }
  A.makeCompressed();
  Vector b = rhs_unit_solution(A);
  return {std::move(A), std::move(b)};
}

std::pair<CsrMatrix, Vector> gen_poisson_neumann(const GridSpec& spec) {
  check_n(spec.n);
  if (!(spec.stretch >= 1) || !std::isfinite(spec.stretch))
    throw std::invalid_argument("GridSpec.stretch must be >= 1");
  const int n = spec.n;
  const Index dim = static_cast<Index>(n) * n * n;
  const std::vector<Real> w = cell_widths(n, spec.stretch);
  if (!(w[0] > 0))
    throw std::invalid_argument("GridSpec.stretch too large: smallest cell width underflows");
  // distance between neighboring cell centers
  std::vector<Real> d(static_cast<std::size_t>(n) - 1);
  for (int i = 0; i + 1 < n; ++i)
    d[static_cast<std::size_t>(i)] = (w[static_cast<std::size_t>(i)] + w[static_cast<std::size_t>(i) + 1]) / 2;

  CsrMatrix A(dim, dim);
  A.reserve(stencil_counts(n));
  const Index sx = 1;
  const Index sy = n;
  const Index sz = static_cast<Index>(n) * n;
  Index row = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++row) {
        const Real wi = w[static_cast<std::size_t>(i)];
        const Real wj = w[static_cast<std::size_t>(j)];
        const Real wk = w[static_cast<std::size_t>(k)];
        // face transmissibility = face area / center distance; a boundary
        // face carries no flux and simply contributes nothing
        const Real tzm = k > 0 ? wi * wj / d[static_cast<std::size_t>(k) - 1] : Real(0);
        const Real tym = j > 0 ? wi * wk / d[static_cast<std::size_t>(j) - 1] : Real(0);
        const Real txm = i > 0 ? wj * wk / d[static_cast<std::size_t>(i) - 1] : Real(0);
        const Real txp = i < n - 1 ? wj * wk / d[static_cast<std::size_t>(i)] : Real(0);
        const Real typ = j < n - 1 ? wi * wk / d[static_cast<std::size_t>(j)] : Real(0);
        const Real tzp = k < n - 1 ? wi * wj / d[static_cast<std::size_t>(k)] : Real(0);
        if (k > 0) A.insert(row, row - sz) = -tzm;
        if (j > 0) A.insert(row, row - sy) = -tym;
        if (i > 0) A.insert(row, row - sx) = -txm;
        A.insert(row, row) = tzm + tym + txm + txp + typ + tzp;
        if (i < n - 1) A.insert(row, row + sx) = -txp;
        if (j < n - 1) A.insert(row, row + sy) = -typ;
        if (k < n - 1) A.insert(row, row + sz) = -tzp;
      }
  A.makeCompressed();
  // remove the constant null space while keeping the matrix symmetric
  A.coeffRef(0, 0) *= 2;
  Vector u = poisson_manufactured_solution(spec);
  Vector b = matvec(A, u);
  return {std::move(A), std::move(b)};
}

Vector poisson_manufactured_solution(const GridSpec& spec) {
  check_n(spec.n);
  const int n = spec.n;
  const std::vector<Real> c = cell_centers(cell_widths(n, spec.stretch));
  Vector u(static_cast<Index>(n) * n * n);
  Index row = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++row)
        u[row] = c[static_cast<std::size_t>(i)] + c[static_cast<std::size_t>(j)] +
                 c[static_cast<std::size_t>(k)];
  return u;
}

Vector rhs_unit_solution(const CsrMatrix& A) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("rhs_unit_solution: matrix not square");
  return matvec(A, Vector::Ones(A.cols()));
}

}  // namespace rescut
