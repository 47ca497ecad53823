#pragma once

#include <rescut/solvers.hpp>
#include <rescut/sparse.hpp>
#include <rescut/types.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <utility>
#include <vector>

namespace rescut::testutil {

inline CsrMatrix from_triplets(Index rows, Index cols,
                               const std::vector<Eigen::Triplet<Real, Index>>& trips) {
  CsrMatrix A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

inline CsrMatrix identity_csr(Index n) {
  CsrMatrix A(n, n);
  A.setIdentity();
  A.makeCompressed();
  return A;
}

inline CsrMatrix dense_to_csr(const DenseMatrix& D) {
  std::vector<Eigen::Triplet<Real, Index>> trips;
  for (Index i = 0; i < D.rows(); ++i)
    for (Index j = 0; j < D.cols(); ++j)
      if (D(i, j) != 0) trips.emplace_back(i, j, D(i, j));
  return from_triplets(static_cast<Index>(D.rows()), static_cast<Index>(D.cols()), trips);
}

// Symmetric positive definite with spectrum roughly inside [2 - 1.4*spread,
// 2 + 1.4*spread]; spread = 1 keeps the condition number around 6, small
// enough that Krylov methods agree to many digits over a 15-step window.
inline DenseMatrix random_spd_dense(int n, std::mt19937& rng, Real spread = 1.0) {
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  DenseMatrix B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = u(rng);
  DenseMatrix S = (B + B.transpose()) * (Real(0.85) * spread / std::sqrt(Real(n)));
  return DenseMatrix::Identity(n, n) * 2.0 + S;
}

// Strictly diagonally dominant, generally nonsymmetric: sweeps and Krylov
// methods alike behave on these.
inline DenseMatrix random_diag_dominant_dense(int n, std::mt19937& rng) {
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  DenseMatrix B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = u(rng);
  for (int i = 0; i < n; ++i) {
    Real off = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += std::abs(B(i, j));
    B(i, i) = off + 1 + std::abs(B(i, i));
  }
  return B;
}

inline Vector random_vector(int n, std::mt19937& rng) {
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// ||b - A x|| / ||b||, computed with Eigen arithmetic only (no library
// kernels), so solver claims are checked from outside.
inline Real true_rel_residual(const CsrMatrix& A, const Vector& b, const Vector& x) {
  const Vector r = b - A * x;
  const Real bn = b.norm();
  return bn > 0 ? r.norm() / bn : r.norm();
}

// Captures every observer callback: iteration numbers plus copies of the
// iterate and the solver's recursive residual.
struct IterateLog {
  std::vector<int> iters;
  std::vector<Vector> xs;
  std::vector<Vector> rs;
};

inline Observer record(IterateLog& log) {
  return [&log](int it, const Vector& x, const Vector& r) {
    log.iters.push_back(it);
    log.xs.push_back(x);
    log.rs.push_back(r);
  };
}

// Replays a recorded grc run against a dense copy of the operator and
// measures how far each accepted step is from exact least-squares
// optimality. The window is rebuilt from iterate differences (phi) and
// residual differences (A phi); the search image comes from an
// independent dense product. A fresh minimization decides how many
// window images actually entered the solve, since near-dependent
// trailing vectors are dropped and carry no orthogonality claim.
struct StepOptimalityDefects {
  // max |r_next . img| / (||r_entering|| ||img||) over the search image
  // and the used window images
  Real optimality = 0;
  // max |A phi . img| / (||A phi|| ||img||) over the used window images
  Real orthogonality = 0;
};

inline StepOptimalityDefects replay_step_optimality(const DenseMatrix& D,
                                                    const IterateLog& log, int L,
                                                    PsiMode mode) {
  StepOptimalityDefects out;
  std::deque<std::pair<Vector, Vector>> win;
  for (std::size_t m = 0; m + 1 < log.xs.size(); ++m) {
    const Vector& r_m = log.rs[m];
    Vector psi;
    if (mode == PsiMode::Damped && !win.empty())
      psi = win.front().first - win.front().second + r_m;
    else
      psi = r_m;
    const Vector hpsi = D * psi;

    const Vector phi = log.xs[m + 1] - log.xs[m];
    if (phi.norm() == 0) continue;  // held position, nothing was applied
    const Vector hphi = log.rs[m] - log.rs[m + 1];
    const Vector& r_next = log.rs[m + 1];
    const Real prev_rn = r_m.norm();

    std::vector<const Vector*> images;
    images.reserve(win.size() + 1);
    images.push_back(&hpsi);
    for (const auto& pr : win) images.push_back(&pr.second);
    const MinimizeResult mr = minimize_residual(images, r_m);
    if (!mr.degenerate && prev_rn > 0) {
      const int used_win = std::max(0, mr.used - 1);
      const auto opt_defect = [&](const Vector& img) {
        const Real in = img.norm();
        if (in > 0)
          out.optimality = std::max(out.optimality, std::abs(r_next.dot(img)) / (prev_rn * in));
      };
      opt_defect(hpsi);
      for (int w = 0; w < used_win; ++w) opt_defect(win[static_cast<std::size_t>(w)].second);

      // skip steps whose applied image is below the reconstruction noise
      const Real hn = hphi.norm();
      if (hn > 1e-6 * prev_rn)
        for (int w = 0; w < used_win; ++w) {
          const Vector& img = win[static_cast<std::size_t>(w)].second;
          const Real in = img.norm();
          if (in > 0)
            out.orthogonality =
                std::max(out.orthogonality, std::abs(hphi.dot(img)) / (hn * in));
        }
    }

    win.emplace_front(phi, hphi);
    if (static_cast<int>(win.size()) > L - 1) win.pop_back();
  }
  return out;
}

}  // namespace rescut::testutil
