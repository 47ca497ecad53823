#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rescut/oracle.hpp>
#include <rescut/solvers.hpp>

#include <deque>
#include <random>

#include "helpers.hpp"

using namespace rescut;
using testutil::dense_to_csr;
using testutil::random_vector;

namespace {

testutil::IterateLog run_grc(const CsrMatrix& A, const Vector& b, int L, PsiMode mode,
                             int steps) {
  SolverConfig cfg;
  cfg.method = Method::Grc;
  cfg.L = L;
  cfg.psi_mode = mode;
  cfg.max_iter = steps;
  cfg.tol = 1e-15;
  testutil::IterateLog log;
  grc_solve(A, b, cfg, testutil::record(log));
  return log;
}

testutil::IterateLog run_cr(const CsrMatrix& A, const Vector& b, int steps) {
  SolverConfig cfg;
  cfg.method = Method::Cr;
  cfg.max_iter = steps;
  cfg.tol = 1e-15;
  testutil::IterateLog log;
  cr_solve(A, b, cfg, testutil::record(log));
  return log;
}

// Replayed least-squares defects must sit at the rounding level of the
// normal equations, far below anything a wrong minimization would produce.
void check_step_optimality(const DenseMatrix& D, const testutil::IterateLog& log, int L,
                           PsiMode mode) {
  const testutil::StepOptimalityDefects d = testutil::replay_step_optimality(D, log, L, mode);
  CHECK(d.optimality <= 1e-7);
  CHECK(d.orthogonality <= 1e-7);
}

}  // namespace

TEST_CASE("residual norms never increase, whatever the operator") {
  std::mt19937 rng(601);
  for (int inst = 0; inst < 60; ++inst) {
    const int n = 15 + static_cast<int>(rng() % 26);
    const DenseMatrix D = (inst % 2 == 0) ? testutil::random_spd_dense(n, rng)
                                          : testutil::random_diag_dominant_dense(n, rng);
    const CsrMatrix A = dense_to_csr(D);
    const Vector b = random_vector(n, rng);
    SolverConfig cfg;
    cfg.method = Method::Grc;
    cfg.L = 2 + static_cast<int>(rng() % 4);
    cfg.max_iter = 40;
    cfg.tol = 1e-13;
    const SolveResult res = grc_solve(A, b, cfg);
    const auto& rows = res.trace.rows;
    // monotone up to the noise floor of the recursive residual update
    const Real floor = 1e-11 * rows[0].residual_norm;
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i].residual_norm <= rows[i - 1].residual_norm * (1 + 1e-12) + floor);
    if (res.status == SolveStatus::Converged)
      CHECK(res.final_relative_residual <= 10 * cfg.tol);
  }
}

TEST_CASE("every accepted step is least-squares optimal over its basis") {
  std::mt19937 rng(607);
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 30;
    const DenseMatrix D = (inst % 2 == 0) ? testutil::random_spd_dense(n, rng)
                                          : testutil::random_diag_dominant_dense(n, rng);
    const CsrMatrix A = dense_to_csr(D);
    const Vector b = random_vector(n, rng);
    const testutil::IterateLog log = run_grc(A, b, 4, PsiMode::Damped, 12);
    REQUIRE(log.xs.size() >= 2);
    check_step_optimality(D, log, 4, PsiMode::Damped);
  }
}

TEST_CASE("residual-mode steps are least-squares optimal too") {
  std::mt19937 rng(613);
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 25;
    const DenseMatrix D = testutil::random_diag_dominant_dense(n, rng);
    const CsrMatrix A = dense_to_csr(D);
    const Vector b = random_vector(n, rng);
    const testutil::IterateLog log = run_grc(A, b, 3, PsiMode::Residual, 12);
    check_step_optimality(D, log, 3, PsiMode::Residual);
  }
}

TEST_CASE("residuals and corrections live in the expected Krylov spaces") {
  std::mt19937 rng(617);
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 12;
    const DenseMatrix D = (inst % 2 == 0) ? testutil::random_spd_dense(n, rng)
                                          : testutil::random_diag_dominant_dense(n, rng);
    const CsrMatrix A = dense_to_csr(D);
    const Vector b = random_vector(n, rng);
    const int L = (inst % 3 == 0) ? 5 : 3;
    const testutil::IterateLog log = run_grc(A, b, L, PsiMode::Damped, 8);

    for (std::size_t m = 1; m < log.rs.size() && m <= 8; ++m) {
      const DenseMatrix Q = oracle::krylov_basis(D, log.rs[0], static_cast<int>(m) + 1);
      const Vector& r_m = log.rs[m];
      const Vector r_out = r_m - Q * (Q.transpose() * r_m);
      CHECK(r_out.norm() <= 1e-9 * r_m.norm());

      const Vector phi = log.xs[m] - log.xs[m - 1];
      if (phi.norm() > 0) {
        const Vector p_out = phi - Q * (Q.transpose() * phi);
        CHECK(p_out.norm() <= 1e-9 * phi.norm());
      }
    }
  }
}

TEST_CASE("damped-mode corrections reproduce the cr step on symmetric systems") {
  std::mt19937 rng(619);
  for (int inst = 0; inst < 10; ++inst) {
    const CsrMatrix A = dense_to_csr(testutil::random_spd_dense(100, rng, 1.2));
    const Vector b = random_vector(100, rng);
    const testutil::IterateLog cr = run_cr(A, b, 15);
    for (int L : {3, 5, 10}) {
      const testutil::IterateLog grc = run_grc(A, b, L, PsiMode::Damped, 15);
      REQUIRE(grc.xs.size() == cr.xs.size());
      for (std::size_t m = 0; m + 1 < cr.xs.size(); ++m) {
        const Vector cr_phi = cr.xs[m + 1] - cr.xs[m];
        const Vector grc_phi = grc.xs[m + 1] - grc.xs[m];
        CHECK((grc_phi - cr_phi).norm() <= 1e-6 * cr_phi.norm());
      }
    }
  }
}

TEST_CASE("residual-mode grc with a two-vector window is cr in disguise") {
  std::mt19937 rng(631);
  for (int inst = 0; inst < 10; ++inst) {
    const CsrMatrix A = dense_to_csr(testutil::random_spd_dense(100, rng, 1.2));
    const Vector b = random_vector(100, rng);
    const testutil::IterateLog cr = run_cr(A, b, 15);
    const testutil::IterateLog grc = run_grc(A, b, 2, PsiMode::Residual, 15);
    REQUIRE(grc.xs.size() == cr.xs.size());
    for (std::size_t m = 1; m < cr.xs.size(); ++m) {
      CHECK((grc.xs[m] - cr.xs[m]).norm() <= 1e-10 * cr.xs[m].norm());
    }
  }
}

TEST_CASE("an untruncated window performs full minimal-residual descent") {
  std::mt19937 rng(641);
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 12;
    const DenseMatrix D = testutil::random_spd_dense(n, rng);
    const CsrMatrix A = dense_to_csr(D);
    const Vector b = random_vector(n, rng);
    SolverConfig cfg;
    cfg.method = Method::Grc;
    cfg.L = 9;
    cfg.max_iter = 6;
    cfg.tol = 1e-15;
    const SolveResult res = grc_solve(A, b, cfg);
    const Vector want = oracle::full_minres_oracle(D, b, 6);
    REQUIRE(res.trace.rows.size() == 7);
    for (int i = 0; i <= 6; ++i)
      CHECK(std::abs(res.trace.rows[static_cast<std::size_t>(i)].residual_norm - want[i]) <=
            1e-8 * want[i]);
  }
}

TEST_CASE("windowed and full gram paths agree step by step") {
  // the cached-tail bookkeeping must not change the math: rerun with
  // debug checks on and compare traces against a fresh run
  std::mt19937 rng(653);
  const CsrMatrix A = dense_to_csr(testutil::random_spd_dense(60, rng));
  const Vector b = random_vector(60, rng);
  SolverConfig cfg;
  cfg.method = Method::Grc;
  cfg.L = 5;
  cfg.tol = 1e-11;
  const SolveResult plain = grc_solve(A, b, cfg);
  cfg.debug_checks = true;
  const SolveResult checked = grc_solve(A, b, cfg);
  REQUIRE(plain.trace.rows.size() == checked.trace.rows.size());
  for (std::size_t i = 0; i < plain.trace.rows.size(); ++i)
    CHECK(plain.trace.rows[i].residual_norm == checked.trace.rows[i].residual_norm);
  CHECK(checked.max_image_drift <= 1e-12);
  CHECK(plain.status == SolveStatus::Converged);
}
