#pragma once

#include <rescut/sparse.hpp>
#include <rescut/types.hpp>

#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rescut {

enum class Method { Grc, Rc, Cr, Gmres, BiCgStab };
enum class PsiMode { Damped, Residual };
enum class SolveStatus { Converged, MaxIter, Stagnated, Breakdown, Diverged };

std::string_view to_string(Method m);
std::string_view to_string(PsiMode p);
std::string_view to_string(SolveStatus s);
Method parse_method(std::string_view name);
PsiMode parse_psi_mode(std::string_view name);

struct SolverConfig {
  Method method = Method::Grc;
  // Window of retained correction vectors (GRC/RC).
  int L = 5;
  // Search-direction generator for GRC: Damped uses the previous
  // correction smoothed by the operator, Residual uses the residual
  // itself.
  PsiMode psi_mode = PsiMode::Damped;
  // Inner relaxation (RC only).
  Real omega = 1.9;
  int inner_iters = 50;
  // GMRES restart length.
  int restart = 40;
  Real tol = 1e-12;
  int max_iter = 50000;
  Vector initial_guess;  // empty means zero
  // Recompute stored operator images each step and track their drift.
  // Diagnostic only; the extra work is not added to the counters.
  bool debug_checks = false;
};

// Throws std::invalid_argument naming the offending field.
void validate(const SolverConfig& cfg);

struct SolveResult {
  Vector x;
  SolveStatus status = SolveStatus::Breakdown;
  ConvergenceTrace trace;
  OpCounters counters;
  // ||b - A x|| / ||r0||, recomputed from scratch at termination.
  Real final_relative_residual = 0;
  // Largest ||stored_image - A*phi|| / (||A||_F ||phi||) seen when
  // debug_checks is on.
  Real max_image_drift = 0;
  std::vector<std::string> warnings;
};

// Called after the initial residual (iteration 0) and after every outer
// iteration with the current iterate and recursively updated residual.
// GMRES materializes its iterate only at restart boundaries and invokes
// the observer there.
using Observer = std::function<void(int iteration, const Vector& x, const Vector& r)>;

// State of the windowed outer iteration (GRC and RC share it).
struct GrcState {
  Vector x;  // current solution
  Vector r;  // current residual b - A x (recursively updated)
  // Retained corrections, newest first: (phi, A*phi) pairs.
  std::deque<std::pair<Vector, Vector>> window;
  // Gram matrix (A phi_i, A phi_j) of the window images, same order.
  DenseMatrix gram_cache;
  int iteration = 0;
};

struct CrState {
  Vector x, r;
  Vector p;   // search direction
  Vector Hp;  // A p
  Vector Hr;  // A r
};

struct MinimizeResult {
  // Coefficients for the passed images; entries for dropped (near
  // dependent) trailing basis vectors are zero.
  Vector alpha;
  // r - sum alpha_i * images_i; left empty unless requested.
  Vector predicted_residual;
  // Gram matrix (images_i, images_j) and right-hand side (images_i, r),
  // returned so callers can keep a running cache.
  DenseMatrix gram;
  Vector rhs;
  int used = 0;           // leading basis vectors that entered the solve
  bool degenerate = false;  // every pivot fell below threshold; alpha = 0
};

// Finds alpha minimizing ||r - sum alpha_i images_i||_2 via the normal
// equations, solved with diagonal scaling and complete pivoting. A pivot
// ratio below 1e-14 drops the trailing (oldest) basis vector and retries.
// cached_tail, when it matches (k-1)x(k-1), supplies the Gram block of
// images[1..k-1] so only the first row/column and the right-hand side
// cost fresh inner products (2k dots).
MinimizeResult minimize_residual(const std::vector<const Vector*>& images,
                                 const Vector& r,
                                 const DenseMatrix* cached_tail = nullptr,
                                 OpCounters& counters = OpCounters::discard(),
                                 bool want_predicted = true);

// Forward SOR sweeps on the splitting A = L + D + U. omega = 1 is exactly
// Gauss-Seidel. Returns the final iterate even when the sweep diverges.
Vector sor_sweeps(const TriangularSplit& split, const Vector& rhs, Real omega,
                  int n_sweeps, const Vector& x0);

SolveResult grc_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                      const Observer& observe = {});
SolveResult rc_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                     const Observer& observe = {});
SolveResult cr_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                     const Observer& observe = {});
SolveResult gmres_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                        const Observer& observe = {});
SolveResult bicgstab_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                           const Observer& observe = {});

// Dispatches on cfg.method.
SolveResult solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                  const Observer& observe = {});

}  // namespace rescut
