#include <rescut/solvers.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rescut {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Grc: return "grc";
    case Method::Rc: return "rc";
    case Method::Cr: return "cr";
    case Method::Gmres: return "gmres";
    case Method::BiCgStab: return "bicgstab";
  }
  return "unknown";
}

std::string_view to_string(PsiMode p) {
  return p == PsiMode::Damped ? "damped" : "residual";
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::Stagnated: return "Stagnated";
    case SolveStatus::Breakdown: return "Breakdown";
    case SolveStatus::Diverged: return "Diverged";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "grc") return Method::Grc;
  if (name == "rc") return Method::Rc;
  if (name == "cr") return Method::Cr;
  if (name == "gmres") return Method::Gmres;
  if (name == "bicgstab") return Method::BiCgStab;
  throw std::invalid_argument("unknown solver '" + std::string(name) +
                              "' (expected grc, rc, cr, gmres or bicgstab)");
}

PsiMode parse_psi_mode(std::string_view name) {
  if (name == "damped") return PsiMode::Damped;
  if (name == "residual") return PsiMode::Residual;
  throw std::invalid_argument("unknown psi mode '" + std::string(name) +
                              "' (expected damped or residual)");
}

void validate(const SolverConfig& cfg) {
  if (cfg.L < 2) throw std::invalid_argument("SolverConfig.L must be >= 2");
  if (!(cfg.omega > 0) || !(cfg.omega < 2))
    throw std::invalid_argument("SolverConfig.omega must lie in (0, 2)");
  if (cfg.inner_iters < 1)
    throw std::invalid_argument("SolverConfig.inner_iters must be >= 1");
  if (cfg.restart < 1) throw std::invalid_argument("SolverConfig.restart must be >= 1");
  if (!(cfg.tol > 0)) throw std::invalid_argument("SolverConfig.tol must be positive");
  if (cfg.max_iter < 1) throw std::invalid_argument("SolverConfig.max_iter must be >= 1");
}

namespace {

using Clock = std::chrono::steady_clock;

struct RunCtx {
  Clock::time_point t0 = Clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }
};

void check_system(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg) {
  validate(cfg);
  if (A.rows() != A.cols()) throw std::invalid_argument("solve: matrix not square");
  if (A.rows() != b.size()) throw std::invalid_argument("solve: rhs size mismatch");
  if (cfg.initial_guess.size() != 0 && cfg.initial_guess.size() != b.size())
    throw std::invalid_argument("solve: initial_guess size mismatch");
  validate_csr(A);
}

Vector init_x(const Vector& b, const SolverConfig& cfg) {
  return cfg.initial_guess.size() == 0 ? Vector(Vector::Zero(b.size()))
                                       : cfg.initial_guess;
}

Vector init_r(const CsrMatrix& A, const Vector& b, const Vector& x, bool guess_given,
              OpCounters& c) {
  if (!guess_given) return b;
  Vector r = matvec(A, x, c);
  r = b - r;
  ++c.axpy_count;
  return r;
}

void push_row(ConvergenceTrace& tr, int iter, Real rn, Real r0n, const OpCounters& c,
              const RunCtx& ctx) {
  tr.rows.push_back({iter, rn, r0n > 0 ? rn / r0n : rn, c.matvec_count, ctx.elapsed()});
}

Real true_relative_residual(const CsrMatrix& A, const Vector& b, const Vector& x,
                            Real r0n, OpCounters& c) {
  if (!x.allFinite()) return std::numeric_limits<Real>::quiet_NaN();
  Vector rt = matvec(A, x, c);
  rt = b - rt;
  ++c.axpy_count;
  const Real rtn = norm2(rt, c);
  return r0n > 0 ? rtn / r0n : rtn;
}

Real entry_at(const CsrMatrix& A, Index i, Index j) {
  const Index* rp = A.outerIndexPtr();
  const Index* ci = A.innerIndexPtr();
  const Index* lo = ci + rp[i];
  const Index* hi = ci + rp[i + 1];
  const Index* it = std::lower_bound(lo, hi, j);
  if (it != hi && *it == j) return A.valuePtr()[it - ci];
  return 0;
}

// Spot check A against its transpose on a deterministic sample. CR's
// recurrences assume a symmetric operator; violations get a warning, not
// an error, so the boundary can be probed deliberately.
void warn_if_asymmetric(const CsrMatrix& A, std::vector<std::string>& warnings) {
  const std::int64_t nnz = A.nonZeros();
  if (nnz == 0) return;
  const Index n = static_cast<Index>(A.rows());
  const Index* rp = A.outerIndexPtr();
  const Index* ci = A.innerIndexPtr();
  const Real* v = A.valuePtr();
  std::mt19937 rng(20240917u);
  std::uniform_int_distribution<std::int64_t> pick(0, nnz - 1);
  int checked = 0;
  for (int t = 0; t < 512 && checked < 200; ++t) {
    const std::int64_t kk = pick(rng);
    const Index i =
        static_cast<Index>(std::upper_bound(rp, rp + n + 1, static_cast<Index>(kk)) - rp) - 1;
    const Index j = ci[kk];
    if (i == j) continue;
    ++checked;
    const Real aij = v[kk];
    const Real aji = entry_at(A, j, i);
    if (std::abs(aij - aji) > Real(1e-12) * (std::abs(aij) + std::abs(aji))) {
      std::ostringstream msg;
      msg << "matrix appears nonsymmetric: A(" << i << "," << j << ") = " << aij
          << " but A(" << j << "," << i << ") = " << aji
          << "; this method assumes a symmetric operator";
      warnings.push_back(msg.str());
      return;
    }
  }
}

// Gaussian elimination with complete pivoting on the leading k x k block
// of the scaled normal equations. Fails (returns false) when the pivot
// ratio drops below 1e-14, signalling a numerically dependent basis.
bool solve_scaled_block(const DenseMatrix& gs, const Vector& cs, int k, Vector& out) {
  DenseMatrix m = gs.topLeftCorner(k, k);
  Vector rhs = cs.head(k);
  std::vector<int> col(static_cast<std::size_t>(k));
  std::iota(col.begin(), col.end(), 0);
  Real pivot0 = 0;
  for (int s = 0; s < k; ++s) {
    int pi = s, pj = s;
    Real best = -1;
    for (int i = s; i < k; ++i)
      for (int j = s; j < k; ++j) {
        const Real cand = std::abs(m(i, j));
        if (cand > best) {
          best = cand;
          pi = i;
          pj = j;
        }
      }
    if (s == 0) pivot0 = best;
    if (!std::isfinite(best) || pivot0 <= 0 || best < Real(1e-14) * pivot0) return false;
    if (pi != s) {
      m.row(pi).swap(m.row(s));
      std::swap(rhs[pi], rhs[s]);
    }
    if (pj != s) {
      m.col(pj).swap(m.col(s));
      std::swap(col[static_cast<std::size_t>(pj)], col[static_cast<std::size_t>(s)]);
    }
    for (int i = s + 1; i < k; ++i) {
      const Real f = m(i, s) / m(s, s);
      m(i, s) = 0;
      if (f != 0) {
        m.row(i).tail(k - s - 1) -= f * m.row(s).tail(k - s - 1);
        rhs[i] -= f * rhs[s];
      }
    }
  }
  Vector y(k);
  for (int i = k - 1; i >= 0; --i) {
    Real s = rhs[i];
    for (int j = i + 1; j < k; ++j) s -= m(i, j) * y[j];
    y[i] = s / m(i, i);
  }
  out.setZero();
  for (int i = 0; i < k; ++i) out[col[static_cast<std::size_t>(i)]] = y[i];
  return out.head(k).allFinite();
}

}  // namespace

MinimizeResult minimize_residual(const std::vector<const Vector*>& images, const Vector& r,
                                 const DenseMatrix* cached_tail, OpCounters& counters,
                                 bool want_predicted) {
  const int k = static_cast<int>(images.size());
  if (k < 1) throw std::invalid_argument("minimize_residual: empty basis");
  for (const Vector* im : images)
    if (im == nullptr || im->size() != r.size())
      throw std::invalid_argument("minimize_residual: image size mismatch");

  MinimizeResult out;
  out.gram.resize(k, k);
  out.rhs.resize(k);
  const bool have_tail =
      cached_tail != nullptr && cached_tail->rows() == k - 1 && cached_tail->cols() == k - 1;
  if (have_tail) {
    out.gram.bottomRightCorner(k - 1, k - 1) = *cached_tail;
    for (int j = 0; j < k; ++j) {
      out.gram(0, j) = dot(*images[0], *images[j], counters);
      out.gram(j, 0) = out.gram(0, j);
    }
  } else {
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) {
        out.gram(i, j) = dot(*images[i], *images[j], counters);
        out.gram(j, i) = out.gram(i, j);
      }
  }
  for (int j = 0; j < k; ++j) out.rhs[j] = dot(*images[j], r, counters);

  // Symmetric diagonal scaling keeps the pivot-ratio test meaningful when
  // image magnitudes span many orders of magnitude.
  Vector d(k);
  for (int i = 0; i < k; ++i) {
    const Real gii = out.gram(i, i);
    d[i] = (gii > 0 && std::isfinite(gii)) ? Real(1) / std::sqrt(gii) : Real(0);
  }
  DenseMatrix gs = d.asDiagonal() * out.gram * d.asDiagonal();
  Vector cs = d.asDiagonal() * out.rhs;

  out.alpha = Vector::Zero(k);
  Vector scaled = Vector::Zero(k);
  for (int kk = k; kk >= 1; --kk) {
    if (solve_scaled_block(gs, cs, kk, scaled)) {
      for (int i = 0; i < kk; ++i) out.alpha[i] = scaled[i] * d[i];
      out.used = kk;
      break;
    }
  }
  out.degenerate = out.used == 0;

  if (want_predicted) {
    out.predicted_residual = r;
    for (int i = 0; i < k; ++i)
      if (out.alpha[i] != 0)
        axpy_inplace(-out.alpha[i], *images[i], out.predicted_residual, counters);
  }
  return out;
}

Vector sor_sweeps(const TriangularSplit& split, const Vector& rhs, Real omega,
                  int n_sweeps, const Vector& x0) {
  const Index n = static_cast<Index>(split.diag.size());
  if (split.zero_diagonal) throw std::invalid_argument("sor_sweeps: zero diagonal entry");
  if (rhs.size() != n) throw std::invalid_argument("sor_sweeps: rhs size mismatch");
  if (n_sweeps < 1) throw std::invalid_argument("sor_sweeps: n_sweeps must be >= 1");
  if (!(omega > 0) || !std::isfinite(omega))
    throw std::invalid_argument("sor_sweeps: omega must be positive and finite");
  Vector x = x0.size() == 0 ? Vector(Vector::Zero(n)) : x0;
  if (x.size() != n) throw std::invalid_argument("sor_sweeps: x0 size mismatch");

  const Index* lrp = split.lower.outerIndexPtr();
  const Index* lci = split.lower.innerIndexPtr();
  const Real* lv = split.lower.valuePtr();
  const Index* urp = split.upper.outerIndexPtr();
  const Index* uci = split.upper.innerIndexPtr();
  const Real* uv = split.upper.valuePtr();

  for (int sweep = 0; sweep < n_sweeps; ++sweep) {
    for (Index i = 0; i < n; ++i) {
      Real s = rhs[i];
      for (Index kk = lrp[i]; kk < lrp[i + 1]; ++kk) s -= lv[kk] * x[lci[kk]];
      for (Index kk = urp[i]; kk < urp[i + 1]; ++kk) s -= uv[kk] * x[uci[kk]];
      x[i] = (1 - omega) * x[i] + omega * s / split.diag[i];
    }
  }
  return x;
}

namespace {

struct PsiGen {
  std::function<Vector(const GrcState&, OpCounters&)> make;
  bool guard_blowup = false;  // abort when the inner relaxation explodes
};

// Shared outer loop: generate a search vector, take its image with one
// matvec, pick the residual-minimizing combination with the retained
// window, and slide the window. Both the damped generator and the inner
// relaxation plug into this.
SolveResult windowed_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                           const PsiGen& gen, const Observer& observe) {
  check_system(A, b, cfg);
  RunCtx ctx;
  SolveResult res;
  OpCounters& C = res.counters;

  GrcState st;
  st.x = init_x(b, cfg);
  st.r = init_r(A, b, st.x, cfg.initial_guess.size() > 0, C);
  st.gram_cache.resize(0, 0);

  const Real r0n = norm2(st.r, C);
  push_row(res.trace, 0, r0n, r0n, C, ctx);
  if (observe) observe(0, st.x, st.r);
  if (r0n == 0) {
    res.x = std::move(st.x);
    res.status = SolveStatus::Converged;
    res.final_relative_residual = 0;
    return res;
  }
  if (!std::isfinite(r0n)) {
    res.x = std::move(st.x);
    res.status = SolveStatus::Breakdown;
    res.final_relative_residual = std::numeric_limits<Real>::quiet_NaN();
    return res;
  }

  const int cap = cfg.L - 1;
  const int flat_limit = 10 * cfg.L;
  const Real hnorm = cfg.debug_checks ? frobenius_norm(A) : Real(0);
  Real rn = r0n, best = r0n;
  int flat = 0;
  bool final_set = false;
  res.status = SolveStatus::MaxIter;

  for (int m = 0; m < cfg.max_iter; ++m) {
    st.iteration = m;
    Vector psi = gen.make(st, C);
    if (!psi.allFinite()) {
      res.status = SolveStatus::Breakdown;
      break;
    }
    if (gen.guard_blowup && psi.lpNorm<Eigen::Infinity>() > Real(1e90)) {
      // The inner solver is running away; the minimization arithmetic on
      // top of it would be meaningless.
      const Real true_rel = true_relative_residual(A, b, st.x, r0n, C);
      res.final_relative_residual = true_rel;
      final_set = true;
      res.status = true_rel > Real(1) + Real(1e-8) ? SolveStatus::Diverged
                                                   : SolveStatus::Breakdown;
      break;
    }
    Vector hpsi = matvec(A, psi, C);
    if (!hpsi.allFinite()) {
      res.status = SolveStatus::Breakdown;
      break;
    }
    C.note_alive(2 * static_cast<int>(st.window.size()) + 2);

    std::vector<const Vector*> images;
    images.reserve(st.window.size() + 1);
    images.push_back(&hpsi);
    for (const auto& pr : st.window) images.push_back(&pr.second);

    MinimizeResult mr =
        minimize_residual(images, st.r, st.window.empty() ? nullptr : &st.gram_cache, C,
                          /*want_predicted=*/false);
    if (mr.degenerate) {
      push_row(res.trace, m + 1, rn, r0n, C, ctx);
      if (observe) observe(m + 1, st.x, st.r);
      res.status = SolveStatus::Stagnated;
      break;
    }

    // Predict the post-step residual norm from the small Gram quantities;
    // the accept/reject decision then needs no long-vector work.
    const Vector g_alpha = mr.gram * mr.alpha;
    const Real quad = mr.alpha.dot(g_alpha);
    const Real pred2 = rn * rn - 2 * mr.alpha.dot(mr.rhs) + quad;
    const bool accept =
        std::isfinite(pred2) && std::sqrt(std::max(Real(0), pred2)) <= rn * (1 + Real(1e-12));
    if (!accept) {
      // alpha = 0 is always feasible; hold position and let the
      // stagnation rule decide.
      push_row(res.trace, m + 1, rn, r0n, C, ctx);
      if (observe) observe(m + 1, st.x, st.r);
      if (++flat >= flat_limit) {
        res.status = SolveStatus::Stagnated;
        break;
      }
      continue;
    }

    // phi = alpha_1 psi + sum_k alpha_k phi_old, assembled in place; its
    // image comes from the stored window images, so no second matvec.
    psi *= mr.alpha[0];
    hpsi *= mr.alpha[0];
    C.axpy_count += 2;
    for (std::size_t w = 0; w < st.window.size(); ++w) {
      const Real a = mr.alpha[static_cast<int>(w) + 1];
      if (a != 0) {
        axpy_inplace(a, st.window[w].first, psi, C);
        axpy_inplace(a, st.window[w].second, hpsi, C);
      }
    }
    if (!psi.allFinite() || !hpsi.allFinite()) {
      res.status = SolveStatus::Breakdown;
      break;
    }

    if (cfg.debug_checks) {
      const Real pn = psi.norm();
      if (pn > 0 && hnorm > 0) {
        Vector fresh = matvec(A, psi, OpCounters::discard());
        const Real drift = (hpsi - fresh).norm() / (hnorm * pn);
        res.max_image_drift = std::max(res.max_image_drift, drift);
      }
    }

    if (psi.lpNorm<Eigen::Infinity>() <= Real(1e-300)) {
      // The window has nothing left to offer.
      push_row(res.trace, m + 1, rn, r0n, C, ctx);
      if (observe) observe(m + 1, st.x, st.r);
      res.status = SolveStatus::Stagnated;
      break;
    }

    axpy_inplace(1, psi, st.x, C);
    axpy_inplace(-1, hpsi, st.r, C);
    rn = norm2(st.r, C);
    if (!std::isfinite(rn)) {
      res.status = SolveStatus::Breakdown;
      break;
    }

    // Slide the window; the cached Gram block is updated from quantities
    // already in hand, costing no inner products.
    st.window.emplace_front(std::move(psi), std::move(hpsi));
    if (static_cast<int>(st.window.size()) > cap) st.window.pop_back();
    const int wsz = static_cast<int>(st.window.size());
    DenseMatrix next(wsz, wsz);
    next(0, 0) = std::max(Real(0), quad);
    for (int j = 1; j < wsz; ++j) {
      next(0, j) = g_alpha[j];
      next(j, 0) = g_alpha[j];
    }
    if (wsz > 1)
      next.bottomRightCorner(wsz - 1, wsz - 1) = mr.gram.block(1, 1, wsz - 1, wsz - 1);
    st.gram_cache = std::move(next);

    push_row(res.trace, m + 1, rn, r0n, C, ctx);
    if (observe) observe(m + 1, st.x, st.r);

    if (rn <= cfg.tol * r0n) {
      Vector rt = matvec(A, st.x, C);
      rt = b - rt;
      ++C.axpy_count;
      const Real rtn = norm2(rt, C);
      st.r = std::move(rt);
      rn = rtn;
      if (rtn <= 10 * cfg.tol * r0n) {
        res.status = SolveStatus::Converged;
        res.final_relative_residual = rtn / r0n;
        final_set = true;
        break;
      }
      res.warnings.push_back(
          "recursive residual drifted from the true one; continuing from the recomputed residual");
    }

    if (rn < best * (1 - Real(1e-16))) {
      best = rn;
      flat = 0;
    } else if (++flat >= flat_limit) {
      res.status = SolveStatus::Stagnated;
      break;
    }
  }

  res.x = std::move(st.x);
  if (!final_set) res.final_relative_residual = true_relative_residual(A, b, res.x, r0n, C);
  return res;
}

}  // namespace

SolveResult grc_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                      const Observer& observe) {
  if (cfg.method != Method::Grc)
    throw std::invalid_argument("grc_solve: cfg.method must be grc");
  PsiGen gen;
  if (cfg.psi_mode == PsiMode::Residual) {
    gen.make = [](const GrcState& st, OpCounters&) -> Vector { return st.r; };
  } else {
    gen.make = [](const GrcState& st, OpCounters& c) -> Vector {
      if (st.window.empty()) return st.r;
      // psi = (I - A) phi + r, from the stored pair, matvec free
      const auto& [phi, hphi] = st.window.front();
      Vector psi = phi - hphi;
      ++c.axpy_count;
      axpy_inplace(1, st.r, psi, c);
      return psi;
    };
  }
  return windowed_solve(A, b, cfg, gen, observe);
}

SolveResult rc_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                     const Observer& observe) {
  if (cfg.method != Method::Rc) throw std::invalid_argument("rc_solve: cfg.method must be rc");
  if (A.rows() != A.cols()) throw std::invalid_argument("solve: matrix not square");
  const TriangularSplit split = triangular_split(A);
  if (split.zero_diagonal)
    throw std::invalid_argument("rc_solve: matrix has a zero diagonal entry");
  PsiGen gen;
  gen.guard_blowup = true;
  gen.make = [&split, omega = cfg.omega, sweeps = cfg.inner_iters](const GrcState& st,
                                                                   OpCounters&) -> Vector {
    // Sweep one at a time: once a diverging relaxation saturates the
    // magnitude cap, further sweeps only rescale the same direction and
    // march it toward overflow, so stop and let the outer minimization
    // judge what it got.
    Vector psi;
    for (int s = 0; s < sweeps; ++s) {
      psi = sor_sweeps(split, st.r, omega, 1, std::move(psi));
      if (!psi.allFinite()) break;
      if (psi.lpNorm<Eigen::Infinity>() > Real(1e60)) break;
    }
    return psi;
  };
  return windowed_solve(A, b, cfg, gen, observe);
}

SolveResult cr_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                     const Observer& observe) {
  if (cfg.method != Method::Cr) throw std::invalid_argument("cr_solve: cfg.method must be cr");
  check_system(A, b, cfg);
  RunCtx ctx;
  SolveResult res;
  OpCounters& C = res.counters;
  warn_if_asymmetric(A, res.warnings);

  CrState st;
  st.x = init_x(b, cfg);
  st.r = init_r(A, b, st.x, cfg.initial_guess.size() > 0, C);
  const Real r0n = norm2(st.r, C);
  if (r0n == 0) {
    push_row(res.trace, 0, r0n, r0n, C, ctx);
    if (observe) observe(0, st.x, st.r);
    res.x = std::move(st.x);
    res.status = SolveStatus::Converged;
    res.final_relative_residual = 0;
    return res;
  }

  st.p = st.r;
  st.Hr = matvec(A, st.r, C);
  st.Hp = st.Hr;
  Real hrr = dot(st.Hr, st.r, C);
  C.note_alive(3);
  push_row(res.trace, 0, r0n, r0n, C, ctx);
  if (observe) observe(0, st.x, st.r);

  Real rn = r0n;
  bool final_set = false;
  res.status = SolveStatus::MaxIter;
  for (int m = 0; m < cfg.max_iter; ++m) {
    const Real hpp = dot(st.Hp, st.Hp, C);
    if (!(hpp > 0) || !std::isfinite(hpp) || !std::isfinite(hrr)) {
      res.status = SolveStatus::Breakdown;
      break;
    }
    if (hrr == 0) {
      // (A r, r) = 0 with r != 0: the operator is not positive on this
      // subspace and the step length is undefined.
      res.status = SolveStatus::Breakdown;
      break;
    }
    const Real a = hrr / hpp;
    axpy_inplace(a, st.p, st.x, C);
    axpy_inplace(-a, st.Hp, st.r, C);
    rn = norm2(st.r, C);
    if (!std::isfinite(rn)) {
      res.status = SolveStatus::Breakdown;
      break;
    }
    matvec_into(A, st.r, st.Hr, C);
    Real hrr_next = dot(st.Hr, st.r, C);
    push_row(res.trace, m + 1, rn, r0n, C, ctx);
    if (observe) observe(m + 1, st.x, st.r);

    if (rn <= cfg.tol * r0n) {
      Vector rt = matvec(A, st.x, C);
      rt = b - rt;
      ++C.axpy_count;
      const Real rtn = norm2(rt, C);
      if (rtn <= 10 * cfg.tol * r0n) {
        st.r = std::move(rt);
        res.status = SolveStatus::Converged;
        res.final_relative_residual = rtn / r0n;
        final_set = true;
        break;
      }
      st.r = std::move(rt);
      rn = rtn;
      matvec_into(A, st.r, st.Hr, C);
      hrr_next = dot(st.Hr, st.r, C);
      res.warnings.push_back(
          "recursive residual drifted from the true one; continuing from the recomputed residual");
    }

    const Real beta = hrr_next / hrr;
    st.p = st.r + beta * st.p;
    st.Hp = st.Hr + beta * st.Hp;
    C.axpy_count += 2;
    hrr = hrr_next;
  }

  res.x = std::move(st.x);
  if (!final_set) res.final_relative_residual = true_relative_residual(A, b, res.x, r0n, C);
  return res;
}

namespace {

Vector solve_upper(const DenseMatrix& R, const Vector& g, int k) {
  Vector y(k);
  for (int i = k - 1; i >= 0; --i) {
    Real s = g[i];
    for (int j = i + 1; j < k; ++j) s -= R(i, j) * y[j];
    y[i] = R(i, i) != 0 ? s / R(i, i) : Real(0);
  }
  return y;
}

}  // namespace

SolveResult gmres_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                        const Observer& observe) {
  if (cfg.method != Method::Gmres)
    throw std::invalid_argument("gmres_solve: cfg.method must be gmres");
  check_system(A, b, cfg);
  RunCtx ctx;
  SolveResult res;
  OpCounters& C = res.counters;
  const int K = cfg.restart;

  Vector x = init_x(b, cfg);
  Vector r = init_r(A, b, x, cfg.initial_guess.size() > 0, C);
  const Real r0n = norm2(r, C);
  push_row(res.trace, 0, r0n, r0n, C, ctx);
  if (observe) observe(0, x, r);
  if (r0n == 0) {
    res.x = std::move(x);
    res.status = SolveStatus::Converged;
    res.final_relative_residual = 0;
    return res;
  }
  if (!std::isfinite(r0n)) {
    res.x = std::move(x);
    res.status = SolveStatus::Breakdown;
    res.final_relative_residual = std::numeric_limits<Real>::quiet_NaN();
    return res;
  }

  std::vector<Vector> V(static_cast<std::size_t>(K) + 1);
  DenseMatrix hbar = DenseMatrix::Zero(K + 1, K);  // plain Hessenberg entries
  DenseMatrix rmat = DenseMatrix::Zero(K + 1, K);  // after Givens rotations
  Vector g = Vector::Zero(K + 1);
  Vector cs = Vector::Zero(K), sn = Vector::Zero(K);

  const int flat_limit = 10 * K;
  Real rn = r0n, best = r0n;
  int flat = 0, total = 0;
  bool done = false, failed = false, stagnated = false, final_set = false;
  res.status = SolveStatus::MaxIter;

  while (total < cfg.max_iter && !done && !failed && !stagnated) {
    if (rn <= cfg.tol * r0n) {
      // converged at a restart boundary; verify against the true residual
      Vector rt = matvec(A, x, C);
      rt = b - rt;
      ++C.axpy_count;
      const Real rtn = norm2(rt, C);
      if (rtn <= 10 * cfg.tol * r0n) {
        r = std::move(rt);
        res.status = SolveStatus::Converged;
        res.final_relative_residual = rtn / r0n;
        final_set = true;
        break;
      }
      r = std::move(rt);
      rn = rtn;
      res.warnings.push_back(
          "basis residual drifted from the true one; restarting from the recomputed residual");
    }

    const Real beta = rn;
    V[0] = r / beta;
    ++C.axpy_count;
    C.note_alive(2);
    g.setZero();
    g[0] = beta;
    int ncols = -1;   // usable Hessenberg columns this cycle
    int nbasis = 1;   // assigned V columns
    Real recheck_below = std::numeric_limits<Real>::infinity();

    int j = 0;
    for (; j < K && total < cfg.max_iter; ++j) {
      Vector w = matvec(A, V[static_cast<std::size_t>(j)], C);
      ++total;
      if (!w.allFinite()) {
        failed = true;
        break;
      }
      const Real wn0 = norm2(w, C);
      for (int i = 0; i <= j; ++i) {
        const Real h = dot(w, V[static_cast<std::size_t>(i)], C);
        hbar(i, j) = h;
        if (h != 0) axpy_inplace(-h, V[static_cast<std::size_t>(i)], w, C);
      }
      const Real hj1 = norm2(w, C);
      hbar(j + 1, j) = hj1;

      for (int i = 0; i <= j + 1; ++i) rmat(i, j) = hbar(i, j);
      for (int i = 0; i < j; ++i) {
        const Real t1 = rmat(i, j), t2 = rmat(i + 1, j);
        rmat(i, j) = cs[i] * t1 + sn[i] * t2;
        rmat(i + 1, j) = -sn[i] * t1 + cs[i] * t2;
      }
      const Real rjj = rmat(j, j);
      const Real denom = std::hypot(rjj, hj1);
      if (!std::isfinite(denom)) {
        failed = true;
        break;
      }
      if (denom <= Real(1e-14) * std::max(wn0, Real(1e-300))) {
        // numerically dependent column: drop it and restart from the best
        // iterate this cycle offers
        const Real est = std::abs(g[j]);
        push_row(res.trace, total, est, r0n, C, ctx);
        if (est < best * (1 - Real(1e-16))) {
          best = est;
          flat = 0;
        } else if (++flat >= flat_limit) {
          stagnated = true;
        }
        ncols = j;
        break;
      }
      cs[j] = rjj / denom;
      sn[j] = hj1 / denom;
      rmat(j, j) = denom;
      rmat(j + 1, j) = 0;
      const Real gj = g[j];
      g[j] = cs[j] * gj;
      g[j + 1] = -sn[j] * gj;
      const Real est = std::abs(g[j + 1]);
      push_row(res.trace, total, est, r0n, C, ctx);

      if (est <= cfg.tol * r0n && est < recheck_below) {
        Vector y = solve_upper(rmat, g, j + 1);
        Vector xc = x;
        for (int i = 0; i <= j; ++i)
          if (y[i] != 0) axpy_inplace(y[i], V[static_cast<std::size_t>(i)], xc, C);
        Vector rt = matvec(A, xc, C);
        rt = b - rt;
        ++C.axpy_count;
        const Real rtn = norm2(rt, C);
        if (rtn <= 10 * cfg.tol * r0n) {
          x = std::move(xc);
          r = std::move(rt);
          rn = rtn;
          res.status = SolveStatus::Converged;
          res.final_relative_residual = rtn / r0n;
          final_set = true;
          done = true;
          if (observe) observe(total, x, r);
          break;
        }
        recheck_below = est / 10;
        res.warnings.push_back(
            "least-squares residual estimate drifted from the true residual; tightening");
      }

      if (hj1 <= Real(1e-14) * wn0) {
        // the Krylov space became invariant; commit what we have
        ncols = j + 1;
        break;
      }
      V[static_cast<std::size_t>(j) + 1] = w / hj1;
      ++C.axpy_count;
      nbasis = j + 2;
      C.note_alive(nbasis + 1);

      if (est < best * (1 - Real(1e-16))) {
        best = est;
        flat = 0;
      } else if (++flat >= flat_limit) {
        stagnated = true;
        ncols = j + 1;
        break;
      }
    }
    if (done || failed) break;
    if (ncols < 0) ncols = j;

    if (ncols > 0) {
      // Solution update and restart residual, both from the basis; the
      // residual costs no matvec.
      Vector y = solve_upper(rmat, g, ncols);
      for (int i = 0; i < ncols; ++i)
        if (y[i] != 0) axpy_inplace(y[i], V[static_cast<std::size_t>(i)], x, C);
      Vector z = -(hbar.topLeftCorner(ncols + 1, ncols) * y);
      z[0] += beta;
      const int nz = std::min(nbasis, ncols + 1);
      r.setZero();
      for (int i = 0; i < nz; ++i)
        if (z[i] != 0) axpy_inplace(z[i], V[static_cast<std::size_t>(i)], r, C);
      rn = norm2(r, C);
      if (!std::isfinite(rn) || !x.allFinite()) {
        failed = true;
      }
      if (observe) observe(total, x, r);
    }
  }

  if (failed) res.status = SolveStatus::Breakdown;
  if (stagnated && res.status != SolveStatus::Converged) res.status = SolveStatus::Stagnated;
  res.x = std::move(x);
  if (!final_set) res.final_relative_residual = true_relative_residual(A, b, res.x, r0n, C);
  return res;
}

SolveResult bicgstab_solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                           const Observer& observe) {
  if (cfg.method != Method::BiCgStab)
    throw std::invalid_argument("bicgstab_solve: cfg.method must be bicgstab");
  check_system(A, b, cfg);
  RunCtx ctx;
  SolveResult res;
  OpCounters& C = res.counters;
  const Index n = static_cast<Index>(A.rows());

  Vector x = init_x(b, cfg);
  Vector r = init_r(A, b, x, cfg.initial_guess.size() > 0, C);
  const Real r0n = norm2(r, C);
  push_row(res.trace, 0, r0n, r0n, C, ctx);
  if (observe) observe(0, x, r);
  if (r0n == 0) {
    res.x = std::move(x);
    res.status = SolveStatus::Converged;
    res.final_relative_residual = 0;
    return res;
  }
  if (!std::isfinite(r0n)) {
    res.x = std::move(x);
    res.status = SolveStatus::Breakdown;
    res.final_relative_residual = std::numeric_limits<Real>::quiet_NaN();
    return res;
  }

  const Vector rhat = r;
  const Real rhat_n = r0n;
  Vector p = Vector::Zero(n), v = Vector::Zero(n), s(n), t(n);
  C.note_alive(5);
  Real rho_old = 1, alpha = 1, w_stab = 1;
  Real rn = r0n;
  bool final_set = false;
  res.status = SolveStatus::MaxIter;

  for (int m = 0; m < cfg.max_iter; ++m) {
    const Real rho = dot(rhat, r, C);
    if (!std::isfinite(rho) || std::abs(rho) <= Real(1e-290) * rhat_n * rn) {
      res.status = SolveStatus::Breakdown;
      break;
    }
    if (m == 0) {
      p = r;
    } else {
      const Real beta = (rho / rho_old) * (alpha / w_stab);
      axpy_inplace(-w_stab, v, p, C);
      p *= beta;
      ++C.axpy_count;
      axpy_inplace(1, r, p, C);
    }
    matvec_into(A, p, v, C);
    const Real vn = norm2(v, C);
    const Real rv = dot(rhat, v, C);
    if (!std::isfinite(rv) || std::abs(rv) <= Real(1e-290) * rhat_n * vn) {
      res.status = SolveStatus::Breakdown;
      break;
    }
    alpha = rho / rv;
    s = r;
    axpy_inplace(-alpha, v, s, C);
    matvec_into(A, s, t, C);
    const Real tt = dot(t, t, C);
    const Real ss = dot(s, s, C);
    const Real ts = dot(t, s, C);
    if (!std::isfinite(tt) || !std::isfinite(ss)) {
      res.status = SolveStatus::Breakdown;
      break;
    }

    if (tt == 0 || tt <= Real(1e-290) * ss) {
      // t vanished; s is the last residual this recurrence can produce
      axpy_inplace(alpha, p, x, C);
      r = s;
      rn = std::sqrt(ss);
      push_row(res.trace, m + 1, rn, r0n, C, ctx);
      if (observe) observe(m + 1, x, r);
      if (rn <= cfg.tol * r0n) {
        const Real true_rel = true_relative_residual(A, b, x, r0n, C);
        res.final_relative_residual = true_rel;
        final_set = true;
        res.status =
            true_rel <= 10 * cfg.tol ? SolveStatus::Converged : SolveStatus::Breakdown;
      } else {
        res.status = SolveStatus::Breakdown;
      }
      break;
    }

    w_stab = ts / tt;
    axpy_inplace(alpha, p, x, C);
    axpy_inplace(w_stab, s, x, C);
    r = s;
    axpy_inplace(-w_stab, t, r, C);
    rho_old = rho;
    rn = norm2(r, C);
    if (!std::isfinite(rn) || !std::isfinite(w_stab)) {
      res.status = SolveStatus::Breakdown;
      break;
    }
    push_row(res.trace, m + 1, rn, r0n, C, ctx);
    if (observe) observe(m + 1, x, r);

    if (rn <= cfg.tol * r0n) {
      Vector rt = matvec(A, x, C);
      rt = b - rt;
      ++C.axpy_count;
      const Real rtn = norm2(rt, C);
      if (rtn <= 10 * cfg.tol * r0n) {
        r = std::move(rt);
        res.status = SolveStatus::Converged;
        res.final_relative_residual = rtn / r0n;
        final_set = true;
        break;
      }
      r = std::move(rt);
      rn = rtn;
      res.warnings.push_back(
          "recursive residual drifted from the true one; continuing from the recomputed residual");
    }
    if (w_stab == 0) {
      // the next direction update would divide by zero
      res.status = SolveStatus::Breakdown;
      break;
    }
  }

  res.x = std::move(x);
  if (!final_set) res.final_relative_residual = true_relative_residual(A, b, res.x, r0n, C);
  return res;
}

SolveResult solve(const CsrMatrix& A, const Vector& b, const SolverConfig& cfg,
                  const Observer& observe) {
  switch (cfg.method) {
    case Method::Grc: return grc_solve(A, b, cfg, observe);
    case Method::Rc: return rc_solve(A, b, cfg, observe);
    case Method::Cr: return cr_solve(A, b, cfg, observe);
    case Method::Gmres: return gmres_solve(A, b, cfg, observe);
    case Method::BiCgStab: return bicgstab_solve(A, b, cfg, observe);
  }
  throw std::invalid_argument("solve: unknown method");
}

}  // namespace rescut
