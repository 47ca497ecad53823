#pragma once

#include <rescut/types.hpp>

#include <cstdint>
#include <utility>

namespace rescut {

struct GridSpec {
  int n = 20;               // grid points per axis; matrix dimension is n^3
  Real stretch = 1.05;      // geometric cell-width ratio (stretched-grid operator)
  Real convection = 1000.0; // coefficient of the first-order x term
};

struct ConvDiffDims {
  std::int64_t rows = 0;
  std::int64_t nnz = 0;
};

// Size and nonzero count gen_convection_diffusion would produce for a given
// n, derived from the stencil structure without building anything.
ConvDiffDims conv_diff_dimensions(int n);

// Central 7-point differences for u_xx + u_yy + u_zz plus a central
// first-order term c*u_x, on the interior of the unit cube with homogeneous
// Dirichlet walls, negated so the diffusion block is positive definite.
// Mesh width is 1/(n+1). The right-hand side is A*ones, making the exact
// solution the all-ones vector.
std::pair<CsrMatrix, Vector> gen_convection_diffusion(const GridSpec& spec);

// Finite-volume diffusion operator on a geometrically stretched tensor grid
// over the unit cube with zero-flux boundaries. The constant null space is
// removed by doubling the diagonal of the first cell. Returns the matrix and
// b = A*u_ref with u_ref = x + y + z at the cell centers, so u_ref is the
// exact discrete solution by construction.
std::pair<CsrMatrix, Vector> gen_poisson_neumann(const GridSpec& spec);

// The reference vector (x + y + z at cell centers) used for the stretched
// grid right-hand side.
Vector poisson_manufactured_solution(const GridSpec& spec);

// b = A * ones.
Vector rhs_unit_solution(const CsrMatrix& A);

}  // namespace rescut
