#pragma once

// First-order perturbation theory for Hermitian operators, including the
// rotation that diagonalizes the perturbation inside degenerate subspaces.

#include <vector>

#include "openqs/matcore.hpp"

namespace oqs {

struct PerturbationResult {
  RVector base_eigenvalues;                     // ascending eigenvalues of a
  RVector shifts;                               // first-order shift of each eigenvalue
  CMatrix rotated_basis;                        // column k pairs with shifts[k]
  std::vector<std::vector<int>> degeneracy_groups;  // column indices sharing an eigenvalue

  /// First-order estimate of the eigenvalues of a + eps * delta_a.
  RVector predicted(double eps) const { return base_eigenvalues + eps * shifts; }
};

/// Eigenvalues of `a` closer than `degeneracy_tol` (chained through sorted
/// neighbours) form one group; inside a group the basis is rotated so that
/// delta_a is diagonal. Rotated vectors are phase-fixed (first significant
/// component real positive). Throws NotHermitian or DimensionMismatch.
PerturbationResult first_order(const CMatrix& a, const CMatrix& delta_a, double degeneracy_tol);

/// Same, with degeneracy_tol = 1e-9 * ||a||_F.
PerturbationResult first_order(const CMatrix& a, const CMatrix& delta_a);

/// Largest off-diagonal |<u_m| delta_a |u_n>| with m, n in the same group.
double block_offdiag_residual(const PerturbationResult& r, const CMatrix& delta_a);

}  // namespace oqs
