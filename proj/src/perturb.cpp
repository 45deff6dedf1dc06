#include "openqs/perturb.hpp"

#include <cmath>

#include "openqs/errors.hpp"

namespace oqs {

PerturbationResult first_order(const CMatrix& a, const CMatrix& delta_a, double degeneracy_tol) {
  require_hermitian(a, "a");
  require_hermitian(delta_a, "delta_a");
  if (a.rows() != delta_a.rows()) {
    raise(ErrorKind::DimensionMismatch, "a is " + std::to_string(a.rows()) + "-dimensional but delta_a is " +
                                            std::to_string(delta_a.rows()) + "-dimensional");
  }
  if (!(degeneracy_tol >= 0.0)) raise(ErrorKind::InvalidArgument, "degeneracy_tol must be >= 0");

  const auto base = herm_eig(a);
  const int d = static_cast<int>(a.rows());

  PerturbationResult out;
  out.base_eigenvalues = base.values;
  out.shifts.resize(d);
  out.rotated_basis = base.vectors;

  std::vector<int> current{0};
  for (int k = 1; k <= d; ++k) {
    if (k < d && base.values[k] - base.values[k - 1] <= degeneracy_tol) {
      current.push_back(k);
      continue;
    }
    out.degeneracy_groups.push_back(current);
    if (k < d) current = {k};
  }

  for (const auto& group : out.degeneracy_groups) {
    const int first = group.front();
    const int size = static_cast<int>(group.size());
    const CMatrix v = base.vectors.middleCols(first, size);
    CMatrix block = v.adjoint() * delta_a * v;
    block = 0.5 * (block + block.adjoint());
    if (size == 1) {
      out.shifts[first] = block(0, 0).real();
      continue;
    }
    const auto inner = herm_eig(block);
    CMatrix rotated = v * inner.vectors;
    for (int j = 0; j < size; ++j) {
      CVector col = rotated.col(j);
      fix_phase(col);
      out.rotated_basis.col(first + j) = col;
      out.shifts[first + j] = inner.values[j];
    }
  }
  return out;
}

PerturbationResult first_order(const CMatrix& a, const CMatrix& delta_a) {
  require_square(a, "a");
  return first_order(a, delta_a, 1e-9 * a.norm());
}

double block_offdiag_residual(const PerturbationResult& r, const CMatrix& delta_a) {
  double worst = 0.0;
  for (const auto& group : r.degeneracy_groups) {
    const CMatrix u = r.rotated_basis.middleCols(group.front(), static_cast<Eigen::Index>(group.size()));
    CMatrix block = u.adjoint() * delta_a * u;
    block.diagonal().setZero();
    if (block.size()) worst = std::max(worst, block.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace oqs
