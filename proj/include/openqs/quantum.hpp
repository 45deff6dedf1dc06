#pragma once

// Density matrices, projective measurements, unitary steps and von Neumann
// entropy.

#include <optional>
#include <vector>

#include "openqs/matcore.hpp"

namespace oqs {

inline constexpr double kTolTrace = 1e-10;
inline constexpr double kTolPos = 1e-10;
inline constexpr double kTolPosStrict = 1e-12;

/// Hermitian, unit-trace, positive semidefinite matrix.
///
/// Construction accepts matrices that violate the invariants by at most the
/// tolerances above and repairs them (Hermitian part, eigenvalues in
/// [-kTolPos, 0) clipped to zero, trace renormalized); repaired() records it.
class DensityMatrix {
 public:
  /// Throws InvalidState (or DimensionMismatch) when `m` is not a state.
  explicit DensityMatrix(const CMatrix& m);

  static DensityMatrix pure(const CVector& psi);
  static DensityMatrix maximally_mixed(int dim);

  const CMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  bool repaired() const { return repaired_; }
  double purity() const;
  RVector eigenvalues() const;

 private:
  CMatrix m_;
  bool repaired_ = false;
};

/// Complete set of rank-1 orthogonal projectors P_a = |a><a|, optionally
/// grouped into classes C with class projectors P_C = sum_{a in C} P_a.
class ProjectorBasis {
 public:
  /// Columns of `vectors` are the basis states. Throws IncompleteBasis unless
  /// they form an orthonormal basis, InvalidArgument if `classes` is not a
  /// partition of the column indices.
  explicit ProjectorBasis(const CMatrix& vectors, std::vector<std::vector<int>> classes = {});

  static ProjectorBasis computational(int dim, std::vector<std::vector<int>> classes = {});

  /// Builds from explicit projectors; each must be a rank-1 orthogonal
  /// projector and together they must resolve the identity.
  static ProjectorBasis from_projectors(const std::vector<CMatrix>& projectors,
                                        std::vector<std::vector<int>> classes = {});

  int dim() const { return static_cast<int>(vectors_.rows()); }
  int size() const { return static_cast<int>(vectors_.cols()); }
  const CMatrix& vectors() const { return vectors_; }
  CMatrix projector(int alpha) const;
  bool has_classes() const { return !classes_.empty(); }
  const std::vector<std::vector<int>>& classes() const { return classes_; }
  CMatrix class_projector(int c) const;

 private:
  CMatrix vectors_;
  std::vector<std::vector<int>> classes_;
};

/// rho = sum_i w_i |psi_i><psi_i|. States need not be orthogonal.
/// Throws BadWeights or UnnormalizedState.
DensityMatrix mixture(const std::vector<double>& weights, const std::vector<CVector>& states);

/// Tr(obs rho). Throws NotHermitian.
double expectation(const DensityMatrix& rho, const CMatrix& obs);

/// Outcome probabilities <a|rho|a>, one per basis vector.
RVector outcome_probabilities(const DensityMatrix& rho, const ProjectorBasis& basis);

/// sum_a <a|rho|a> P_a, or sum_C P_C rho P_C when the basis carries classes.
DensityMatrix born_collapse(const DensityMatrix& rho, const ProjectorBasis& basis);

/// U rho U^dagger with U = exp(-i h dt). Throws NotHermitian.
DensityMatrix unitary_step(const DensityMatrix& rho, const CMatrix& h, double dt);

/// -Tr(rho ln rho) in nats, 0 ln 0 = 0.
double vn_entropy(const DensityMatrix& rho);

/// dS/dt under the dissipators built from `lindblads`:
/// sum_{ij,a} |(L_a)_ij|^2 p_j (ln p_j - ln p_i) in the eigenbasis of rho.
/// Throws SingularState if an eigenvalue of rho is <= kTolPosStrict.
double entropy_rate(const DensityMatrix& rho, const std::vector<CMatrix>& lindblads);

}  // namespace oqs
