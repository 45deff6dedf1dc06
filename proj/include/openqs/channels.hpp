#pragma once

// Markovian kernels, their spectra, complete positivity and the canonical
// (GKS) form of their generators.
//
// A kernel K acts as rho_ij = sum K_{i i', j j'} rho_{i' j'} and is stored as a
// d^2 x d^2 matrix with row (i, i') -> i*d + i' and column (j, j') -> j*d + j'.
// In this layout K is the Choi matrix C = sum_ij Phi(|i><j|) (x) |i><j| and the
// identity map is vec(I) vec(I)^dagger. The action matrix S, with
// vec(Phi(rho)) = S vec(rho) in row-major vec ordering, is the realignment
// S_{(i j), (i' j')} = K_{(i i'), (j j')}.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "openqs/matcore.hpp"

namespace oqs {

/// Swaps the middle indices of a d^2 x d^2 matrix: M_{(a b),(c e)} -> M_{(a c),(b e)}.
/// Converts between kernel layout and action layout (it is an involution).
CMatrix realign(const CMatrix& m, int d);

struct Kernel {
  int dim = 0;
  double tau = 0.0;
  CMatrix matrix;  // kernel layout

  static Kernel from_action(const CMatrix& action, double tau);
  static Kernel identity_map(int dim, double tau = 0.0);

  CMatrix action() const { return realign(matrix, dim); }
  CMatrix apply(const CMatrix& rho) const;

  /// max |K - K^dagger|
  double hermiticity_residual() const;
  /// max_{i'j'} |sum_i K_{i i', i j'} - delta_{i'j'}|
  double trace_residual() const;
  /// Throws NotHermitianKernel / NotTracePreserving beyond `tol`, and
  /// InvalidArgument if tau == 0 but K is not the identity map.
  void validate(double tol = 1e-10) const;
};

/// Kernel of the channel exp(tau * generator), generator in action form.
Kernel kernel_from_generator(const CMatrix& generator, double tau);

struct KernelSpectrum {
  RVector alphas;               // descending
  std::vector<CMatrix> u_mats;  // u^N, with vec(u^N) the eigenvector of alphas[N]

  CMatrix reconstruct() const;
  /// sum_N alpha_N (u^N)^dagger u^N
  CMatrix completeness() const;
};

/// Throws NotHermitianKernel.
KernelSpectrum kernel_spectrum(const Kernel& k);

struct ChoiSpectrum {
  RVector lambdas;                 // descending
  std::vector<CMatrix> kraus_like;  // E^alpha, orthonormal in the trace inner product

  /// sqrt(lambda) E for every lambda > cutoff.
  std::vector<CMatrix> kraus_operators(double cutoff = 0.0) const;
};

struct CpTestResult {
  bool is_cp = false;
  double min_lambda = 0.0;
  ChoiSpectrum spectrum;
};

/// is_cp = min lambda >= -tol. Negative tol selects the default 1e-10 * d.
CpTestResult choi_cp_test(const Kernel& k, double tol = -1.0);

/// (Phi (x) id)(x) for x on C^d (x) C^m, system index first.
CMatrix extended_action(const Kernel& k, const CMatrix& x);

/// sum_i |i>|i> / sqrt(d) as a projector on C^d (x) C^d.
CMatrix maximally_entangled(int d);

/// Transpose map rho -> rho^T, positive but not completely positive.
Kernel transpose_kernel(int dim, double tau = 1.0);

// ---------------------------------------------------------------------------
// Canonical form of generators

/// Generalized Gell-Mann matrices, Tr(F_m F_n^dagger) = delta_mn, all
/// traceless Hermitian. Order: symmetric off-diagonal (j < k, row-major),
/// antisymmetric off-diagonal (same order), diagonal l = 1..d-1.
std::vector<CMatrix> gell_mann_basis(int d);

struct GksForm {
  CMatrix hamiltonian;
  CMatrix c_matrix;  // (d^2-1) x (d^2-1), Hermitian
  std::vector<CMatrix> basis;
  std::string basis_label = "gell-mann";

  int dim() const { return static_cast<int>(hamiltonian.rows()); }
  double c_min_eigenvalue() const;
  /// L_a = sqrt(eta_a) sum_m V_{ma} F_m for eigenpairs c = V diag(eta) V^dagger
  /// with eta_a > cutoff.
  std::vector<CMatrix> lindblad_operators(double cutoff = 1e-12) const;
};

/// Generator in action form from (H, c, F).
CMatrix gks_build(const GksForm& gks);

/// Canonical form of a trace- and Hermiticity-preserving generator given in
/// action form. H is returned traceless. Throws NotAGenerator when either
/// residual exceeds 1e-8 (relative to max(1, ||L||)).
GksForm gks_project(const CMatrix& superop);

struct BfrResult {
  double min_value = 0.0;        // min over trials of 2 dg/dt = sum c_mn w_m w_n^*
  CVector argmin;                // the w attaining it
  double max_consistency = 0.0;  // max |2 dg/dt - sum c_mn w_m w_n^*| over trials
  int trials = 0;
};

/// 2 dg/dt at t = 0 for one coefficient vector w (seed drives the choice of U).
double bfr_derivative_at(const GksForm& gks, const CVector& w, std::uint64_t seed = 0);

/// Evaluates the derivative of the two-copy positivity function at t = 0 for
/// `trials` random unit vectors w, with Phi = U and Psi^dagger = U^{-1} W where
/// W = (1/2) sum w_m^* F_m and W^T = U^{-1} W U. Throws InvalidArgument for
/// trials < 1 and SingularSimilarity if no well-conditioned U is found.
BfrResult bfr_derivative_check(const GksForm& gks, int trials, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Generator extraction

enum class FdScheme { Central, OneSided, Forward, Richardson };

struct GeneratorEstimate {
  CMatrix generator;  // action form
  double step = 0.0;
  /// Richardson estimate of the truncation error (Frobenius norm) when the
  /// samples allow one, negative otherwise.
  double error_estimate = -1.0;
};

/// dK/dtau at 0 from sampled kernels.
///  Central:    (K(h) - K(-h)) / 2h
///  OneSided:   (-3 I + 4 K(h) - K(2h)) / 2h
///  Forward:    (K(h) - I) / h
///  Richardson: (4 D(h) - D(2h)) / 3 with D the central difference
/// h is the smallest positive tau for which the scheme's samples exist.
/// Throws StepTooLarge if a used sample has ||S(tau) - I||_1 > 0.1,
/// InconsistentSamples for repeated tau with different kernels, and
/// InvalidArgument when the needed samples are missing.
GeneratorEstimate extract_generator(const std::vector<Kernel>& samples, FdScheme scheme = FdScheme::Central);

// ---------------------------------------------------------------------------
// Ensembles

using UnitarySampler = std::function<CMatrix(std::size_t index, std::mt19937_64& rng)>;

/// Average of vec(U) vec(U)^dagger over n_samples draws. Sample i gets its own
/// generator seeded from (seed, i), so the result does not depend on the
/// thread count. The sampler must be safe to call concurrently.
Kernel kernel_from_unitary_ensemble(const UnitarySampler& sampler, double tau, std::size_t n_samples,
                                    std::uint64_t seed = 0, unsigned threads = 0);

}  // namespace oqs
