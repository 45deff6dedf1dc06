#pragma once

// Dense complex linear algebra shared by every other module.
//
// Vectorization convention: row-major. Element (i, j) of a d x d matrix maps
// to slot i*d + j, so vec(A X B) = (A kron B^T) vec(X).

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oqs {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kTolHerm = 1e-10;

// ---------------------------------------------------------------------------
// Structural checks

/// Throws DimensionMismatch unless `m` is square with dim >= 1, and
/// InvalidArgument if any entry is NaN/Inf.
void require_square(const CMatrix& m, const char* what);

/// max |m - m^dagger| over entries.
double hermiticity_residual(const CMatrix& m);

/// Hermitian within tol * max(1, max|m_ij|).
bool is_hermitian(const CMatrix& m, double tol = kTolHerm);

/// Throws NotHermitian with `what` in the message.
void require_hermitian(const CMatrix& m, const char* what, double tol = kTolHerm);

CMatrix identity(int dim);

/// a b - b a
CMatrix commutator(const CMatrix& a, const CMatrix& b);

/// Multiplies `v` by a unit phase so that its first component with modulus
/// above 1e-12 * max|v_i| is real and positive.
void fix_phase(CVector& v);

// ---------------------------------------------------------------------------
// Eigen-decompositions

struct HermEig {
  RVector values;   // ascending
  CMatrix vectors;  // orthonormal columns, column k pairs with values[k]
};

/// Eigendecomposition of a Hermitian matrix. Eigenvectors are phase-fixed
/// with fix_phase. Throws NotHermitian or NoConvergence.
HermEig herm_eig(const CMatrix& m, double tol_herm = kTolHerm);

/// One Jordan chain: vectors[0] is the eigenvector V_1 and
/// (A - lambda I) vectors[i] = vectors[i-1].
struct JordanChain {
  std::vector<CVector> vectors;
  int length() const { return static_cast<int>(vectors.size()); }
};

/// A group of computed eigenvalues treated as one eigenvalue.
struct EigenCluster {
  Complex eigenvalue;            // mean of the members
  std::vector<Complex> members;  // eigenvalues as returned by the eigensolver
  double radius = 0.0;           // max |member - eigenvalue|
  std::vector<JordanChain> chains;

  int multiplicity() const { return static_cast<int>(members.size()); }
};

struct ChainSpectrum {
  int dim = 0;
  std::vector<EigenCluster> clusters;

  /// Eigenvalues repeated by algebraic multiplicity, one entry per
  /// generalized eigenvector, in the same order as basis() columns.
  std::vector<Complex> eigenvalues() const;
  /// Generalized rank p of each basis() column.
  std::vector<int> ranks() const;
  /// All generalized eigenvectors as columns.
  CMatrix basis() const;
  bool diagonalizable() const;
  /// max over chains of ||(A - lambda I) V_i - V_{i-1}|| (V_0 = 0).
  double chain_residual(const CMatrix& a) const;
};

struct ChainOptions {
  /// Eigenvalues closer than cluster_rel * ||A||_F form one cluster.
  double cluster_rel = 1e-8;
  /// Singular values of (A - lambda I)^k below null_rel * ||A||_F^k count
  /// as null directions.
  double null_rel = 1e-7;
  /// Smallest acceptable singular value of the assembled basis (columns
  /// normalized). Below it the decomposition is reported as ill-conditioned.
  double min_basis_sigma = 1e-7;
};

/// Eigenvalues with Jordan chains for a general square matrix.
/// Throws NoConvergence or IllConditioned (with the offending cluster in
/// the message).
ChainSpectrum general_eig(const CMatrix& m, const ChainOptions& options = {});

// ---------------------------------------------------------------------------
// Matrix functions and products

struct ExpmOptions {
  /// Largest admissible ||t m||_1.
  double max_norm = 1e7;
};

/// exp(t m) by Pade-13 scaling and squaring. exp(0 m) is exactly the identity.
/// Throws Overflow when ||t m||_1 exceeds options.max_norm or the result is
/// not finite.
CMatrix expm(const CMatrix& m, double t, const ExpmOptions& options = {});

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Row-major vectorization: (i, j) -> i*d + j.
CVector vec(const CMatrix& m);

/// Inverse of vec. Throws DimensionMismatch unless size is a perfect square.
CMatrix unvec(const CVector& v);

}  // namespace oqs
