#pragma once

// Lindblad generators: construction, spectrum, evolution and the
// measurement-model results (decay matrix, Born-rule limit).

#include <vector>

#include "openqs/matcore.hpp"
#include "openqs/quantum.hpp"

namespace oqs {

struct LindbladModel {
  CMatrix hamiltonian;
  std::vector<CMatrix> lindblads;

  int dim() const { return static_cast<int>(hamiltonian.rows()); }
  /// ||sum_a (L_a^dagger L_a - L_a L_a^dagger)||_F
  double balance_residual() const;
  bool balanced(double tol = 1e-10) const { return balance_residual() <= tol; }
  /// Throws NotHermitianH or DimensionMismatch.
  void validate() const;
};

/// d^2 x d^2 generator in action form (row-major vec):
/// -i (H (x) I - I (x) H^T) + sum_a (L (x) L^* - (L^dag L (x) I + I (x) (L^dag L)^T) / 2).
CMatrix build_superoperator(const LindbladModel& model);

enum class ModeClass { Decaying, Stationary, Forbidden };

struct SuperopSpectrum {
  std::vector<Complex> mus;        // L rho_n = -mu_n rho_n
  std::vector<CMatrix> modes;      // rho_n, unit Frobenius norm for rank-1 vectors
  std::vector<int> ranks;          // generalized rank of each mode
  std::vector<ModeClass> classes;  // by Re mu against the threshold
  ChainSpectrum chains;
  double threshold = 0.0;          // 1e-9 * ||L||_F

  int count(ModeClass c) const;
};

struct SpectrumOptions {
  double class_rel = 1e-9;
  ChainOptions chain;
};

/// Throws NotHermitianH, NoConvergence, IllConditioned.
SuperopSpectrum spectrum(const LindbladModel& model, const SpectrumOptions& options = {});

/// Same, for a generator already in action form.
SuperopSpectrum spectrum_of(const CMatrix& superop, const SpectrumOptions& options = {});

/// unvec(exp(t L) vec(rho0)). Throws InvalidArgument for t < 0.
DensityMatrix evolve(const LindbladModel& model, const DensityMatrix& rho0, double t);

// ---------------------------------------------------------------------------
// Measurement models: L_a = sum_alpha l_{a alpha} P_alpha, H = sum_alpha h_alpha P_alpha

struct MeasurementModel {
  ProjectorBasis basis;
  std::vector<std::vector<Complex>> l_coeffs;  // [a][alpha]
  std::vector<double> h_coeffs;                // [alpha]
  LindbladModel model;
};

/// Throws IncompleteBasis (from the basis) or DimensionMismatch.
MeasurementModel measurement_model(const ProjectorBasis& basis, const std::vector<std::vector<Complex>>& l_coeffs,
                                   const std::vector<double>& h_coeffs);

struct DecayMatrix {
  ProjectorBasis basis;
  std::vector<std::vector<Complex>> l_coeffs;
  std::vector<double> h_coeffs;
  CMatrix lambdas;        // lambda_{alpha beta}
  CMatrix lambdas_tilde;  // same with h = 0

  /// min Re lambda over entries above 1e-12 * max Re lambda; 0 if none.
  double gamma_min() const;
};

/// lambda_ab = (1/2) sum_a |l_a - l_b|^2 - i Im sum_a l_a l_b^* + i (h_a - h_b).
DecayMatrix decay_matrix(const MeasurementModel& mm);

/// Reads the coefficients off a general model; throws NotDiagonalFamily
/// unless H and every L_a are diagonal in `basis` (H with real entries).
DecayMatrix decay_matrix(const LindbladModel& model, const ProjectorBasis& basis);

/// sum_{ab} P_a rho0 P_b exp(-lambda_ab t).
DensityMatrix diagonal_solution(const DecayMatrix& dm, const DensityMatrix& rho0, double t);

struct BornLimitResult {
  bool converged = false;
  double residual = 0.0;         // ||evolve(rho0, horizon) - born_collapse(rho0)||_F
  double predicted_bound = 0.0;  // ||rho0||_F exp(-gamma_min horizon)
  double gamma_min = 0.0;
};

/// Throws NotBalanced for unbalanced models. Collapse uses the basis classes
/// when present.
BornLimitResult born_limit_check(const MeasurementModel& mm, const DensityMatrix& rho0, double horizon, double tol);
BornLimitResult born_limit_check(const LindbladModel& model, const ProjectorBasis& basis, const DensityMatrix& rho0,
                                 double horizon, double tol);

}  // namespace oqs
