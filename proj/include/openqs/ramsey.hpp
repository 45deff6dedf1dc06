#pragma once

// Ramsey interferometry on a driven two-level system.
//
// Coefficients f_ij are the slowly varying parts of rho in the H_0
// eigenbasis, rho_ij(t) = f_ij(t) exp(-i (E_i - E_j) t), ordered (e, g):
// index 0 is the excited state, index 1 the ground state.

#include <string>
#include <vector>

#include "openqs/matcore.hpp"

namespace oqs {

enum class Theory { Standard, Modified };

std::string to_string(Theory theory);
/// Accepts "standard" or "modified"; throws InvalidArgument otherwise.
Theory theory_from_string(const std::string& name);

struct RamseyConfig {
  double e_g = 0.0;
  double e_e = 1.0;
  Complex u_eg{0.0, 0.0};
  double omega = 1.0;
  double tau = 0.0;
  double t_free = 0.0;
  double t0 = 0.0;
  double sigma = 0.0;
  Complex lambda_tilde_eg{0.0, 0.0};

  /// Throws InvalidArgument naming the first offending field.
  void validate() const;
};

struct RamseyDerived {
  double delta_omega = 0.0;
  double big_omega = 0.0;
};

RamseyDerived derive(const RamseyConfig& config);

class CoefficientMatrix {
 public:
  CoefficientMatrix();
  /// Throws InvalidState unless `f` is 2x2, Hermitian and has unit trace
  /// with populations in [-1e-10, 1 + 1e-10].
  explicit CoefficientMatrix(const CMatrix& f);

  static CoefficientMatrix ground();
  static CoefficientMatrix excited();

  const CMatrix& matrix() const { return f_; }
  double ee() const { return f_(0, 0).real(); }
  double gg() const { return f_(1, 1).real(); }
  Complex eg() const { return f_(0, 1); }
  Complex ge() const { return f_(1, 0); }

 private:
  CMatrix f_;
};

/// Exact RWA pulse of length `tau` starting at lab time `t_start`.
/// Omega = 0 means no drive and no detuning, and f is returned unchanged.
CoefficientMatrix pulse_closed_form(const CoefficientMatrix& f_init, double tau, const RamseyDerived& derived,
                                    Complex u_eg, double t_start = 0.0);

/// Integration constants of the two-parameter closed-form family.
struct FamilyConstants {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
  double r = 0.0;
};

/// Constants for a ground-state start at t = 0. Throws DegenerateFit at Omega = 0.
FamilyConstants ground_start_constants(const RamseyDerived& derived);

/// f(t) from the constant family. Throws DegenerateFit at Omega = 0.
CoefficientMatrix family_pulse(const FamilyConstants& c, double t, const RamseyDerived& derived, Complex u_eg);

/// Fixed-step RK4 on the RWA equations over [t_start, t_start + tau].
/// Throws StepTooLarge when dt > 1e-2 / Omega.
CoefficientMatrix rwa_ode(const CoefficientMatrix& f_init, double tau, const RamseyDerived& derived, Complex u_eg,
                          double dt, double t_start = 0.0);

struct TrajectoryPoint {
  double t = 0.0;
  CMatrix f;    // interaction-picture coefficients in the H_0 eigenbasis
  CMatrix rho;  // f with the energy phases restored
};

/// RK4 on the full interaction-picture equations with H'(t) = -U e^{-i w t} - U^dagger e^{i w t},
/// no rotating-wave approximation. f and U are expressed in the eigenbasis of
/// h0 ordered by descending energy. Emits every `stride`-th step plus the end.
/// Throws StepTooLarge when dt > 0.05 / omega.
std::vector<TrajectoryPoint> full_ode(const CMatrix& h0, const CMatrix& u, double omega, const CMatrix& f_init,
                                      double t_span, double dt, int stride = 1);

CoefficientMatrix free_flight(const CoefficientMatrix& f, double t, Complex lambda_tilde_eg, Theory theory);

/// Ground start, pulse, free flight of length t_free, pulse; returns f_ee.
double protocol(const RamseyConfig& config, Theory theory);
double protocol_at(const RamseyConfig& config, double t_free, Theory theory);

/// Pb_e(T) = baseline + Re[amplitude exp(rate T)] for the composed protocol.
struct Fringe {
  double baseline = 0.0;
  Complex amplitude;
  Complex rate;

  double at(double t) const;
  /// Average against the transit-time density exp(-(T - t0)^2 / sigma^2) / sqrt(pi sigma^2).
  double gaussian_average(double t0, double sigma) const;
};

Fringe fringe(const RamseyConfig& config, Theory theory);

struct GaussianOptions {
  /// Drop the negative-T part of the density and renormalize.
  bool truncate = false;
  bool quadrature = true;
  double quad_tol = 1e-12;
};

struct GaussianResult {
  double value = 0.0;  // closed form, or the quadrature when truncating
  double closed_form = 0.0;
  double quadrature = 0.0;
  double quadrature_error = 0.0;
  bool truncated = false;
  std::vector<std::string> warnings;
};

/// Transit-time average of Pb_e. The closed form integrates over the whole
/// real line; quadrature runs on t0 +/- 8 sigma. Throws QuadratureFailure.
GaussianResult gaussian_fraction(const RamseyConfig& config, Theory theory, const GaussianOptions& options = {});

/// The symmetric-pulse formula with Omega ~ |U_eg| in the pulses, at T = t_free.
double shortcut_fraction(const RamseyConfig& config, Theory theory);
/// Its Gaussian average in the same approximation.
double shortcut_gaussian_fraction(const RamseyConfig& config, Theory theory);

struct ScanRow {
  double delta_omega = 0.0;
  double pb_e = 0.0;
  double pb_e_avg = 0.0;
  double baseline = 0.0;  // fringe-free part of pb_e_avg
};

struct ScanResult {
  RamseyConfig config;
  Theory theory = Theory::Standard;
  std::vector<ScanRow> rows;
  std::vector<std::string> warnings;
};

struct ScanOptions {
  GaussianOptions gaussian;
  int threads = 0;  // 0: hardware concurrency
};

/// Evaluates the protocol at omega = (e_e - e_g) + delta_omega for each grid
/// point. Rows come back in grid order. Throws InvalidArgument for a grid
/// that is empty, non-finite or unsorted.
ScanResult scan(const RamseyConfig& config, const std::vector<double>& delta_omega_grid, Theory theory,
                const ScanOptions& options = {});

std::vector<double> linspace(double lo, double hi, int n);

/// Header `delta_omega,pb_e,pb_e_avg`, values printed with %.17g.
std::string to_csv(const ScanResult& result);

}  // namespace oqs
