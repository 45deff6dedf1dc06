#include "openqs/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "openqs/errors.hpp"

namespace oqs {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

}  // namespace

double LindbladModel::balance_residual() const {
  const int d = dim();
  CMatrix s = CMatrix::Zero(d, d);
  for (const auto& l : lindblads) s += l.adjoint() * l - l * l.adjoint();
  return s.norm();
}

void LindbladModel::validate() const {
  if (hamiltonian.rows() < 1 || hamiltonian.rows() != hamiltonian.cols()) {
    raise(ErrorKind::DimensionMismatch, "Hamiltonian must be square with dim >= 1");
  }
  if (!hamiltonian.allFinite() || !is_hermitian(hamiltonian)) {
    raise(ErrorKind::NotHermitianH, "Hamiltonian is not Hermitian (residual " + fmt(hermiticity_residual(hamiltonian)) + ")");
  }
  for (std::size_t a = 0; a < lindblads.size(); ++a) {
    if (lindblads[a].rows() != dim() || lindblads[a].cols() != dim()) {
      raise(ErrorKind::DimensionMismatch, "Lindblad operator " + std::to_string(a) + " has the wrong shape");
    }
    if (!lindblads[a].allFinite()) raise(ErrorKind::InvalidArgument, "Lindblad operator " + std::to_string(a) + " is not finite");
  }
}

CMatrix build_superoperator(const LindbladModel& model) {
  model.validate();
  const int d = model.dim();
  const CMatrix id = identity(d);
  CMatrix l = Complex(0.0, -1.0) * (kron(model.hamiltonian, id) - kron(id, model.hamiltonian.transpose()));
  for (const auto& op : model.lindblads) {
    const CMatrix g = op.adjoint() * op;
    l += kron(op, op.conjugate()) - 0.5 * kron(g, id) - 0.5 * kron(id, g.transpose());
  }
  return l;
}

int SuperopSpectrum::count(ModeClass c) const {
  return static_cast<int>(std::count(classes.begin(), classes.end(), c));
}

SuperopSpectrum spectrum_of(const CMatrix& superop, const SpectrumOptions& options) {
  SuperopSpectrum out;
  out.chains = general_eig(superop, options.chain);
  out.threshold = options.class_rel * superop.norm();
  const CMatrix basis = out.chains.basis();
  const auto eigenvalues = out.chains.eigenvalues();
  out.ranks = out.chains.ranks();
  for (std::size_t n = 0; n < eigenvalues.size(); ++n) {
    const Complex mu = -eigenvalues[n];
    out.mus.push_back(mu);
    out.modes.push_back(unvec(basis.col(static_cast<Eigen::Index>(n))));
    if (mu.real() > out.threshold) {
      out.classes.push_back(ModeClass::Decaying);
    } else if (mu.real() < -out.threshold) {
      out.classes.push_back(ModeClass::Forbidden);
    } else {
      out.classes.push_back(ModeClass::Stationary);
    }
  }
  return out;
}

SuperopSpectrum spectrum(const LindbladModel& model, const SpectrumOptions& options) {
  return spectrum_of(build_superoperator(model), options);
}

DensityMatrix evolve(const LindbladModel& model, const DensityMatrix& rho0, double t) {
  if (!(t >= 0.0)) raise(ErrorKind::InvalidArgument, "evolution time must be >= 0");
  if (rho0.dim() != model.dim()) raise(ErrorKind::DimensionMismatch, "state and model dimensions differ");
  if (t == 0.0) return rho0;
  const CMatrix rho = unvec(expm(build_superoperator(model), t) * vec(rho0.matrix()));
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

// ---------------------------------------------------------------------------

MeasurementModel measurement_model(const ProjectorBasis& basis, const std::vector<std::vector<Complex>>& l_coeffs,
                                   const std::vector<double>& h_coeffs) {
  const int n = basis.size();
  if (static_cast<int>(h_coeffs.size()) != n) {
    raise(ErrorKind::DimensionMismatch, "need " + std::to_string(n) + " h coefficients, got " + std::to_string(h_coeffs.size()));
  }
  LindbladModel model;
  model.hamiltonian = CMatrix::Zero(basis.dim(), basis.dim());
  for (int a = 0; a < n; ++a) {
    if (!std::isfinite(h_coeffs[a])) raise(ErrorKind::InvalidArgument, "h coefficients must be finite");
    model.hamiltonian += h_coeffs[a] * basis.projector(a);
  }
  model.hamiltonian = 0.5 * (model.hamiltonian + model.hamiltonian.adjoint());
  for (std::size_t k = 0; k < l_coeffs.size(); ++k) {
    if (static_cast<int>(l_coeffs[k].size()) != n) {
      raise(ErrorKind::DimensionMismatch, "Lindblad " + std::to_string(k) + " needs " + std::to_string(n) + " coefficients");
    }
    CMatrix l = CMatrix::Zero(basis.dim(), basis.dim());
    for (int a = 0; a < n; ++a) l += l_coeffs[k][a] * basis.projector(a);
    model.lindblads.push_back(l);
  }
  return MeasurementModel{basis, l_coeffs, h_coeffs, std::move(model)};
}

double DecayMatrix::gamma_min() const {
  const double top = lambdas.real().maxCoeff();
  if (top <= 0.0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lambdas.rows(); ++i)
    for (Eigen::Index j = 0; j < lambdas.cols(); ++j) {
      const double r = lambdas(i, j).real();
      if (r > 1e-12 * top) best = std::min(best, r);
    }
  return best;
}

namespace {

CMatrix lambda_matrix(const std::vector<std::vector<Complex>>& l, const std::vector<double>& h) {
  const auto n = static_cast<Eigen::Index>(h.size());
  CMatrix out = CMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      if (a == b) continue;
      double re = 0.0;
      Complex cross = 0.0;
      for (const auto& la : l) {
        re += 0.5 * std::norm(la[a] - la[b]);
        cross += la[a] * std::conj(la[b]);
      }
      out(a, b) = Complex(re, -cross.imag() + (h[a] - h[b]));
    }
  return out;
}

}  // namespace

DecayMatrix decay_matrix(const MeasurementModel& mm) {
  DecayMatrix dm{mm.basis, mm.l_coeffs, mm.h_coeffs, {}, {}};
  dm.lambdas = lambda_matrix(mm.l_coeffs, mm.h_coeffs);
  dm.lambdas_tilde = lambda_matrix(mm.l_coeffs, std::vector<double>(mm.h_coeffs.size(), 0.0));
  return dm;
}

DecayMatrix decay_matrix(const LindbladModel& model, const ProjectorBasis& basis) {
  model.validate();
  if (model.dim() != basis.dim()) raise(ErrorKind::DimensionMismatch, "model and basis dimensions differ");
  const CMatrix& v = basis.vectors();
  auto diagonal_of = [&](const CMatrix& op, const char* what) {
    CMatrix m = v.adjoint() * op * v;
    const CVector diag = m.diagonal();
    m.diagonal().setZero();
    const double off = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
    if (off > 1e-10 * std::max(1.0, op.cwiseAbs().maxCoeff())) {
      raise(ErrorKind::NotDiagonalFamily, std::string(what) + " is not diagonal in the measurement basis (off-diagonal " + fmt(off) + ")");
    }
    return diag;
  };
  const CVector hd = diagonal_of(model.hamiltonian, "Hamiltonian");
  std::vector<double> h(static_cast<std::size_t>(hd.size()));
  for (Eigen::Index a = 0; a < hd.size(); ++a) h[static_cast<std::size_t>(a)] = hd[a].real();
  std::vector<std::vector<Complex>> l;
  for (const auto& op : model.lindblads) {
    const CVector ld = diagonal_of(op, "Lindblad operator");
    l.emplace_back(ld.data(), ld.data() + ld.size());
  }
  return decay_matrix(MeasurementModel{basis, l, h, model});
}

DensityMatrix diagonal_solution(const DecayMatrix& dm, const DensityMatrix& rho0, double t) {
  if (!(t >= 0.0)) raise(ErrorKind::InvalidArgument, "evolution time must be >= 0");
  if (rho0.dim() != dm.basis.dim()) raise(ErrorKind::DimensionMismatch, "state and basis dimensions differ");
  if (t == 0.0) return rho0;
  const CMatrix& v = dm.basis.vectors();
  CMatrix m = v.adjoint() * rho0.matrix() * v;
  for (Eigen::Index a = 0; a < m.rows(); ++a)
    for (Eigen::Index b = 0; b < m.cols(); ++b) m(a, b) *= std::exp(-dm.lambdas(a, b) * t);
  const CMatrix rho = v * m * v.adjoint();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

BornLimitResult born_limit_check(const LindbladModel& model, const ProjectorBasis& basis, const DensityMatrix& rho0,
                                 double horizon, double tol) {
  model.validate();
  const double res = model.balance_residual();
  if (res > 1e-10) {
    raise(ErrorKind::NotBalanced, "the Born-rule limit needs sum_a (L_a^dag L_a - L_a L_a^dag) = 0 (residual " + fmt(res) + ")");
  }
  const DecayMatrix dm = decay_matrix(model, basis);
  BornLimitResult out;
  out.gamma_min = dm.gamma_min();
  out.residual = (evolve(model, rho0, horizon).matrix() - born_collapse(rho0, basis).matrix()).norm();
  out.predicted_bound = rho0.matrix().norm() * std::exp(-out.gamma_min * horizon);
  out.converged = out.residual <= tol;
  return out;
}

BornLimitResult born_limit_check(const MeasurementModel& mm, const DensityMatrix& rho0, double horizon, double tol) {
  return born_limit_check(mm.model, mm.basis, rho0, horizon, tol);
}

}  // namespace oqs
