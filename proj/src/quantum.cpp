#include "openqs/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
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

DensityMatrix::DensityMatrix(const CMatrix& m) {
  require_square(m, "density matrix");
  const double herm = hermiticity_residual(m);
  if (herm > kTolHerm) raise(ErrorKind::InvalidState, "density matrix is not Hermitian (residual " + fmt(herm) + ")");
  const double trace_err = std::abs(m.trace() - Complex(1.0));
  if (trace_err > kTolTrace) {
    raise(ErrorKind::InvalidState, "density matrix trace deviates from 1 by " + fmt(trace_err));
  }

  CMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(sym);
  RVector p = eig.eigenvalues();
  if (p.minCoeff() < -kTolPos) {
    raise(ErrorKind::InvalidState, "density matrix has eigenvalue " + fmt(p.minCoeff()) + " below -" + fmt(kTolPos));
  }
  if (p.minCoeff() < 0.0) {
    p = p.cwiseMax(0.0);
    sym = eig.eigenvectors() * p.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
    repaired_ = true;
  }
  const double tr = sym.trace().real();
  if (std::abs(tr - 1.0) > 1e-14) {
    sym /= tr;
    repaired_ = true;
  }
  m_ = std::move(sym);
}

DensityMatrix DensityMatrix::pure(const CVector& psi) { return mixture({1.0}, {psi}); }

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 1) raise(ErrorKind::DimensionMismatch, "dimension must be >= 1");
  return DensityMatrix(identity(dim) / static_cast<double>(dim));
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

RVector DensityMatrix::eigenvalues() const { return Eigen::SelfAdjointEigenSolver<CMatrix>(m_, Eigen::EigenvaluesOnly).eigenvalues(); }

// ---------------------------------------------------------------------------

ProjectorBasis::ProjectorBasis(const CMatrix& vectors, std::vector<std::vector<int>> classes)
    : vectors_(vectors), classes_(std::move(classes)) {
  const auto d = vectors_.rows();
  if (d < 1 || vectors_.cols() != d) {
    raise(ErrorKind::IncompleteBasis, "basis has " + std::to_string(vectors_.cols()) + " vectors in dimension " +
                                          std::to_string(d));
  }
  const double gram_err = (vectors_.adjoint() * vectors_ - identity(static_cast<int>(d))).cwiseAbs().maxCoeff();
  if (gram_err > 1e-10) {
    raise(ErrorKind::IncompleteBasis, "basis vectors are not orthonormal (Gram residual " + fmt(gram_err) + ")");
  }
  if (!classes_.empty()) {
    std::vector<int> seen(d, 0);
    for (const auto& c : classes_) {
      if (c.empty()) raise(ErrorKind::InvalidArgument, "empty measurement class");
      for (int a : c) {
        if (a < 0 || a >= d) raise(ErrorKind::InvalidArgument, "class index " + std::to_string(a) + " out of range");
        ++seen[a];
      }
    }
    for (Eigen::Index a = 0; a < d; ++a)
      if (seen[a] != 1) raise(ErrorKind::InvalidArgument, "classes do not partition the outcomes");
  }
}

ProjectorBasis ProjectorBasis::computational(int dim, std::vector<std::vector<int>> classes) {
  return ProjectorBasis(identity(dim), std::move(classes));
}

ProjectorBasis ProjectorBasis::from_projectors(const std::vector<CMatrix>& projectors,
                                               std::vector<std::vector<int>> classes) {
  if (projectors.empty()) raise(ErrorKind::IncompleteBasis, "no projectors given");
  const auto d = projectors.front().rows();
  CMatrix vectors(d, static_cast<Eigen::Index>(projectors.size()));
  CMatrix total = CMatrix::Zero(d, d);
  for (std::size_t a = 0; a < projectors.size(); ++a) {
    const CMatrix& p = projectors[a];
    require_square(p, "projector");
    if (p.rows() != d) raise(ErrorKind::DimensionMismatch, "projectors have different dimensions");
    if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10 || !is_hermitian(p) || std::abs(p.trace() - Complex(1.0)) > 1e-10) {
      raise(ErrorKind::InvalidArgument, "projector " + std::to_string(a) + " is not a rank-1 orthogonal projector");
    }
    const auto e = herm_eig(p);
    vectors.col(static_cast<Eigen::Index>(a)) = e.vectors.col(d - 1);
    total += p;
  }
  if ((total - identity(static_cast<int>(d))).cwiseAbs().maxCoeff() > 1e-10) {
    raise(ErrorKind::IncompleteBasis, "projectors do not sum to the identity");
  }
  return ProjectorBasis(vectors, std::move(classes));
}

CMatrix ProjectorBasis::projector(int alpha) const { return vectors_.col(alpha) * vectors_.col(alpha).adjoint(); }

CMatrix ProjectorBasis::class_projector(int c) const {
  CMatrix p = CMatrix::Zero(dim(), dim());
  for (int a : classes_.at(static_cast<std::size_t>(c))) p += projector(a);
  return p;
}

// ---------------------------------------------------------------------------

DensityMatrix mixture(const std::vector<double>& weights, const std::vector<CVector>& states) {
  if (weights.empty() || weights.size() != states.size()) {
    raise(ErrorKind::BadWeights, "need one weight per state (" + std::to_string(weights.size()) + " weights, " +
                                     std::to_string(states.size()) + " states)");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) raise(ErrorKind::BadWeights, "negative or non-finite weight " + fmt(w));
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) raise(ErrorKind::BadWeights, "weights sum to " + fmt(total));
  const auto d = states.front().size();
  CMatrix rho = CMatrix::Zero(d, d);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].size() != d) raise(ErrorKind::DimensionMismatch, "states have different dimensions");
    const double n = states[i].norm();
    if (std::abs(n - 1.0) > 1e-12) {
      raise(ErrorKind::UnnormalizedState, "state " + std::to_string(i) + " has norm " + fmt(n));
    }
    rho += weights[i] * states[i] * states[i].adjoint();
  }
  return DensityMatrix(rho);
}

double expectation(const DensityMatrix& rho, const CMatrix& obs) {
  require_hermitian(obs, "observable");
  if (obs.rows() != rho.dim()) raise(ErrorKind::DimensionMismatch, "observable and state dimensions differ");
  return (obs * rho.matrix()).trace().real();
}

RVector outcome_probabilities(const DensityMatrix& rho, const ProjectorBasis& basis) {
  if (basis.dim() != rho.dim()) raise(ErrorKind::DimensionMismatch, "basis and state dimensions differ");
  return (basis.vectors().adjoint() * rho.matrix() * basis.vectors()).diagonal().real();
}

DensityMatrix born_collapse(const DensityMatrix& rho, const ProjectorBasis& basis) {
  if (basis.dim() != rho.dim()) raise(ErrorKind::DimensionMismatch, "basis and state dimensions differ");
  const int d = rho.dim();
  CMatrix out = CMatrix::Zero(d, d);
  if (basis.has_classes()) {
    for (int c = 0; c < static_cast<int>(basis.classes().size()); ++c) {
      const CMatrix p = basis.class_projector(c);
      out += p * rho.matrix() * p;
    }
  } else {
    const RVector probs = outcome_probabilities(rho, basis);
    for (int a = 0; a < basis.size(); ++a) out += probs[a] * basis.projector(a);
  }
  return DensityMatrix(out);
}

DensityMatrix unitary_step(const DensityMatrix& rho, const CMatrix& h, double dt) {
  require_hermitian(h, "Hamiltonian");
  if (h.rows() != rho.dim()) raise(ErrorKind::DimensionMismatch, "Hamiltonian and state dimensions differ");
  const CMatrix u = expm(Complex(0.0, -1.0) * h, dt);
  const CMatrix next = u * rho.matrix() * u.adjoint();
  return DensityMatrix(0.5 * (next + next.adjoint()));
}

double vn_entropy(const DensityMatrix& rho) {
  double s = 0.0;
  for (double p : rho.eigenvalues())
    if (p > 0.0) s -= p * std::log(p);
  return std::clamp(s, 0.0, std::log(static_cast<double>(rho.dim())));
}

double entropy_rate(const DensityMatrix& rho, const std::vector<CMatrix>& lindblads) {
  const auto e = herm_eig(rho.matrix());
  const double pmin = e.values.minCoeff();
  if (pmin <= kTolPosStrict) {
    raise(ErrorKind::SingularState, "entropy rate needs a strictly positive state (smallest eigenvalue " +
                                        fmt(pmin) + ")");
  }
  const RVector logp = e.values.array().log();
  double rate = 0.0;
  for (const auto& l : lindblads) {
    if (l.rows() != rho.dim() || l.cols() != rho.dim()) {
      raise(ErrorKind::DimensionMismatch, "Lindblad operator and state dimensions differ");
    }
    const CMatrix lp = e.vectors.adjoint() * l * e.vectors;
    for (int i = 0; i < rho.dim(); ++i)
      for (int j = 0; j < rho.dim(); ++j) rate += std::norm(lp(i, j)) * e.values[j] * (logp[j] - logp[i]);
  }
  return rate;
}

}  // namespace oqs
