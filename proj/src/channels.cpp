#include "openqs/channels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "openqs/errors.hpp"

namespace oqs {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

int dim_from_square(Eigen::Index n, const char* what) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (d < 1 || d * d != n) {
    raise(ErrorKind::DimensionMismatch, std::string(what) + " size " + std::to_string(n) + " is not d^2");
  }
  return static_cast<int>(d);
}

double norm1(const CMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

CMatrix realign(const CMatrix& m, int d) {
  const int n = d * d;
  if (m.rows() != n || m.cols() != n) raise(ErrorKind::DimensionMismatch, "realign: expected a d^2 x d^2 matrix");
  CMatrix out(n, n);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) out(a * d + c, b * d + e) = m(a * d + b, c * d + e);
  return out;
}

Kernel Kernel::from_action(const CMatrix& action, double tau) {
  require_square(action, "action matrix");
  const int d = dim_from_square(action.rows(), "action matrix");
  return Kernel{d, tau, realign(action, d)};
}

Kernel Kernel::identity_map(int dim, double tau) {
  const CVector v = vec(identity(dim));
  return Kernel{dim, tau, v * v.adjoint()};
}

CMatrix Kernel::apply(const CMatrix& rho) const {
  if (rho.rows() != dim || rho.cols() != dim) raise(ErrorKind::DimensionMismatch, "kernel and state dimensions differ");
  return unvec(action() * vec(rho));
}

double Kernel::hermiticity_residual() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }

double Kernel::trace_residual() const {
  double worst = 0.0;
  for (int ip = 0; ip < dim; ++ip)
    for (int jp = 0; jp < dim; ++jp) {
      Complex s = 0.0;
      for (int i = 0; i < dim; ++i) s += matrix(i * dim + ip, i * dim + jp);
      worst = std::max(worst, std::abs(s - Complex(ip == jp ? 1.0 : 0.0)));
    }
  return worst;
}

void Kernel::validate(double tol) const {
  if (dim < 1 || matrix.rows() != dim * dim || matrix.cols() != dim * dim) {
    raise(ErrorKind::DimensionMismatch, "kernel matrix must be d^2 x d^2");
  }
  if (!matrix.allFinite()) raise(ErrorKind::InvalidArgument, "kernel has non-finite entries");
  const double h = hermiticity_residual();
  if (h > tol) raise(ErrorKind::NotHermitianKernel, "kernel Hermiticity residual " + fmt(h));
  const double t = trace_residual();
  if (t > tol) raise(ErrorKind::NotTracePreserving, "kernel trace residual " + fmt(t));
  if (tau == 0.0) {
    const double r = (matrix - identity_map(dim).matrix).cwiseAbs().maxCoeff();
    if (r > tol) raise(ErrorKind::InvalidArgument, "kernel at tau = 0 is not the identity map (residual " + fmt(r) + ")");
  }
}

Kernel kernel_from_generator(const CMatrix& generator, double tau) {
  return Kernel::from_action(expm(generator, tau), tau);
}

// ---------------------------------------------------------------------------

CMatrix KernelSpectrum::reconstruct() const {
  const auto n = u_mats.empty() ? 0 : u_mats.front().size();
  CMatrix k = CMatrix::Zero(n, n);
  for (std::size_t a = 0; a < u_mats.size(); ++a) {
    const CVector v = vec(u_mats[a]);
    k += alphas[static_cast<Eigen::Index>(a)] * v * v.adjoint();
  }
  return k;
}

CMatrix KernelSpectrum::completeness() const {
  const auto d = u_mats.empty() ? 0 : u_mats.front().rows();
  CMatrix s = CMatrix::Zero(d, d);
  for (std::size_t a = 0; a < u_mats.size(); ++a) s += alphas[static_cast<Eigen::Index>(a)] * u_mats[a].adjoint() * u_mats[a];
  return s;
}

namespace {

// Eigenpairs of a Hermitian d^2 x d^2 matrix, descending, eigenvectors reshaped.
std::pair<RVector, std::vector<CMatrix>> descending_eigen(const CMatrix& m) {
  const auto e = herm_eig(m, std::max(1e-10, 1e-12 * m.cwiseAbs().maxCoeff()));
  const auto n = e.values.size();
  RVector values(n);
  std::vector<CMatrix> mats;
  mats.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    values[k] = e.values[n - 1 - k];
    mats.push_back(unvec(e.vectors.col(n - 1 - k)));
  }
  return {values, mats};
}

}  // namespace

KernelSpectrum kernel_spectrum(const Kernel& k) {
  const double h = k.hermiticity_residual();
  if (h > 1e-10) raise(ErrorKind::NotHermitianKernel, "kernel Hermiticity residual " + fmt(h));
  auto [values, mats] = descending_eigen(k.matrix);
  return KernelSpectrum{values, std::move(mats)};
}

std::vector<CMatrix> ChoiSpectrum::kraus_operators(double cutoff) const {
  std::vector<CMatrix> out;
  for (std::size_t a = 0; a < kraus_like.size(); ++a) {
    const double l = lambdas[static_cast<Eigen::Index>(a)];
    if (l > cutoff) out.push_back(std::sqrt(l) * kraus_like[a]);
  }
  return out;
}

CpTestResult choi_cp_test(const Kernel& k, double tol) {
  if (tol < 0.0) tol = 1e-10 * k.dim;
  const double h = k.hermiticity_residual();
  if (h > 1e-10) raise(ErrorKind::NotHermitianKernel, "kernel Hermiticity residual " + fmt(h));
  auto [values, mats] = descending_eigen(k.matrix);
  CpTestResult out;
  out.min_lambda = values[values.size() - 1];
  out.is_cp = out.min_lambda >= -tol;
  out.spectrum = ChoiSpectrum{values, std::move(mats)};
  return out;
}

CMatrix extended_action(const Kernel& k, const CMatrix& x) {
  const int d = k.dim;
  if (x.rows() != x.cols() || x.rows() % d != 0) {
    raise(ErrorKind::DimensionMismatch, "extended input must be (d m) x (d m)");
  }
  const int m = static_cast<int>(x.rows()) / d;
  CMatrix out = CMatrix::Zero(x.rows(), x.cols());
  for (int alpha = 0; alpha < m; ++alpha)
    for (int beta = 0; beta < m; ++beta) {
      CMatrix block(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) block(i, j) = x(i * m + alpha, j * m + beta);
      const CMatrix image = k.apply(block);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) out(a * m + alpha, b * m + beta) = image(a, b);
    }
  return out;
}

CMatrix maximally_entangled(int d) {
  const CVector v = vec(identity(d)) / std::sqrt(static_cast<double>(d));
  return v * v.adjoint();
}

Kernel transpose_kernel(int dim, double tau) {
  const int n = dim * dim;
  Kernel k{dim, tau, CMatrix::Zero(n, n)};
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) k.matrix(a * dim + b, b * dim + a) = 1.0;
  return k;
}

// ---------------------------------------------------------------------------

std::vector<CMatrix> gell_mann_basis(int d) {
  if (d < 1) raise(ErrorKind::DimensionMismatch, "dimension must be >= 1");
  std::vector<CMatrix> basis;
  const double r2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      CMatrix f = CMatrix::Zero(d, d);
      f(j, k) = f(k, j) = r2;
      basis.push_back(f);
    }
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      CMatrix f = CMatrix::Zero(d, d);
      f(j, k) = Complex(0.0, -r2);
      f(k, j) = Complex(0.0, r2);
      basis.push_back(f);
    }
  for (int l = 1; l < d; ++l) {
    CMatrix f = CMatrix::Zero(d, d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
    for (int m = 0; m < l; ++m) f(m, m) = norm;
    f(l, l) = -l * norm;
    basis.push_back(f);
  }
  return basis;
}

double GksForm::c_min_eigenvalue() const {
  if (c_matrix.size() == 0) return 0.0;
  return herm_eig(0.5 * (c_matrix + c_matrix.adjoint())).values[0];
}

std::vector<CMatrix> GksForm::lindblad_operators(double cutoff) const {
  std::vector<CMatrix> out;
  if (c_matrix.size() == 0) return out;
  const auto e = herm_eig(0.5 * (c_matrix + c_matrix.adjoint()));
  for (Eigen::Index a = e.values.size() - 1; a >= 0; --a) {
    if (e.values[a] <= cutoff) continue;
    CMatrix l = CMatrix::Zero(dim(), dim());
    for (std::size_t m = 0; m < basis.size(); ++m) l += e.vectors(static_cast<Eigen::Index>(m), a) * basis[m];
    out.push_back(std::sqrt(e.values[a]) * l);
  }
  return out;
}

CMatrix gks_build(const GksForm& gks) {
  const int d = gks.dim();
  require_hermitian(gks.hamiltonian, "Hamiltonian");
  const auto nb = static_cast<Eigen::Index>(gks.basis.size());
  if (gks.c_matrix.rows() != nb || gks.c_matrix.cols() != nb) {
    raise(ErrorKind::DimensionMismatch, "c_matrix does not match the operator basis");
  }
  const CMatrix id = identity(d);
  CMatrix l = Complex(0.0, -1.0) * (kron(gks.hamiltonian, id) - kron(id, gks.hamiltonian.transpose()));
  for (Eigen::Index m = 0; m < nb; ++m)
    for (Eigen::Index n = 0; n < nb; ++n) {
      const Complex c = gks.c_matrix(m, n);
      if (c == Complex(0.0)) continue;
      const CMatrix& fm = gks.basis[static_cast<std::size_t>(m)];
      const CMatrix& fn = gks.basis[static_cast<std::size_t>(n)];
      const CMatrix g = fn.adjoint() * fm;
      l += c * (kron(fm, fn.conjugate()) - 0.5 * kron(g, id) - 0.5 * kron(id, g.transpose()));
    }
  return l;
}

GksForm gks_project(const CMatrix& superop) {
  require_square(superop, "generator");
  const int d = dim_from_square(superop.rows(), "generator");
  const double scale = std::max(1.0, superop.norm());

  const CVector vid = vec(identity(d));
  const double trace_res = (vid.adjoint() * superop).cwiseAbs().maxCoeff();
  if (trace_res > 1e-8 * scale) {
    raise(ErrorKind::NotAGenerator, "generator is not trace preserving (residual " + fmt(trace_res) + ")");
  }
  // Hermiticity preservation: the kernel-layout matrix must be Hermitian.
  const CMatrix choi = realign(superop, d);
  const double herm_res = (choi - choi.adjoint()).cwiseAbs().maxCoeff();
  if (herm_res > 1e-8 * scale) {
    raise(ErrorKind::NotAGenerator, "generator does not preserve Hermiticity (residual " + fmt(herm_res) + ")");
  }

  GksForm out;
  out.basis = gell_mann_basis(d);
  const auto nb = static_cast<Eigen::Index>(out.basis.size());

  // Coefficients over the full orthonormal basis {I/sqrt(d), F_1, ...}.
  CMatrix g(d * d, nb + 1);
  g.col(0) = vid / std::sqrt(static_cast<double>(d));
  for (Eigen::Index m = 0; m < nb; ++m) g.col(m + 1) = vec(out.basis[static_cast<std::size_t>(m)]);
  CMatrix a = g.adjoint() * choi * g;
  a = 0.5 * (a + a.adjoint());

  out.c_matrix = a.bottomRightCorner(nb, nb);
  CMatrix k = a(0, 0) / (2.0 * d) * identity(d);
  for (Eigen::Index m = 0; m < nb; ++m) k += a(m + 1, 0) / std::sqrt(static_cast<double>(d)) * out.basis[static_cast<std::size_t>(m)];
  CMatrix h = Complex(0.0, 0.5) * (k - k.adjoint());
  h = 0.5 * (h + h.adjoint());
  h -= h.trace() / static_cast<double>(d) * identity(d);
  out.hamiltonian = h;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct BfrPoint {
  double value;      // 2 dg/dt via the (Phi, Psi) construction
  double quadratic;  // sum c_mn w_m w_n^* evaluated directly
};

BfrPoint bfr_point(const GksForm& gks, const CVector& w, std::mt19937_64& rng) {
  const int d = gks.dim();
  const auto nb = static_cast<Eigen::Index>(gks.basis.size());
  if (gks.c_matrix.rows() != nb || w.size() != nb) {
    raise(ErrorKind::DimensionMismatch, "c_matrix, basis and w sizes disagree");
  }
  std::normal_distribution<double> normal;
  const CMatrix id = identity(d);

  CMatrix wm = CMatrix::Zero(d, d);
  for (Eigen::Index m = 0; m < nb; ++m) wm += 0.5 * std::conj(w[m]) * gks.basis[static_cast<std::size_t>(m)];

  // U with W U = U W^T spans the null space of X -> W X - X W^T.
  const CMatrix op = kron(wm, id) - kron(id, wm);
  Eigen::JacobiSVD<CMatrix> svd(op, Eigen::ComputeFullV);
  const RVector& s = svd.singularValues();
  const double thresh = 1e-10 * std::max(1.0, s.size() ? s[0] : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > thresh) ++rank;
  const CMatrix null = svd.matrixV().rightCols(op.cols() - rank);
  if (null.cols() == 0) raise(ErrorKind::SingularSimilarity, "no similarity transform found for W");

  CMatrix u;
  bool found = false;
  for (int attempt = 0; attempt < 20 && !found; ++attempt) {
    CVector coeff(null.cols());
    for (Eigen::Index j = 0; j < coeff.size(); ++j) coeff[j] = Complex(normal(rng), normal(rng));
    u = unvec(null * coeff);
    Eigen::JacobiSVD<CMatrix> us(u);
    const RVector& sv = us.singularValues();
    found = sv[d - 1] > 1e-8 * sv[0];
  }
  if (!found) raise(ErrorKind::SingularSimilarity, "similarity transform for W is numerically singular");

  const CMatrix& phi = u;
  const CMatrix psi_dag = u.partialPivLu().solve(wm);
  const CMatrix psi = psi_dag.adjoint();

  const CMatrix a1 = psi * phi.adjoint();
  const CMatrix b1 = phi * psi_dag;
  const CMatrix a2 = (phi.adjoint() * psi).transpose();
  const CMatrix b2 = (psi_dag * phi).transpose();
  std::vector<Complex> ta1(nb), tb1(nb), ta2(nb), tb2(nb);
  for (Eigen::Index m = 0; m < nb; ++m) {
    const CMatrix& f = gks.basis[static_cast<std::size_t>(m)];
    ta1[m] = (a1 * f).trace();
    tb1[m] = (b1 * f.adjoint()).trace();
    ta2[m] = (a2 * f).trace();
    tb2[m] = (b2 * f.adjoint()).trace();
  }
  Complex deriv = 0.0;
  for (Eigen::Index m = 0; m < nb; ++m)
    for (Eigen::Index n = 0; n < nb; ++n) deriv += gks.c_matrix(m, n) * (ta1[m] * tb1[n] + ta2[m] * tb2[n]);

  return {2.0 * deriv.real(), (w.adjoint() * gks.c_matrix.transpose() * w)(0, 0).real()};
}

}  // namespace

double bfr_derivative_at(const GksForm& gks, const CVector& w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return bfr_point(gks, w, rng).value;
}

BfrResult bfr_derivative_check(const GksForm& gks, int trials, std::uint64_t seed) {
  if (trials < 1) raise(ErrorKind::InvalidArgument, "trials must be >= 1");
  const auto nb = static_cast<Eigen::Index>(gks.basis.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  BfrResult out;
  out.trials = trials;
  out.min_value = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    CVector w(nb);
    for (Eigen::Index m = 0; m < nb; ++m) w[m] = Complex(normal(rng), normal(rng));
    w.normalize();
    const auto p = bfr_point(gks, w, rng);
    out.max_consistency = std::max(out.max_consistency, std::abs(p.value - p.quadratic));
    if (p.value < out.min_value) {
      out.min_value = p.value;
      out.argmin = w;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

GeneratorEstimate extract_generator(const std::vector<Kernel>& samples, FdScheme scheme) {
  if (samples.empty()) raise(ErrorKind::InvalidArgument, "no kernel samples");
  const int d = samples.front().dim;
  std::map<double, CMatrix> by_tau;
  for (const auto& k : samples) {
    if (k.dim != d || k.matrix.rows() != d * d) raise(ErrorKind::DimensionMismatch, "kernel samples differ in dimension");
    const CMatrix s = k.action();
    auto [it, inserted] = by_tau.emplace(k.tau, s);
    if (!inserted && (it->second - s).cwiseAbs().maxCoeff() > 1e-12) {
      raise(ErrorKind::InconsistentSamples, "two different kernels given for tau = " + fmt(k.tau));
    }
  }
  const CMatrix id = identity(d * d);
  auto has = [&](double t) { return by_tau.count(t) > 0; };
  auto get = [&](double t) -> const CMatrix& {
    const CMatrix& s = by_tau.at(t);
    const double dev = norm1(s - id);
    if (dev > 0.1) {
      raise(ErrorKind::StepTooLarge, "||K(" + fmt(t) + ") - I||_1 = " + fmt(dev) + " exceeds 0.1");
    }
    return s;
  };
  if (has(0.0)) {
    const double r = (by_tau.at(0.0) - id).cwiseAbs().maxCoeff();
    if (r > 1e-10) raise(ErrorKind::InconsistentSamples, "sample at tau = 0 is not the identity map");
  }

  auto needs = [&](double h) {
    switch (scheme) {
      case FdScheme::Central: return has(h) && has(-h);
      case FdScheme::OneSided: return has(h) && has(2 * h);
      case FdScheme::Forward: return has(h);
      case FdScheme::Richardson: return has(h) && has(-h) && has(2 * h) && has(-2 * h);
    }
    return false;
  };
  double h = 0.0;
  for (const auto& [t, s] : by_tau)
    if (t > 0.0 && needs(t)) {
      h = t;
      break;
    }
  if (h == 0.0) raise(ErrorKind::InvalidArgument, "samples do not support the requested differencing scheme");

  auto central = [&](double step) -> CMatrix { return (get(step) - get(-step)) / (2.0 * step); };

  GeneratorEstimate out;
  out.step = h;
  switch (scheme) {
    case FdScheme::Central:
      out.generator = central(h);
      if (has(2 * h) && has(-2 * h)) out.error_estimate = ((central(h) - central(2 * h)) / 3.0).norm();
      break;
    case FdScheme::OneSided:
      out.generator = (-3.0 * id + 4.0 * get(h) - get(2 * h)) / (2.0 * h);
      break;
    case FdScheme::Forward:
      out.generator = (get(h) - id) / h;
      if (has(2 * h)) out.error_estimate = (out.generator - (get(2 * h) - id) / (2.0 * h)).norm();
      break;
    case FdScheme::Richardson: {
      const CMatrix d1 = central(h);
      const CMatrix d2 = central(2 * h);
      out.generator = (4.0 * d1 - d2) / 3.0;
      out.error_estimate = ((d1 - d2) / 3.0).norm();
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Kernel kernel_from_unitary_ensemble(const UnitarySampler& sampler, double tau, std::size_t n_samples,
                                    std::uint64_t seed, unsigned threads) {
  if (n_samples < 1) raise(ErrorKind::InvalidArgument, "n_samples must be >= 1");
  std::mt19937_64 probe_rng(splitmix64(seed));
  const CMatrix first = sampler(0, probe_rng);
  require_square(first, "sampled unitary");
  const int d = static_cast<int>(first.rows());
  const int n = d * d;

  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<CMatrix> partial(chunks, CMatrix::Zero(n, n));

  auto work = [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(n_samples, begin + kChunk);
    CMatrix acc = CMatrix::Zero(n, n);
    for (std::size_t i = begin; i < end; ++i) {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(i)));
      const CMatrix u = sampler(i, rng);
      if (u.rows() != d || u.cols() != d) raise(ErrorKind::DimensionMismatch, "sampler changed dimension");
      const CVector v = vec(u);
      acc.noalias() += v * v.adjoint();
    }
    partial[c] = std::move(acc);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t c = t; c < chunks; c += threads) work(c);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  CMatrix total = CMatrix::Zero(n, n);
  for (const auto& p : partial) total += p;
  return Kernel{d, tau, total / static_cast<double>(n_samples)};
}

}  // namespace oqs
