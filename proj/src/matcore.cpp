#include "openqs/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "openqs/errors.hpp"

namespace oqs {

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << " must be square with dim >= 1 (got " << m.rows() << "x" << m.cols() << ")";
    raise(ErrorKind::DimensionMismatch, os.str());
  }
  if (!m.allFinite()) raise(ErrorKind::InvalidArgument, std::string(what) + " has non-finite entries");
}

double hermiticity_residual(const CMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols() || m.size() == 0) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return hermiticity_residual(m) <= tol * scale;
}

void require_hermitian(const CMatrix& m, const char* what, double tol) {
  require_square(m, what);
  if (!is_hermitian(m, tol)) {
    std::ostringstream os;
    os << what << " is not Hermitian (residual " << hermiticity_residual(m) << ")";
    raise(ErrorKind::NotHermitian, os.str());
  }
}

CMatrix identity(int dim) { return CMatrix::Identity(dim, dim); }

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

void fix_phase(CVector& v) {
  const double vmax = v.cwiseAbs().maxCoeff();
  if (vmax == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mod = std::abs(v[i]);
    if (mod > 1e-12 * vmax) {
      v *= std::conj(v[i]) / mod;
      v[i] = Complex(mod, 0.0);
      return;
    }
  }
}

// ---------------------------------------------------------------------------

HermEig herm_eig(const CMatrix& m, double tol_herm) {
  require_hermitian(m, "matrix", tol_herm);
  const CMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  if (solver.info() != Eigen::Success) raise(ErrorKind::NoConvergence, "Hermitian eigensolver failed");
  HermEig out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index k = 0; k < out.vectors.cols(); ++k) {
    CVector col = out.vectors.col(k);
    fix_phase(col);
    out.vectors.col(k) = col;
  }
  return out;
}

std::vector<Complex> ChainSpectrum::eigenvalues() const {
  std::vector<Complex> out;
  for (const auto& c : clusters)
    for (const auto& chain : c.chains)
      for (int i = 0; i < chain.length(); ++i) out.push_back(c.eigenvalue);
  return out;
}

std::vector<int> ChainSpectrum::ranks() const {
  std::vector<int> out;
  for (const auto& c : clusters)
    for (const auto& chain : c.chains)
      for (int i = 0; i < chain.length(); ++i) out.push_back(i + 1);
  return out;
}

CMatrix ChainSpectrum::basis() const {
  CMatrix b(dim, dim);
  Eigen::Index col = 0;
  for (const auto& c : clusters)
    for (const auto& chain : c.chains)
      for (const auto& v : chain.vectors) b.col(col++) = v;
  return b;
}

bool ChainSpectrum::diagonalizable() const {
  for (const auto& c : clusters)
    for (const auto& chain : c.chains)
      if (chain.length() > 1) return false;
  return true;
}

double ChainSpectrum::chain_residual(const CMatrix& a) const {
  double worst = 0.0;
  for (const auto& c : clusters) {
    const CMatrix shifted = a - c.eigenvalue * identity(dim);
    for (const auto& chain : c.chains) {
      for (int i = 0; i < chain.length(); ++i) {
        CVector r = shifted * chain.vectors[i];
        if (i > 0) r -= chain.vectors[i - 1];
        worst = std::max(worst, r.norm() / std::max(1.0, chain.vectors[i].norm()));
      }
    }
  }
  return worst;
}

namespace {

std::string describe_cluster(const std::vector<Complex>& members) {
  std::ostringstream os;
  os.precision(17);
  os << "{";
  for (std::size_t i = 0; i < members.size(); ++i) os << (i ? ", " : "") << members[i];
  os << "}";
  return os.str();
}

// Orthonormal basis of the numerical null space of `p`.
CMatrix null_space(const CMatrix& p, double threshold) {
  Eigen::JacobiSVD<CMatrix> svd(p, Eigen::ComputeFullV);
  const RVector& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > threshold) ++rank;
  return svd.matrixV().rightCols(p.cols() - rank);
}

// Orthonormal basis for the span of the columns of `m`.
CMatrix orth(const CMatrix& m) {
  if (m.cols() == 0) return m;
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU);
  const RVector& s = svd.singularValues();
  const double tol = s.size() ? 1e-10 * std::max(1.0, s[0]) : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  return svd.matrixU().leftCols(rank);
}

std::vector<JordanChain> build_chains(const CMatrix& a, const Complex& lambda, int multiplicity,
                                      const ChainOptions& options, const std::vector<Complex>& members) {
  const int n = static_cast<int>(a.rows());
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  const CMatrix shifted = a - lambda * identity(n);

  // null_spaces[k] spans ker (A - lambda I)^k, k = 0..depth.
  std::vector<CMatrix> null_spaces{CMatrix(n, 0)};
  CMatrix power = identity(n);
  int depth = 0;
  for (int k = 1; k <= multiplicity; ++k) {
    power = shifted * power;
    CMatrix ns = null_space(power, options.null_rel * std::pow(scale, k));
    const auto nullity = ns.cols();
    if (nullity < null_spaces.back().cols() || nullity > multiplicity) {
      raise(ErrorKind::IllConditioned, "unstable null-space growth for eigenvalue cluster " + describe_cluster(members));
    }
    null_spaces.push_back(std::move(ns));
    if (nullity == multiplicity) {
      depth = k;
      break;
    }
  }
  if (depth == 0) {
    raise(ErrorKind::IllConditioned,
          "generalized eigenspace dimension does not match multiplicity for cluster " + describe_cluster(members));
  }

  // Chains are built top-down: vectors[0] holds the highest-rank vector until reversed.
  std::vector<std::vector<CVector>> chains;
  for (int k = depth; k >= 1; --k) {
    std::vector<CVector> at_level;
    for (const auto& c : chains) at_level.push_back(c.back());
    const auto fresh = (null_spaces[k].cols() - null_spaces[k - 1].cols()) - static_cast<Eigen::Index>(at_level.size());
    if (fresh < 0) {
      raise(ErrorKind::IllConditioned, "inconsistent Jordan structure for cluster " + describe_cluster(members));
    }
    if (fresh > 0) {
      CMatrix known(n, null_spaces[k - 1].cols() + static_cast<Eigen::Index>(at_level.size()));
      known.leftCols(null_spaces[k - 1].cols()) = null_spaces[k - 1];
      for (std::size_t i = 0; i < at_level.size(); ++i)
        known.col(null_spaces[k - 1].cols() + static_cast<Eigen::Index>(i)) = at_level[i];
      const CMatrix q = orth(known);
      const CMatrix residual = null_spaces[k] - q * (q.adjoint() * null_spaces[k]);
      Eigen::JacobiSVD<CMatrix> svd(residual, Eigen::ComputeThinU);
      if (svd.singularValues().size() < fresh || svd.singularValues()[fresh - 1] < 1e-6) {
        raise(ErrorKind::IllConditioned, "cannot separate chain heads for cluster " + describe_cluster(members));
      }
      for (Eigen::Index j = 0; j < fresh; ++j) {
        CVector head = svd.matrixU().col(j);
        fix_phase(head);
        chains.push_back({head});
      }
    }
    if (k > 1) {
      for (auto& c : chains) c.push_back(shifted * c.back());
    }
  }

  std::vector<JordanChain> out;
  out.reserve(chains.size());
  for (auto& c : chains) {
    std::reverse(c.begin(), c.end());
    out.push_back(JordanChain{std::move(c)});
  }
  return out;
}

}  // namespace

ChainSpectrum general_eig(const CMatrix& m, const ChainOptions& options) {
  require_square(m, "matrix");
  const int n = static_cast<int>(m.rows());
  Eigen::ComplexEigenSolver<CMatrix> solver(m, true);
  if (solver.info() != Eigen::Success) raise(ErrorKind::NoConvergence, "general eigensolver failed");

  const CVector& values = solver.eigenvalues();
  const double tol = options.cluster_rel * std::max(m.norm(), std::numeric_limits<double>::min());

  // Union-find over pairs closer than tol.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(values[i] - values[j]) <= tol) parent[find(i)] = find(j);

  std::vector<std::vector<int>> groups;
  std::vector<int> group_of(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (group_of[root] < 0) {
      group_of[root] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[group_of[root]].push_back(i);
  }

  ChainSpectrum out;
  out.dim = n;
  for (const auto& g : groups) {
    EigenCluster cluster;
    Complex mean{0.0, 0.0};
    for (int i : g) {
      cluster.members.push_back(values[i]);
      mean += values[i];
    }
    mean /= static_cast<double>(g.size());
    cluster.eigenvalue = mean;
    for (const auto& v : cluster.members) cluster.radius = std::max(cluster.radius, std::abs(v - mean));

    if (g.size() == 1) {
      CVector v = solver.eigenvectors().col(g.front());
      v.normalize();
      fix_phase(v);
      cluster.chains.push_back(JordanChain{{v}});
    } else {
      cluster.chains = build_chains(m, mean, static_cast<int>(g.size()), options, cluster.members);
    }
    out.clusters.push_back(std::move(cluster));
  }

  std::sort(out.clusters.begin(), out.clusters.end(), [](const EigenCluster& a, const EigenCluster& b) {
    if (a.eigenvalue.real() != b.eigenvalue.real()) return a.eigenvalue.real() < b.eigenvalue.real();
    return a.eigenvalue.imag() < b.eigenvalue.imag();
  });

  CMatrix basis = out.basis();
  for (Eigen::Index j = 0; j < basis.cols(); ++j) basis.col(j).normalize();
  Eigen::JacobiSVD<CMatrix> svd(basis);
  const double smallest = svd.singularValues()[n - 1];
  if (!(smallest >= options.min_basis_sigma)) {
    // Report the closest pair of distinct clusters; that is where the basis degenerates.
    double gap = std::numeric_limits<double>::infinity();
    std::vector<Complex> pair;
    for (std::size_t i = 0; i < out.clusters.size(); ++i)
      for (std::size_t j = i + 1; j < out.clusters.size(); ++j) {
        const double d = std::abs(out.clusters[i].eigenvalue - out.clusters[j].eigenvalue);
        if (d < gap) {
          gap = d;
          pair = {out.clusters[i].eigenvalue, out.clusters[j].eigenvalue};
        }
      }
    std::ostringstream os;
    os << "generalized eigenvector basis is numerically singular (sigma_min " << smallest
       << "); nearest eigenvalues " << describe_cluster(pair);
    raise(ErrorKind::IllConditioned, os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double norm1(const CMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

void pade_terms(const CMatrix& a, int order, CMatrix& u, CMatrix& v) {
  const auto n = a.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix a2 = a * a;
  switch (order) {
    case 3: {
      constexpr double b[] = {120., 60., 12., 1.};
      u = a * (b[3] * a2 + b[1] * id);
      v = b[2] * a2 + b[0] * id;
      return;
    }
    case 5: {
      constexpr double b[] = {30240., 15120., 3360., 420., 30., 1.};
      const CMatrix a4 = a2 * a2;
      u = a * (b[5] * a4 + b[3] * a2 + b[1] * id);
      v = b[4] * a4 + b[2] * a2 + b[0] * id;
      return;
    }
    case 7: {
      constexpr double b[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
      const CMatrix a4 = a2 * a2;
      const CMatrix a6 = a4 * a2;
      u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
      v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
      return;
    }
    case 9: {
      constexpr double b[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                              2162160.,     110880.,     3960.,       90.,         1.};
      const CMatrix a4 = a2 * a2;
      const CMatrix a6 = a4 * a2;
      const CMatrix a8 = a6 * a2;
      u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
      v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
      return;
    }
    default: {
      constexpr double b[] = {64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
                              129060195264000.,   10559470521600.,    670442572800.,    33522128640.,
                              1323241920.,        40840800.,          960960.,          16380.,
                              182.,               1.};
      const CMatrix a4 = a2 * a2;
      const CMatrix a6 = a4 * a2;
      u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
      v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
      return;
    }
  }
}

}  // namespace

CMatrix expm(const CMatrix& m, double t, const ExpmOptions& options) {
  require_square(m, "matrix");
  const auto n = m.rows();
  if (t == 0.0) return CMatrix::Identity(n, n);
  if (!std::isfinite(t)) raise(ErrorKind::InvalidArgument, "expm: non-finite time");

  CMatrix a = t * m;
  const double norm = norm1(a);
  if (norm == 0.0) return CMatrix::Identity(n, n);
  if (norm > options.max_norm) {
    std::ostringstream os;
    os << "expm: ||t m||_1 = " << norm << " exceeds bound " << options.max_norm;
    raise(ErrorKind::Overflow, os.str());
  }

  // Theta thresholds for the (m, m) Pade approximants, double precision.
  constexpr int orders[] = {3, 5, 7, 9};
  constexpr double thetas[] = {1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
                               2.097847961257068e0};
  constexpr double theta13 = 5.371920351148152e0;

  CMatrix u, v;
  int squarings = 0;
  bool done = false;
  for (int k = 0; k < 4; ++k) {
    if (norm <= thetas[k]) {
      pade_terms(a, orders[k], u, v);
      done = true;
      break;
    }
  }
  if (!done) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    a /= std::ldexp(1.0, squarings);
    pade_terms(a, 13, u, v);
  }

  CMatrix result = (v - u).partialPivLu().solve(v + u);
  for (int s = 0; s < squarings; ++s) result = result * result;
  if (!result.allFinite()) raise(ErrorKind::Overflow, "expm: result is not finite");
  return result;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CVector vec(const CMatrix& m) {
  CVector out(m.size());
  const auto cols = m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out[i * cols + j] = m(i, j);
  return out;
}

CMatrix unvec(const CVector& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (d < 1 || d * d != v.size()) {
    raise(ErrorKind::DimensionMismatch, "unvec: length " + std::to_string(v.size()) + " is not a perfect square");
  }
  CMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v[i * d + j];
  return m;
}

}  // namespace oqs
