#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "openqs/matcore.hpp"

namespace oqs::testing {

inline CMatrix random_matrix(int d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

inline CMatrix random_hermitian(int d, std::mt19937_64& rng, double scale = 1.0) {
  const CMatrix a = random_matrix(d, rng, scale);
  return 0.5 * (a + a.adjoint());
}

inline CMatrix random_unitary(int d, std::mt19937_64& rng) {
  Eigen::HouseholderQR<CMatrix> qr(random_matrix(d, rng));
  return qr.householderQ() * CMatrix::Identity(d, d);
}

/// Full-rank density matrix with all eigenvalues >= floor.
inline CMatrix random_density(int d, std::mt19937_64& rng, double floor = 0.0) {
  const CMatrix a = random_matrix(d, rng);
  CMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  rho = (1.0 - d * floor) * rho + floor * CMatrix::Identity(d, d);
  return 0.5 * (rho + rho.adjoint());
}

/// Generator in action form, built column by column by applying
/// -i[H, E] + sum_a (L E L^dagger - {L^dagger L, E}/2) to each matrix unit E.
inline CMatrix liouvillian_oracle(const CMatrix& h, const std::vector<CMatrix>& ls) {
  const auto d = h.rows();
  CMatrix out(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      CMatrix e = CMatrix::Zero(d, d);
      e(i, j) = 1.0;
      CMatrix r = Complex(0.0, -1.0) * (h * e - e * h);
      for (const auto& l : ls) {
        const CMatrix ll = l.adjoint() * l;
        r += l * e * l.adjoint() - 0.5 * (ll * e + e * ll);
      }
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) out(a * d + b, i * d + j) = r(a, b);
    }
  return out;
}

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace oqs::testing
