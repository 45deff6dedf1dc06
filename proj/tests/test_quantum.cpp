#include <cmath>
#include <numbers>

#include "doctest.h"
#include "openqs/errors.hpp"
#include "openqs/quantum.hpp"
#include "support.hpp"

using namespace oqs;
using oqs::testing::max_abs;

namespace {

CVector ket(std::initializer_list<Complex> c) {
  CVector v(static_cast<Eigen::Index>(c.size()));
  Eigen::Index i = 0;
  for (const auto& x : c) v[i++] = x;
  return v;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::IoError;
}

const double kH = 1.0 / std::sqrt(2.0);

}  // namespace

TEST_CASE("mixtures") {
  const auto pure0 = mixture({1.0}, {ket({1, 0})});
  CMatrix e00 = CMatrix::Zero(2, 2);
  e00(0, 0) = 1.0;
  CHECK(pure0.matrix() == e00);

  const auto half = mixture({0.5, 0.5}, {ket({1, 0}), ket({0, 1})});
  CHECK(max_abs(half.matrix() - identity(2) / 2.0) < 1e-15);

  const auto skew = mixture({0.5, 0.5}, {ket({1, 0}), ket({kH, kH})});
  CHECK(std::abs(skew.matrix()(0, 0) - Complex(0.75)) < 1e-15);
  CHECK(std::abs(skew.matrix()(0, 1) - Complex(0.25)) < 1e-15);

  CHECK(kind_of([] { mixture({0.6, 0.6}, {ket({1, 0}), ket({0, 1})}); }) == ErrorKind::BadWeights);
  CHECK(kind_of([] { mixture({-0.5, 1.5}, {ket({1, 0}), ket({0, 1})}); }) == ErrorKind::BadWeights);
  CHECK(kind_of([] { mixture({1.0}, {ket({1, 1})}); }) == ErrorKind::UnnormalizedState);
}

TEST_CASE("density matrix validation and repair") {
  CMatrix m = identity(2) / 2.0;
  m(0, 0) += 1e-3;
  CHECK(kind_of([&] { DensityMatrix{m}; }) == ErrorKind::InvalidState);

  CMatrix neg = CMatrix::Zero(2, 2);
  neg.diagonal() << 1.0 + 5e-11, -5e-11;
  const DensityMatrix repaired(neg);
  CHECK(repaired.repaired());
  CHECK(repaired.eigenvalues().minCoeff() >= 0.0);
  CHECK(std::abs(repaired.matrix().trace() - Complex(1.0)) < 1e-15);

  CMatrix very_neg = CMatrix::Zero(2, 2);
  very_neg.diagonal() << 1.1, -0.1;
  CHECK(kind_of([&] { DensityMatrix{very_neg}; }) == ErrorKind::InvalidState);

  CHECK(!DensityMatrix::maximally_mixed(3).repaired());
}

TEST_CASE("expectation values") {
  std::mt19937_64 rng(31);
  const CMatrix obs = oqs::testing::random_hermitian(3, rng);
  CHECK(std::abs(expectation(DensityMatrix::maximally_mixed(3), obs) - obs.trace().real() / 3.0) < 1e-14);

  CMatrix sz = CMatrix::Zero(2, 2);
  sz.diagonal() << 1, -1;
  CHECK(expectation(DensityMatrix::pure(ket({1, 0})), sz) == doctest::Approx(1.0));

  std::vector<double> w{0.2, 0.3, 0.5};
  std::vector<CVector> states;
  double per_state = 0.0;
  for (int i = 0; i < 3; ++i) {
    CVector psi = oqs::testing::random_matrix(3, rng).col(0);
    psi.normalize();
    states.push_back(psi);
    per_state += w[i] * (psi.adjoint() * obs * psi)(0, 0).real();
  }
  CHECK(std::abs(expectation(mixture(w, states), obs) - per_state) < 1e-13);

  CMatrix bad(2, 2);
  bad << 0, 1, 0, 0;
  CHECK(kind_of([&] { expectation(DensityMatrix::maximally_mixed(2), bad); }) == ErrorKind::NotHermitian);
}

TEST_CASE("Born collapse") {
  const auto z = ProjectorBasis::computational(2);
  CMatrix diag = CMatrix::Zero(2, 2);
  diag.diagonal() << 0.3, 0.7;
  CHECK(max_abs(born_collapse(DensityMatrix(diag), z).matrix() - diag) < 1e-15);

  const auto plus = DensityMatrix::pure(ket({kH, kH}));
  CHECK(max_abs(born_collapse(plus, z).matrix() - identity(2) / 2.0) < 1e-15);

  // Two qubits, outcomes grouped by the first spin: {00, 01} and {10, 11}.
  std::mt19937_64 rng(32);
  const DensityMatrix rho(oqs::testing::random_density(4, rng));
  const auto classes = ProjectorBasis::computational(4, {{0, 1}, {2, 3}});
  const CMatrix c = born_collapse(rho, classes).matrix();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const bool same = (i / 2) == (j / 2);
      CHECK(std::abs(c(i, j) - (same ? rho.matrix()(i, j) : Complex(0.0))) < 1e-15);
    }

  const RVector probs = outcome_probabilities(rho, ProjectorBasis::computational(4));
  CHECK(std::abs(probs.sum() - 1.0) < 1e-14);
}

TEST_CASE("Born collapse is idempotent and never lowers entropy") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 4;
    const DensityMatrix rho(oqs::testing::random_density(d, rng));
    const ProjectorBasis basis(oqs::testing::random_unitary(d, rng));
    const auto once = born_collapse(rho, basis);
    const auto twice = born_collapse(once, basis);
    CHECK(max_abs(once.matrix() - twice.matrix()) < 1e-12);
    CHECK(vn_entropy(once) >= vn_entropy(rho) - 1e-12);
  }
}

TEST_CASE("projector basis validation") {
  CMatrix two(3, 2);
  two.setZero();
  two(0, 0) = two(1, 1) = 1.0;
  CHECK(kind_of([&] { ProjectorBasis{two}; }) == ErrorKind::IncompleteBasis);

  std::vector<CMatrix> partial{ket({1, 0, 0}) * ket({1, 0, 0}).adjoint(), ket({0, 1, 0}) * ket({0, 1, 0}).adjoint()};
  CHECK(kind_of([&] { ProjectorBasis::from_projectors(partial); }) == ErrorKind::IncompleteBasis);
  partial.push_back(ket({0, 0, 1}) * ket({0, 0, 1}).adjoint());
  const auto full = ProjectorBasis::from_projectors(partial, {{0}, {1, 2}});
  CHECK(max_abs(full.class_projector(1) - full.projector(1) - full.projector(2)) < 1e-15);
  CHECK(kind_of([] { ProjectorBasis::computational(3, {{0, 1}, {1, 2}}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("unitary steps") {
  std::mt19937_64 rng(34);
  const DensityMatrix rho(oqs::testing::random_density(3, rng));
  CHECK(max_abs(unitary_step(rho, CMatrix::Zero(3, 3), 0.7).matrix() - rho.matrix()) < 1e-15);

  const double omega = 1.3;
  CMatrix h = CMatrix::Zero(2, 2);
  h.diagonal() << omega / 2, -omega / 2;
  const auto flipped = unitary_step(DensityMatrix::pure(ket({kH, kH})), h, std::numbers::pi / omega);
  const CVector minus = ket({kH, -kH});
  CHECK(max_abs(flipped.matrix() - minus * minus.adjoint()) < 1e-14);

  const CMatrix hr = oqs::testing::random_hermitian(3, rng);
  const double dt = 1e-5;
  const CMatrix fd = (unitary_step(rho, hr, dt).matrix() - unitary_step(rho, hr, -dt).matrix()) / (2 * dt);
  CHECK(max_abs(fd - Complex(0.0, -1.0) * commutator(hr, rho.matrix())) <= 1e-8);
  CHECK(std::abs(unitary_step(rho, hr, 2.5).purity() - rho.purity()) <= 1e-12);
}

TEST_CASE("von Neumann entropy") {
  CHECK(vn_entropy(DensityMatrix::pure(ket({kH, kH}))) == doctest::Approx(0.0));
  CHECK(vn_entropy(DensityMatrix::maximally_mixed(5)) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  CMatrix m = CMatrix::Zero(2, 2);
  m.diagonal() << 0.75, 0.25;
  CHECK(vn_entropy(DensityMatrix(m)) == doctest::Approx(0.5623351446188083).epsilon(1e-14));
}

TEST_CASE("entropy rate edge cases") {
  std::mt19937_64 rng(35);
  const DensityMatrix rho(oqs::testing::random_density(3, rng, 0.05));
  CHECK(entropy_rate(rho, {CMatrix::Zero(3, 3)}) == 0.0);
  CHECK(std::abs(entropy_rate(DensityMatrix::maximally_mixed(3), {oqs::testing::random_matrix(3, rng)})) < 1e-15);
  CHECK(kind_of([] { entropy_rate(DensityMatrix::pure(ket({1, 0})), {}); }) == ErrorKind::SingularState);

  // Hermitian Lindblad operators satisfy the balanced condition, so the rate is non-negative.
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix r(oqs::testing::random_density(4, rng, 0.01));
    CHECK(entropy_rate(r, {oqs::testing::random_hermitian(4, rng), oqs::testing::random_hermitian(4, rng)}) >= -1e-12);
  }
}

TEST_CASE("row and column sums of |L_ij|^2 agree") {
  std::mt19937_64 rng(36);
  for (int d : {2, 3, 5}) {
    const CMatrix l = oqs::testing::random_matrix(d, rng);
    CHECK(std::abs((l.adjoint() * l).trace() - (l * l.adjoint()).trace()) < 1e-12);
  }
}
