#include <doctest.h>

#include <cmath>

#include "mflab/fock.hpp"
#include "mflab/marginals.hpp"
#include "mflab/propagate.hpp"
#include "mflab/random.hpp"

using namespace mflab;

TEST_CASE("marginals of factorized states are projector powers") {
  Grid g(1, 4, 1.0);
  Rng rng(1);
  const VectorXcd phi = random_normalized_vector(4, rng);
  const FockVector psi = factorized_state(g, phi, 3);
  for (int k = 1; k <= 2; ++k) {
    const ReducedDensityMatrix got = reduce(psi, k);
    const ReducedDensityMatrix want = pure_power_rdm(g, phi, k);
    CHECK((got.rho - want.rho).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(got.rho.trace().real() - 1.0) < 1e-10);
    CHECK((got.rho - got.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("marginal of a coherent state is the orbital projector") {
  Grid g(1, 3, 1.0);
  Rng rng(2);
  VectorXcd phi = random_normalized_vector(3, rng);
  const double scale = 2.0;  // mean particle number 4
  const FockVector psi = coherent_state(g, scale * phi);
  const ReducedDensityMatrix gamma = reduce(psi, 1);
  const ReducedDensityMatrix want = pure_power_rdm(g, phi, 1);
  CHECK((gamma.rho - want.rho).cwiseAbs().maxCoeff() <
        std::max(1e-10, 10 * psi.leakage));
}

TEST_CASE("two-mode entangled state against the explicit partial trace") {
  Grid g(1, 2, 1.0);
  auto basis = std::make_shared<const FockBasis>(g, Sector::fixed(2));
  REQUIRE(basis->dim() == 3);
  Rng rng(3);
  FockVector psi{basis, random_normalized_vector(3, rng), 0.0};
  // occupations in lex order: (0,2), (1,1), (2,0)
  const Complex c02 = psi.coeffs[0], c11 = psi.coeffs[1], c20 = psi.coeffs[2];
  // symmetric wave function and its one-body partial trace
  MatrixXcd wave = MatrixXcd::Zero(2, 2);
  wave(1, 1) = c02;
  wave(0, 0) = c20;
  wave(0, 1) = wave(1, 0) = c11 / std::sqrt(2.0);
  MatrixXcd oracle = MatrixXcd::Zero(2, 2);
  for (Index x = 0; x < 2; ++x)
    for (Index y = 0; y < 2; ++y)
      for (Index z = 0; z < 2; ++z)
        oracle(x, y) += wave(x, z) * std::conj(wave(y, z));
  oracle /= oracle.trace().real();

  const ReducedDensityMatrix gamma = reduce(psi, 1);
  CHECK((gamma.rho - oracle).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gamma.rho);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("trace distance basics") {
  Grid g(1, 4, 1.0);
  Rng rng(4);
  const VectorXcd phi = random_normalized_vector(4, rng);
  const ReducedDensityMatrix p = pure_power_rdm(g, phi, 1);
  CHECK(trace_distance(p, p) == doctest::Approx(0.0));

  // orthogonal rank-one projectors sit at distance two
  VectorXcd chi = random_normalized_vector(4, rng);
  chi -= phi.dot(chi) * phi;
  chi /= chi.norm();
  const ReducedDensityMatrix q = pure_power_rdm(g, chi, 1);
  CHECK(trace_distance(p, q) == doctest::Approx(2.0).epsilon(1e-12));

  // overlap c gives 2 sqrt(1 - c^2)
  for (const double c : {0.2, 0.5, 0.9}) {
    const VectorXcd mix = c * phi + std::sqrt(1 - c * c) * chi;
    const ReducedDensityMatrix r = pure_power_rdm(g, mix, 1);
    CHECK(trace_distance(p, r) ==
          doctest::Approx(2.0 * std::sqrt(1.0 - c * c)).epsilon(1e-10));
  }
}

TEST_CASE("observable expectations") {
  Grid g(1, 4, 1.0);
  Rng rng(5);
  const VectorXcd phi = random_normalized_vector(4, rng);
  const ReducedDensityMatrix gamma = pure_power_rdm(g, phi, 1);
  CHECK(std::abs(observable_expectation(gamma, MatrixXcd::Identity(4, 4)) -
                 1.0) < 1e-12);
  CHECK(std::abs(observable_expectation(gamma, phi * phi.adjoint()) - 1.0) <
        1e-12);

  // |Tr J gamma| <= |J|_op Tr|gamma| on random pairs
  for (int trial = 0; trial < 25; ++trial) {
    const MatrixXcd j = random_hermitian(4, rng);
    const MatrixXcd h = random_hermitian(4, rng);
    const ReducedDensityMatrix r{g, 1, h};
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(j, Eigen::EigenvaluesOnly);
    const double opnorm = es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(std::abs(observable_expectation(r, j)) <=
          opnorm * trace_norm(h) + 1e-10);
  }
}

TEST_CASE("rank-one shortcut equates trace norm and twice the op norm") {
  Grid g(1, 4, 1.0);
  Rng rng(6);
  const VectorXcd phi = random_normalized_vector(4, rng);
  const ReducedDensityMatrix p = pure_power_rdm(g, phi, 1);
  const RankOneDistance zero = trace_distance_rank_one(p, phi);
  CHECK(zero.trace_norm == doctest::Approx(0.0));

  VectorXcd chi = random_normalized_vector(4, rng);
  chi -= phi.dot(chi) * phi;
  chi /= chi.norm();
  const RankOneDistance two =
      trace_distance_rank_one(pure_power_rdm(g, chi, 1), phi);
  CHECK(two.trace_norm == doctest::Approx(2.0));
  CHECK(two.twice_op_norm == doctest::Approx(2.0));

  // marginal of a genuinely evolved state
  auto pot = PotentialSpec::gaussian(g, 1.0, 1.3);
  const FockVector psi0 = factorized_state(g, phi, 3);
  const ManyBodyHamiltonian ham(psi0.basis, pot, 3.0);
  const FockVector psi = evolve_state(ham, psi0, 0.4, {});
  const ReducedDensityMatrix gamma = reduce(psi, 1);
  const RankOneDistance d = trace_distance_rank_one(gamma, phi);
  CHECK(std::abs(d.trace_norm - d.twice_op_norm) < 1e-8);
}

TEST_CASE("partial trace consistency for fixed-number states") {
  Grid g(1, 3, 1.0);
  Rng rng(7);
  auto basis = std::make_shared<const FockBasis>(g, Sector::fixed(3));
  FockVector psi{basis, random_normalized_vector(basis->dim(), rng), 0.0};
  const ReducedDensityMatrix g2 = reduce(psi, 2);
  const ReducedDensityMatrix g1 = reduce(psi, 1);
  const MatrixXcd traced = partial_trace_last(g2.rho, g.sites(), 2);
  CHECK((traced - g1.rho).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("partial trace contracts the trace norm") {
  Grid g(1, 3, 1.0);
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const MatrixXcd gamma = random_hermitian(9, rng);
    CHECK(trace_norm(partial_trace_last(gamma, 3, 2)) <=
          trace_norm(gamma) + 1e-10);
  }
}

TEST_CASE("reduce input validation") {
  Grid g(1, 4, 1.0);
  Rng rng(9);
  const VectorXcd phi = random_normalized_vector(4, rng);
  const FockVector psi = factorized_state(g, phi, 2);
  CHECK_THROWS_AS(reduce(psi, 3), std::invalid_argument);  // k > content
  CHECK_THROWS_AS(reduce(psi, 0), std::invalid_argument);
  CHECK_THROWS_AS(reduce(psi, 2, /*dense_cap=*/5), BudgetError);
  FockVector empty{psi.basis, VectorXcd::Zero(psi.basis->dim()), 0.0};
  CHECK_THROWS(reduce(empty, 1));
}
