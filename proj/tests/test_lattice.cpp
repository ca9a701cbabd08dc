#include <doctest.h>

#include <cmath>

#include "mflab/lattice.hpp"
#include "mflab/random.hpp"

using namespace mflab;

namespace {

VectorXcd plane_wave(const Grid& g, int k) {
  VectorXcd phi(g.sites());
  const int m = g.points_per_axis();
  for (Index s = 0; s < g.sites(); ++s)
    phi[s] = std::exp(Complex(0.0, 2.0 * M_PI * k * double(s % m) / m));
  return phi;
}

// independent convolution oracle through an explicitly assembled circulant
VectorXd convolve_oracle(const Grid& g, const VectorXd& v, const VectorXd& rho) {
  MatrixXd circ(g.sites(), g.sites());
  for (Index x = 0; x < g.sites(); ++x)
    for (Index y = 0; y < g.sites(); ++y)
      circ(x, y) = v[g.displacement_index(x, y)];
  return circ * rho;
}

// dense forward-difference matrix for one axis
MatrixXd diff_matrix(const Grid& g, int axis) {
  MatrixXd d = MatrixXd::Zero(g.sites(), g.sites());
  for (Index s = 0; s < g.sites(); ++s) {
    d(s, g.neighbor(s, axis, +1)) += 1.0 / g.spacing();
    d(s, s) -= 1.0 / g.spacing();
  }
  return d;
}

MatrixXd kron2(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index r = 0; r < b.rows(); ++r)
    for (Index c = 0; c < b.cols(); ++c)
      out.block(r * a.rows(), c * a.cols(), a.rows(), a.cols()) = b(r, c) * a;
  return out;
}

}  // namespace

TEST_CASE("grid geometry") {
  Grid g(1, 8, 0.5);
  CHECK(g.sites() == 8);
  CHECK(g.length() == doctest::Approx(4.0));
  Grid g3(3, 4, 1.0);
  CHECK(g3.sites() == 64);
  // periodic distance symmetric and at most L/2 per axis
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Index x = Index(rng.raw() % g3.sites());
    const Index y = Index(rng.raw() % g3.sites());
    const Index rxy = g3.displacement_index(x, y);
    const Index ryx = g3.displacement_index(y, x);
    CHECK(g3.displacement_distance(rxy) ==
          doctest::Approx(g3.displacement_distance(ryx)));
    CHECK(g3.displacement_distance(rxy) <=
          std::sqrt(3.0) * g3.length() / 2.0 + 1e-12);
    CHECK(g3.negate_displacement(rxy) == ryx);
  }
  CHECK_THROWS_AS(Grid(2, 4, 1.0), ConfigError);
  CHECK_THROWS_AS(Grid(1, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(Grid(1, 4, -1.0), ConfigError);
}

TEST_CASE("potential spec invariants") {
  Grid g(1, 8, 1.0);
  auto pot = PotentialSpec::gaussian(g, 2.0, 1.5);
  CHECK(pot.sup_norm == doctest::Approx(pot.pair.cwiseAbs().maxCoeff()));
  CHECK(pot.l1_norm == doctest::Approx(pot.pair.cwiseAbs().sum()));
  // evenness violation rejected
  VectorXd bad = VectorXd::Zero(8);
  bad[1] = 1.0;
  CHECK_THROWS_AS(PotentialSpec::make(g, bad, VectorXd::Zero(8)), ConfigError);
}

TEST_CASE("one-body operator on constants and plane waves") {
  Grid g(1, 8, 0.7);
  auto pot = PotentialSpec::zero(g);
  VectorXcd ones = VectorXcd::Ones(8);
  CHECK(one_body_apply(g, pot, ones).norm() == doctest::Approx(0.0));

  for (int k = 0; k < 8; ++k) {
    const VectorXcd phi = plane_wave(g, k);
    const VectorXcd hphi = one_body_apply(g, pot, phi);
    const double omega = g.stencil_symbol({k});
    CHECK((hphi - omega * phi).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(omega == doctest::Approx((2.0 / (0.7 * 0.7)) *
                                   (1.0 - std::cos(2.0 * M_PI * k / 8))));
  }

  // constant external shifts by c
  auto pot_c = PotentialSpec::make(g, VectorXd::Zero(8),
                                   VectorXd::Constant(8, 3.25));
  Rng rng(3);
  const VectorXcd psi = random_normalized_vector(8, rng);
  const VectorXcd lhs = one_body_apply(g, pot_c, psi);
  const VectorXcd rhs = laplacian_apply(g, psi) + 3.25 * psi;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one-body operator Hermitian, spectrum in the stencil range") {
  Grid g(1, 8, 0.5);
  VectorXd ext(8);
  Rng rng(11);
  for (Index i = 0; i < 8; ++i) ext[i] = rng.gaussian();
  auto pot = PotentialSpec::make(g, VectorXd::Zero(8), ext);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXcd a = random_normalized_vector(8, rng);
    const VectorXcd b = random_normalized_vector(8, rng);
    const Complex lhs = a.dot(one_body_apply(g, pot, b));
    const Complex rhs = std::conj(b.dot(one_body_apply(g, pot, a)));
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(one_body_matrix(g, pot));
  CHECK(es.eigenvalues().minCoeff() >= ext.minCoeff() - 1e-12);
  CHECK(es.eigenvalues().maxCoeff() <=
        4.0 * g.dim() / (0.5 * 0.5) + ext.maxCoeff() + 1e-12);
}

TEST_CASE("convolution against delta cases and the circulant oracle") {
  Grid g(1, 8, 1.0);
  auto pot = PotentialSpec::gaussian(g, 1.0, 1.3);

  VectorXd rho = VectorXd::Zero(8);
  rho[3] = 1.0;
  const VectorXd out = convolve(g, pot.pair, rho);
  for (Index x = 0; x < 8; ++x)
    CHECK(out[x] == doctest::Approx(pot.pair[g.displacement_index(x, 3)]));

  auto delta = PotentialSpec::kronecker_delta(g, 2.5);
  Rng rng(5);
  VectorXd rho2(8);
  for (Index i = 0; i < 8; ++i) rho2[i] = rng.uniform();
  CHECK((convolve(g, delta.pair, rho2) - 2.5 * rho2).cwiseAbs().maxCoeff() <
        1e-12);

  const VectorXd oracle = convolve_oracle(g, pot.pair, rho2);
  CHECK((convolve(g, pot.pair, rho2) - oracle).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(convolve(g, pot.pair, rho2).cwiseAbs().maxCoeff() <=
        pot.sup_norm * rho2.sum() + 1e-12);
}

TEST_CASE("convolution symmetry") {
  Grid g(1, 8, 1.0);
  auto pot = PotentialSpec::box(g, 0.8, 2.0);
  Rng rng(17);
  VectorXd rho(8), sigma(8);
  for (Index i = 0; i < 8; ++i) {
    rho[i] = rng.uniform();
    sigma[i] = rng.uniform();
  }
  const double lhs = convolve(g, pot.pair, rho).dot(sigma);
  const double rhs = convolve(g, pot.pair, sigma).dot(rho);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("sobolev pair forms: constants, plane waves, dense oracle") {
  Grid g(1, 6, 0.8);
  const Index n = g.sites();

  VectorXcd constant = VectorXcd::Ones(n * n);
  CHECK(sobolev_pair_form(g, constant, PairFormKind::kProductSobolev) ==
        doctest::Approx(constant.squaredNorm()));
  CHECK(sobolev_pair_form(g, constant, PairFormKind::kMixedGradient) ==
        doctest::Approx(constant.squaredNorm()));

  // product of plane waves matches the stencil symbol
  for (int k1 : {1, 2}) {
    for (int k2 : {0, 3}) {
      const VectorXcd u = plane_wave(g, k1), v = plane_wave(g, k2);
      VectorXcd psi(n * n);
      for (Index y = 0; y < n; ++y) psi.segment(y * n, n) = v[y] * u;
      const double w1 = g.stencil_symbol({k1}), w2 = g.stencil_symbol({k2});
      CHECK(sobolev_pair_form(g, psi, PairFormKind::kProductSobolev) ==
            doctest::Approx((1 + w1) * (1 + w2) * psi.squaredNorm()));
      // in 1D the mixed symbol collapses to w1 w2 + w1 + w2 + 1 as well
      CHECK(sobolev_pair_form(g, psi, PairFormKind::kMixedGradient) ==
            doctest::Approx((w1 * w2 + w1 + w2 + 1) * psi.squaredNorm()));
    }
  }

  const MatrixXd d = diff_matrix(g, 0);
  const MatrixXd eye = MatrixXd::Identity(n, n);
  const MatrixXd lap1 = kron2(d.transpose() * d, eye);
  const MatrixXd lap2 = kron2(eye, d.transpose() * d);
  const MatrixXd mix = kron2(d, d);
  const MatrixXd big_eye = MatrixXd::Identity(n * n, n * n);
  const MatrixXd a_prod = big_eye + lap1 + lap2 + lap1 * lap2;
  const MatrixXd a_mix = mix.transpose() * mix + lap1 + lap2 + big_eye;
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXcd psi = random_normalized_vector(n * n, rng);
    const double prod = std::real(psi.dot(a_prod * psi));
    const double mixv = std::real(psi.dot(a_mix * psi));
    CHECK(sobolev_pair_form(g, psi, PairFormKind::kProductSobolev) ==
          doctest::Approx(prod).epsilon(1e-10));
    CHECK(sobolev_pair_form(g, psi, PairFormKind::kMixedGradient) ==
          doctest::Approx(mixv).epsilon(1e-10));
    CHECK(sobolev_pair_form(g, psi, PairFormKind::kProductSobolev) >=
          psi.squaredNorm() - 1e-12);
    CHECK(sobolev_pair_form(g, psi, PairFormKind::kMixedGradient) >=
          psi.squaredNorm() - 1e-12);
  }
}
