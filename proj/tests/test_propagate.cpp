#include <doctest.h>

#include <cmath>

#include "mflab/fock.hpp"
#include "mflab/propagate.hpp"
#include "mflab/random.hpp"

using namespace mflab;

namespace {

struct DenseOp {
  MatrixXcd h;
  Index rows() const { return h.rows(); }
  void apply(const VectorXcd& in, VectorXcd& out) const { out = h * in; }
};

KrylovOptions with_tol(double tol) {
  KrylovOptions o;
  o.tol = tol;
  return o;
}

}  // namespace

TEST_CASE("evolve at t = 0 is the identity") {
  Rng rng(1);
  DenseOp op{random_hermitian(12, rng)};
  const VectorXcd v = random_normalized_vector(12, rng);
  const VectorXcd w = krylov_expm(op, v, 0.0);
  CHECK((w - v).norm() == 0.0);
}

TEST_CASE("diagonal operator gives coefficientwise phases") {
  Rng rng(2);
  const Index n = 24;
  VectorXd diag(n);
  for (Index i = 0; i < n; ++i) diag[i] = 4.0 * rng.gaussian();
  DenseOp op{MatrixXcd(diag.cast<Complex>().asDiagonal())};
  const VectorXcd v = random_normalized_vector(n, rng);
  const double t = 0.83;
  const VectorXcd w = krylov_expm(op, v, t, with_tol(1e-12));
  for (Index i = 0; i < n; ++i) {
    const Complex expect = std::exp(Complex(0.0, -diag[i] * t)) * v[i];
    CHECK(std::abs(w[i] - expect) < 1e-10);
  }
}

TEST_CASE("krylov matches the dense oracle on small many-body sectors") {
  Rng rng(3);
  for (const int m : {4, 6}) {
    Grid g(1, m, 1.0);
    VectorXd pair(g.sites());
    for (Index r = 0; r < g.sites(); ++r) pair[r] = rng.uniform();
    for (Index r = 0; r < g.sites(); ++r) {
      const Index nr = g.negate_displacement(r);
      pair[r] = pair[nr] = 0.5 * (pair[r] + pair[nr]);
    }
    auto pot = PotentialSpec::make(g, pair, VectorXd::Zero(g.sites()));
    auto basis = std::make_shared<const FockBasis>(g, Sector::fixed(2));
    const ManyBodyHamiltonian ham(basis, pot, 2.0);
    const MatrixXcd hdense = dense_matrix(ham);
    const VectorXcd psi0 = random_normalized_vector(basis->dim(), rng);
    for (const double t : {0.1, 0.35, 0.7, 1.0}) {
      const VectorXcd krylov = krylov_expm(ham, psi0, t, with_tol(1e-10));
      const VectorXcd oracle = dense_expm_oracle(hdense, psi0, t);
      CHECK((krylov - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("dense oracle refusals and the scaled-identity phase") {
  const Index n = 6;
  MatrixXcd h = 2.5 * MatrixXcd::Identity(n, n);
  Rng rng(4);
  const VectorXcd v = random_normalized_vector(n, rng);
  const VectorXcd w = dense_expm_oracle(h, v, 1.2);
  const Complex phase = std::exp(Complex(0.0, -2.5 * 1.2));
  CHECK((w - phase * v).cwiseAbs().maxCoeff() < 1e-13);

  MatrixXcd bad = h;
  bad(0, 1) = 1e-6;  // clearly non-Hermitian
  CHECK_THROWS_AS(dense_expm_oracle(bad, v, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dense_expm_oracle(h, v, 1.0, /*dense_cap=*/4), BudgetError);
}

TEST_CASE("unitarity, group law, and conservation on random operators") {
  Rng rng(5);
  const Index n = 40;
  DenseOp op{random_hermitian(n, rng) * 3.0};
  const VectorXcd v = random_normalized_vector(n, rng);
  const double tol = 1e-10;
  const VectorXcd w1 = krylov_expm(op, v, 0.4, with_tol(tol));
  CHECK(std::abs(w1.norm() - 1.0) <= tol * 10);

  const VectorXcd w2 = krylov_expm(op, w1, 0.35, with_tol(tol));
  const VectorXcd w12 = krylov_expm(op, v, 0.75, with_tol(tol));
  CHECK((w2 - w12).norm() <= 10 * tol);

  VectorXcd hv, hw;
  op.apply(v, hv);
  op.apply(w12, hw);
  const double e0 = std::real(v.dot(hv));
  const double e1 = std::real(w12.dot(hw));
  CHECK(std::abs(e1 - e0) <= tol * (1.0 + std::abs(e0)) * 100);

  // negative times run the inverse
  const VectorXcd back = krylov_expm(op, w12, -0.75, with_tol(tol));
  CHECK((back - v).norm() <= 100 * tol);
}

TEST_CASE("sector-wise evolution of cutoff states conserves blocks") {
  Grid g(1, 4, 1.0);
  auto pot = PotentialSpec::gaussian(g, 1.0, 1.2);
  auto basis = std::make_shared<const FockBasis>(g, Sector::cutoff(4));
  const ManyBodyHamiltonian ham(basis, pot, 3.0);
  Rng rng(6);
  FockVector psi{basis, random_normalized_vector(basis->dim(), rng), 0.0};
  const FockVector out = evolve_state(ham, psi, 0.6, with_tol(1e-10));
  // per-sector mass is conserved (H commutes with the number operator)
  for (int b = 0; b < basis->sector_count(); ++b) {
    const double before =
        psi.coeffs.segment(basis->sector_offset(b), basis->sector_dim(b))
            .norm();
    const double after =
        out.coeffs.segment(basis->sector_offset(b), basis->sector_dim(b))
            .norm();
    CHECK(after == doctest::Approx(before).epsilon(1e-9));
  }
  // whole-vector result agrees with the dense oracle on the full space
  const VectorXcd oracle =
      dense_expm_oracle(dense_matrix(ham), psi.coeffs, 0.6);
  CHECK((out.coeffs - oracle).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("bad arguments are rejected") {
  Rng rng(7);
  DenseOp op{random_hermitian(5, rng)};
  const VectorXcd v = random_normalized_vector(5, rng);
  CHECK_THROWS(krylov_expm(op, v, std::nan("")));
  CHECK_THROWS(krylov_expm(op, v, 1.0, with_tol(-1.0)));
}
