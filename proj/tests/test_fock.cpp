#include <doctest.h>

#include <cmath>

#include "mflab/fock.hpp"
#include "mflab/propagate.hpp"
#include "mflab/random.hpp"

using namespace mflab;

namespace {

std::shared_ptr<const FockBasis> cutoff_basis(const Grid& g, int cap) {
  return std::make_shared<const FockBasis>(g, Sector::cutoff(cap));
}

VectorXcd random_f(const Grid& g, Rng& rng, double scale = 1.0) {
  VectorXcd f(g.sites());
  for (Index i = 0; i < g.sites(); ++i) f[i] = scale * rng.cgauss();
  return f;
}

FockVector random_state(std::shared_ptr<const FockBasis> b, Rng& rng) {
  FockVector psi{std::move(b), {}, 0.0};
  psi.coeffs = random_normalized_vector(psi.basis->dim(), rng);
  return psi;
}

}  // namespace

TEST_CASE("basis dimensions and index round trips") {
  Grid g4(1, 4, 1.0), g6(1, 6, 1.0);
  FockBasis f42(g4, Sector::fixed(2));
  FockBasis f62(g6, Sector::fixed(2));
  CHECK(f42.dim() == 10);  // C(5,2)
  CHECK(f62.dim() == 21);  // C(7,2)
  FockBasis cut(g4, Sector::cutoff(3));
  CHECK(cut.dim() == 1 + 4 + 10 + 20);

  for (const FockBasis* b : {&f42, &f62, &cut}) {
    for (Index i = 0; i < b->dim(); ++i) {
      int total = 0;
      for (int x = 0; x < b->modes(); ++x) total += b->occupation(i)[x];
      CHECK(total == b->total_occupation(i));
      CHECK(b->index_of(b->occupation(i), total) == i);
    }
  }

  // lexicographic within a sector, sectors ascending
  for (Index i = 1; i < cut.dim(); ++i) {
    const int ta = cut.total_occupation(i - 1), tb = cut.total_occupation(i);
    CHECK(ta <= tb);
    if (ta == tb) {
      const auto *a = cut.occupation(i - 1), *b = cut.occupation(i);
      CHECK(std::lexicographical_compare(a, a + 4, b, b + 4));
    }
  }
}

TEST_CASE("creation from vacuum and factorized sector states") {
  Grid g(1, 4, 1.0);
  auto basis = cutoff_basis(g, 3);
  Rng rng(2);
  const VectorXcd f = random_f(g, rng);

  const FockVector one = apply_create(f, vacuum(basis));
  for (Index x = 0; x < 4; ++x) {
    std::uint8_t occ[4] = {0, 0, 0, 0};
    occ[x] = 1;
    CHECK(std::abs(one.coeffs[basis->index_of(occ, 1)] - f[x]) < 1e-14);
  }

  // (a*(f))^n Omega / sqrt(n!) reproduces the normalized product state
  const VectorXcd fn = f / f.norm();
  FockVector power = vacuum(basis);
  for (int j = 0; j < 3; ++j) power = apply_create(fn, power);
  power.coeffs /= std::sqrt(6.0);  // 3!
  const FockVector prod = factorized_state(g, fn, 3);
  const FockBasis& f3 = *prod.basis;
  for (Index i = 0; i < f3.dim(); ++i) {
    const Index big = basis->index_of(f3.occupation(i), 3);
    CHECK(std::abs(power.coeffs[big] - prod.coeffs[i]) < 1e-12);
  }
}

TEST_CASE("annihilation of the vacuum and adjointness") {
  Grid g(1, 4, 1.0);
  auto basis = cutoff_basis(g, 3);
  Rng rng(4);
  const VectorXcd f = random_f(g, rng);
  CHECK(apply_annihilate(f, vacuum(basis)).coeffs.norm() == 0.0);

  // <a*(f) psi, chi> = <psi, a(f) chi> on random pairs
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXcd ff = random_f(g, rng);
    const FockVector psi = random_state(basis, rng);
    const FockVector chi = random_state(basis, rng);
    const Complex lhs = inner(apply_create(ff, psi), chi);
    const Complex rhs = inner(psi, apply_annihilate(ff, chi));
    // adjointness holds exactly below the cap; strip the top sector
    FockVector psi_low = psi;
    psi_low.coeffs.segment(basis->sector_offset(3), basis->sector_dim(3))
        .setZero();
    FockVector chi_low = chi;
    chi_low.coeffs.segment(basis->sector_offset(3), basis->sector_dim(3))
        .setZero();
    const Complex lhs2 = inner(apply_create(ff, psi_low), chi_low);
    const Complex rhs2 = inner(psi_low, apply_annihilate(ff, chi_low));
    CHECK(std::abs(lhs2 - rhs2) < 1e-12);
    (void)lhs;
    (void)rhs;
  }

  // dense-matrix adjointness oracle at m = 4, n_max = 3
  struct CreateOp {
    const FockBasis* b;
    VectorXcd f;
    Index rows() const { return b->dim(); }
    void apply(const VectorXcd& in, VectorXcd& out) const {
      FockVector psi{std::shared_ptr<const FockBasis>(b, [](auto*) {}), in, 0};
      out = apply_create(f, psi).coeffs;
    }
  };
  struct AnnihilateOp {
    const FockBasis* b;
    VectorXcd f;
    Index rows() const { return b->dim(); }
    void apply(const VectorXcd& in, VectorXcd& out) const {
      FockVector psi{std::shared_ptr<const FockBasis>(b, [](auto*) {}), in, 0};
      out = apply_annihilate(f, psi).coeffs;
    }
  };
  const VectorXcd ff = random_f(g, rng);
  const MatrixXcd cr = dense_matrix(CreateOp{basis.get(), ff});
  const MatrixXcd an = dense_matrix(AnnihilateOp{basis.get(), ff});
  // adjoint up to the top-sector truncation rows
  MatrixXcd defect = cr - an.adjoint();
  const Index off = basis->sector_offset(3);
  defect.block(off, 0, basis->sector_dim(3), basis->dim()).setZero();
  CHECK(defect.cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("creation past the cap reports the lost norm exactly") {
  Grid g(1, 2, 1.0);
  auto basis = cutoff_basis(g, 2);
  Rng rng(9);
  const VectorXcd f = random_f(g, rng);
  FockVector top{basis, VectorXcd::Zero(basis->dim()), 0.0};
  // populate only the top sector
  top.coeffs.segment(basis->sector_offset(2), basis->sector_dim(2)) =
      random_normalized_vector(basis->sector_dim(2), rng);
  const FockVector out = apply_create(f, top);
  // everything must leak: a*(f) maps the top sector out of the basis
  CHECK(out.coeffs.norm() == 0.0);
  // exact lost norm via a wider basis
  auto wide = cutoff_basis(g, 3);
  FockVector top_wide{wide, VectorXcd::Zero(wide->dim()), 0.0};
  for (Index i = 0; i < basis->dim(); ++i)
    top_wide.coeffs[wide->index_of(basis->occupation(i),
                                   basis->total_occupation(i))] =
        top.coeffs[i];
  const double actual = apply_create(f, top_wide).coeffs.squaredNorm();
  CHECK(out.leakage == doctest::Approx(actual).epsilon(1e-12));
}

TEST_CASE("number operator and moments") {
  Grid g(1, 3, 1.0);
  auto basis = cutoff_basis(g, 4);
  Rng rng(6);
  const FockVector psi = random_state(basis, rng);
  const FockVector npsi = apply_number(psi);
  for (Index i = 0; i < basis->dim(); ++i)
    CHECK(npsi.coeffs[i] ==
          double(basis->total_occupation(i)) * psi.coeffs[i]);
  // moment of the vacuum vanishes
  CHECK(number_moment(vacuum(basis), 1) == 0.0);
}

TEST_CASE("canonical commutation relation with headroom") {
  Grid g(1, 4, 1.0);
  auto basis = cutoff_basis(g, 4);
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXcd f = random_f(g, rng), gg = random_f(g, rng);
    FockVector psi = random_state(basis, rng);
    // keep two sectors of headroom so the commutator is exact
    psi.coeffs.segment(basis->sector_offset(3),
                       basis->dim() - basis->sector_offset(3))
        .setZero();
    const FockVector lhs =
        apply_annihilate(f, apply_create(gg, psi));
    const FockVector rhs = apply_create(gg, apply_annihilate(f, psi));
    const Complex ip = f.dot(gg);  // <f, g>
    const VectorXcd defect = lhs.coeffs - rhs.coeffs - ip * psi.coeffs;
    CHECK(defect.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ladder bounds against the number operator") {
  Grid g(1, 4, 1.0);
  auto basis = cutoff_basis(g, 4);
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorXcd f = random_f(g, rng);
    const FockVector psi = random_state(basis, rng);
    const double a_norm = apply_annihilate(f, psi).coeffs.norm();
    const double c_norm = apply_create(f, psi).coeffs.norm();
    const double fnorm = f.norm();
    const double half_moment = std::sqrt(number_moment(psi, 1));
    double plus_moment = 0.0;
    for (int b = 0; b < basis->sector_count(); ++b)
      plus_moment +=
          (b + 1.0) * psi.coeffs.segment(basis->sector_offset(b),
                                         basis->sector_dim(b)).squaredNorm();
    plus_moment = std::sqrt(plus_moment);
    CHECK(a_norm <= fnorm * half_moment + 1e-10);
    CHECK(c_norm <= fnorm * plus_moment + 1e-10);
  }
}

TEST_CASE("hamiltonian on the vacuum and the one-particle sector") {
  Grid g(1, 5, 0.8);
  Rng rng(12);
  VectorXd ext(5);
  for (Index i = 0; i < 5; ++i) ext[i] = rng.uniform();
  auto pot = PotentialSpec::gaussian(g, 0.7, 1.1, ext);
  auto basis = cutoff_basis(g, 2);
  const ManyBodyHamiltonian ham(basis, pot, 3.0);

  VectorXcd hv;
  ham.apply(vacuum(basis).coeffs, hv);
  CHECK(hv.norm() == 0.0);

  // one-particle block acts as the one-body operator
  VectorXcd phi = random_normalized_vector(5, rng);
  FockVector psi{basis, VectorXcd::Zero(basis->dim()), 0.0};
  for (Index x = 0; x < 5; ++x) {
    std::uint8_t occ[5] = {0, 0, 0, 0, 0};
    occ[x] = 1;
    psi.coeffs[basis->index_of(occ, 1)] = phi[x];
  }
  ham.apply(psi.coeffs, hv);
  const VectorXcd expect = one_body_apply(g, pot, phi);
  for (Index x = 0; x < 5; ++x) {
    std::uint8_t occ[5] = {0, 0, 0, 0, 0};
    occ[x] = 1;
    CHECK(std::abs(hv[basis->index_of(occ, 1)] - expect[x]) < 1e-12);
  }
}

TEST_CASE("doubly occupied site diagonal") {
  Grid g(1, 4, 0.5);
  auto pot = PotentialSpec::gaussian(g, 1.3, 1.0);
  auto basis = std::make_shared<const FockBasis>(g, Sector::fixed(2));
  const double n_param = 7.0;
  const ManyBodyHamiltonian ham(basis, pot, n_param);
  std::uint8_t occ[4] = {0, 2, 0, 0};
  const Index i = basis->index_of(occ, 2);
  // kinetic diagonal 2 * (2 dim / h^2) plus the normal-ordered V(0)/N
  const double expected = 2.0 * (2.0 / (0.5 * 0.5)) + pot.pair[0] / n_param;
  CHECK(ham.diagonal(i) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hamiltonian is Hermitian and commutes with the number operator") {
  Grid g(1, 4, 1.0);
  auto pot = PotentialSpec::gaussian(g, 0.9, 1.2);
  auto basis = cutoff_basis(g, 3);
  const ManyBodyHamiltonian ham(basis, pot, 2.0);
  const MatrixXcd h = dense_matrix(ham);
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(14);
  const FockVector psi = random_state(basis, rng);
  VectorXcd hn, nh;
  ham.apply(apply_number(psi).coeffs, hn);
  VectorXcd hpsi;
  ham.apply(psi.coeffs, hpsi);
  nh = apply_number(FockVector{basis, hpsi, 0.0}).coeffs;
  const double scale = hpsi.norm();
  CHECK((hn - nh).norm() <= 1e-10 * std::max(1.0, scale));
}

TEST_CASE("fixed-sector expectation matches the first-quantized oracle") {
  Grid g(1, 4, 1.0);
  auto pot = PotentialSpec::gaussian(g, 1.1, 1.4);
  auto basis = std::make_shared<const FockBasis>(g, Sector::fixed(2));
  const ManyBodyHamiltonian ham(basis, pot, 2.0);
  Rng rng(16);
  FockVector psi{basis, random_normalized_vector(basis->dim(), rng), 0.0};

  // symmetric two-particle wave function from the occupation amplitudes:
  // |2_x> -> delta_{x,x}, |1_x 1_y> -> (|xy> + |yx>)/sqrt(2)
  const Index n = 4;
  VectorXcd wave = VectorXcd::Zero(n * n);
  for (Index i = 0; i < basis->dim(); ++i) {
    const std::uint8_t* occ = basis->occupation(i);
    std::vector<Index> sites;
    for (Index x = 0; x < n; ++x)
      for (int c = 0; c < occ[x]; ++c) sites.push_back(x);
    const Index a = sites[0], b = sites[1];
    if (a == b) {
      wave[a + n * a] += psi.coeffs[i];
    } else {
      wave[a + n * b] += psi.coeffs[i] / std::sqrt(2.0);
      wave[b + n * a] += psi.coeffs[i] / std::sqrt(2.0);
    }
  }
  CHECK(wave.norm() == doctest::Approx(1.0));

  const MatrixXd h1 = one_body_matrix(g, pot);
  MatrixXcd h2 = MatrixXcd::Zero(n * n, n * n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) {
      for (Index xp = 0; xp < n; ++xp)
        h2(x + n * y, xp + n * y) += h1(x, xp);
      for (Index yp = 0; yp < n; ++yp)
        h2(x + n * y, x + n * yp) += h1(y, yp);
      h2(x + n * y, x + n * y) +=
          pot.pair[g.displacement_index(x, y)] / 2.0;  // (1/N) V, N = 2
    }
  VectorXcd hpsi;
  ham.apply(psi.coeffs, hpsi);
  const double second_quantized = std::real(psi.coeffs.dot(hpsi));
  const double first_quantized = std::real(wave.dot(h2 * wave));
  CHECK(second_quantized == doctest::Approx(first_quantized).epsilon(1e-12));
}

TEST_CASE("weyl operator identities") {
  Grid g(1, 3, 1.0);
  Rng rng(18);
  const VectorXcd f = random_f(g, rng, 0.5);
  const VectorXcd gg = random_f(g, rng, 0.5);
  auto basis = cutoff_basis(g, coherent_cutoff_policy(
                                    std::max(f.squaredNorm(),
                                             (f + gg).squaredNorm()) +
                                    2.0));

  // W(0) is the identity
  const FockVector psi = random_state(basis, rng);
  const FockVector same = weyl_apply(VectorXcd::Zero(3), psi);
  CHECK((same.coeffs - psi.coeffs).norm() < 1e-14);

  // overlap of two coherent states
  const FockVector wf = weyl_apply(f, vacuum(basis));
  const FockVector wg = weyl_apply(gg, vacuum(basis));
  const Complex overlap = inner(wf, wg);
  const Complex expected =
      std::exp(-0.5 * (f.squaredNorm() + gg.squaredNorm()) + f.dot(gg));
  CHECK(std::abs(overlap - expected) < 1e-8);

  // composition law W(f) W(g) = e^{-i Im<f,g>} W(f+g)
  const FockVector lhs = weyl_apply(f, wg);
  FockVector rhs = weyl_apply(f + gg, vacuum(basis));
  const Complex phase = std::exp(Complex(0.0, -std::imag(f.dot(gg))));
  CHECK((lhs.coeffs - phase * rhs.coeffs).norm() < 1e-8);

  // unitary up to the reported leakage
  CHECK(std::abs(wf.coeffs.norm() - 1.0) <= std::sqrt(wf.leakage) + 1e-10);
}

TEST_CASE("coherent state: closed form equals the weyl route") {
  Grid g(1, 3, 1.0);
  Rng rng(20);
  const VectorXcd f = random_f(g, rng, 0.8);
  // a few sectors beyond the policy cap push the truncation gap between the
  // two routes below the comparison tolerance
  auto basis =
      cutoff_basis(g, coherent_cutoff_policy(f.squaredNorm()) + 6);
  const FockVector direct = coherent_state(basis, f);
  const FockVector viaweyl = weyl_apply(f, vacuum(basis));
  CHECK((direct.coeffs - viaweyl.coeffs).norm() < 1e-10);
  CHECK(direct.leakage < 1e-10);

  // f = 0 gives the vacuum
  const FockVector zero = coherent_state(g, VectorXcd::Zero(3));
  CHECK(std::abs(zero.coeffs[0] - 1.0) < 1e-15);
  CHECK(zero.coeffs.tail(zero.coeffs.size() - 1).norm() == 0.0);

  // eigenvector of annihilation: a(g) psi(f) = <g, f> psi(f); the defect is
  // confined to the top sector, whose upward neighbor was truncated away
  const VectorXcd gg = random_f(g, rng);
  const FockVector lowered = apply_annihilate(gg, direct);
  const Complex ip = gg.dot(f);
  const FockBasis& bb = *direct.basis;
  const double top_mass =
      direct.coeffs
          .segment(bb.sector_offset(bb.sector_count() - 1),
                   bb.sector_dim(bb.sector_count() - 1))
          .norm();
  CHECK((lowered.coeffs - ip * direct.coeffs).norm() <=
        std::max(1e-10, 2.0 * std::abs(ip) * top_mass));

  // Poisson number statistics
  const double lambda = f.squaredNorm();
  CHECK(number_moment(direct, 1) == doctest::Approx(lambda).epsilon(1e-9));
  const double second = number_moment(direct, 2);
  CHECK(second - lambda * lambda == doctest::Approx(lambda).epsilon(1e-8));
  // per-sector probability e^-l l^n / n!
  const FockBasis& b = *direct.basis;
  double fact = 1.0;
  for (int n = 0; n <= 4; ++n) {
    if (n > 0) fact *= n;
    const double prob =
        direct.coeffs.segment(b.sector_offset(n), b.sector_dim(n))
            .squaredNorm();
    CHECK(prob == doctest::Approx(std::exp(-lambda) * std::pow(lambda, n) /
                                  fact)
                      .epsilon(1e-9));
  }
}

TEST_CASE("factorized state amplitudes on two sites") {
  Grid g(1, 2, 1.0);
  VectorXcd phi(2);
  phi << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const FockVector psi = factorized_state(g, phi, 2);
  CHECK(psi.coeffs.size() == 3);
  // lexicographic: (0,2), (1,1), (2,0)
  CHECK(std::abs(psi.coeffs[0] - 0.5) < 1e-14);
  CHECK(std::abs(psi.coeffs[1] - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(psi.coeffs[2] - 0.5) < 1e-14);
  CHECK(psi.norm() == doctest::Approx(1.0));

  // n = 1 reduces to the orbital amplitudes
  Grid g4(1, 4, 1.0);
  Rng rng(22);
  const VectorXcd orb = random_normalized_vector(4, rng);
  const FockVector one = factorized_state(g4, orb, 1);
  for (Index x = 0; x < 4; ++x) {
    std::uint8_t occ[4] = {0, 0, 0, 0};
    occ[x] = 1;
    CHECK(std::abs(one.coeffs[one.basis->index_of(occ, 1)] - orb[x]) < 1e-14);
  }
}
