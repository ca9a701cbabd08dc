#include "mflab/hierarchy.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mflab {

namespace {

MatrixXcd kron_power(const MatrixXcd& g, int k) {
  MatrixXcd out = g;
  for (int j = 1; j < k; ++j) {
    // the new slot takes the highest stride, matching tuple indexing
    MatrixXcd next(out.rows() * g.rows(), out.cols() * g.cols());
    for (Index r = 0; r < g.rows(); ++r)
      for (Index c = 0; c < g.cols(); ++c)
        next.block(r * out.rows(), c * out.cols(), out.rows(), out.cols()) =
            g(r, c) * out;
    out = std::move(next);
  }
  return out;
}

Index tuple_coord(Index t, Index sites, int slot) {
  for (int j = 0; j < slot; ++j) t /= sites;
  return t % sites;
}

}  // namespace

MatrixXcd one_body_propagator(const Grid& grid, const PotentialSpec& pot,
                              double t) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(one_body_matrix(grid, pot));
  VectorXcd phases(grid.sites());
  for (Index j = 0; j < grid.sites(); ++j)
    phases[j] = std::exp(Complex(0.0, -t * es.eigenvalues()[j]));
  return es.eigenvectors().cast<Complex>() * phases.asDiagonal() *
         es.eigenvectors().transpose().cast<Complex>();
}

MatrixXcd free_evolution(const Grid& grid, const PotentialSpec& pot, int k,
                         double t, const MatrixXcd& gamma) {
  Index side = 1;
  for (int j = 0; j < k; ++j) side *= grid.sites();
  if (gamma.rows() != side || gamma.cols() != side)
    throw std::invalid_argument("free_evolution: shape mismatch");
  if (t == 0.0) return gamma;
  const MatrixXcd g1 = one_body_propagator(grid, pot, t);
  const MatrixXcd gk = kron_power(g1, k);
  return gk * gamma * gk.adjoint();
}

MatrixXcd collision_A(const Grid& grid, const VectorXd& pair, int k,
                      const MatrixXcd& gamma) {
  Index side = 1;
  for (int j = 0; j < k; ++j) side *= grid.sites();
  if (gamma.rows() != side || gamma.cols() != side)
    throw std::invalid_argument("collision_A: shape mismatch");
  if (pair.size() != grid.sites())
    throw std::invalid_argument("collision_A: potential shape mismatch");
  // total pair potential per k-tuple
  VectorXd vsum = VectorXd::Zero(side);
  for (Index t = 0; t < side; ++t)
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        vsum[t] += pair[grid.displacement_index(
            tuple_coord(t, grid.sites(), i), tuple_coord(t, grid.sites(), j))];
  MatrixXcd out(side, side);
  for (Index c = 0; c < side; ++c)
    for (Index r = 0; r < side; ++r)
      out(r, c) = Complex(0.0, -1.0) * (vsum[r] - vsum[c]) * gamma(r, c);
  return out;
}

MatrixXcd collision_B(const Grid& grid, const VectorXd& pair, int k,
                      const MatrixXcd& gamma_kplus1) {
  Index side = 1;
  for (int j = 0; j < k; ++j) side *= grid.sites();
  const Index sites = grid.sites();
  if (gamma_kplus1.rows() != side * sites ||
      gamma_kplus1.cols() != side * sites)
    throw std::invalid_argument("collision_B: shape mismatch");
  if (pair.size() != sites)
    throw std::invalid_argument("collision_B: potential shape mismatch");
  MatrixXcd out = MatrixXcd::Zero(side, side);
  for (Index c = 0; c < side; ++c)
    for (Index r = 0; r < side; ++r) {
      Complex acc = 0.0;
      for (Index z = 0; z < sites; ++z) {
        double kernel = 0.0;
        for (int j = 0; j < k; ++j)
          kernel += pair[grid.displacement_index(tuple_coord(r, sites, j), z)] -
                    pair[grid.displacement_index(tuple_coord(c, sites, j), z)];
        if (kernel != 0.0)
          acc += kernel * gamma_kplus1(r + z * side, c + z * side);
      }
      out(r, c) = Complex(0.0, -1.0) * acc;
    }
  return out;
}

double infinite_hierarchy_residual(const EffectiveConfig& cfg,
                                   const HartreeTrajectory& traj, int k,
                                   double t, double quad_dt) {
  const Grid& grid = cfg.grid;
  const int steps = static_cast<int>(std::llround(t / quad_dt));
  if (steps < 1 || std::abs(steps * quad_dt - t) > 1e-9)
    throw std::invalid_argument(
        "hierarchy residual: quad_dt must divide the time span");

  auto gamma_of = [&](double s, int order) {
    return pure_power_rdm(grid, traj.state_at(s), order).rho;
  };

  MatrixXcd acc = gamma_of(t, k) - free_evolution(grid, cfg.pot, k, t,
                                                  gamma_of(0.0, k));
  for (int q = 0; q <= steps; ++q) {
    const double s = q * quad_dt;
    const double w = (q == 0 || q == steps) ? 0.5 * quad_dt : quad_dt;
    const MatrixXcd b = collision_B(grid, cfg.pot.pair, k, gamma_of(s, k + 1));
    acc -= w * free_evolution(grid, cfg.pot, k, t - s, b);
  }
  return trace_norm(acc);
}

PicardResult picard_iterate(const DensityFamily& family0,
                            const EffectiveConfig& cfg,
                            const HartreeTrajectory& traj, double t,
                            int orders, const PicardOptions& opt) {
  const Grid& grid = cfg.grid;
  const int kmax = opt.k_max;
  if (kmax < 1 || static_cast<int>(family0.gammas.size()) < kmax)
    throw std::invalid_argument("picard: family must hold k = 1..k_max");
  if (!(t > 0)) throw std::invalid_argument("picard: t must be positive");
  const int steps = static_cast<int>(std::llround(t / opt.quad_dt));
  if (steps < 1 || std::abs(steps * opt.quad_dt - t) > 1e-9)
    throw std::invalid_argument("picard: quad_dt must divide the time span");
  const double dt = opt.quad_dt;

  // cached free propagators per level and per time offset
  std::vector<std::vector<MatrixXcd>> prop(kmax + 1);
  for (int k = 1; k <= kmax; ++k) {
    prop[k].resize(steps + 1);
    for (int q = 0; q <= steps; ++q)
      prop[k][q] = kron_power(one_body_propagator(grid, cfg.pot, q * dt), k);
  }
  auto free_k = [&](int k, int q, const MatrixXcd& g) -> MatrixXcd {
    if (q == 0) return g;
    return prop[k][q] * g * prop[k][q].adjoint();
  };

  // closure level: collision image of the Hartree-factorized (K_max+1)-body
  // family; the big (K_max+1)-body matrices stay transient
  std::vector<MatrixXcd> b_closure(steps + 1);
  for (int q = 0; q <= steps; ++q)
    b_closure[q] = collision_B(
        grid, cfg.pot.pair, kmax,
        pure_power_rdm(grid, traj.state_at(q * dt), kmax + 1).rho);

  // current iterate, per level and quadrature node
  std::vector<std::vector<MatrixXcd>> cur(kmax + 1);
  for (int k = 1; k <= kmax; ++k) {
    cur[k].resize(steps + 1);
    for (int q = 0; q <= steps; ++q)
      cur[k][q] = free_k(k, q, family0.gammas[k - 1]);
  }

  PicardResult res{{}, {}, DensityFamily{grid, {}}, orders > 0};
  for (int m = 1; m <= orders; ++m) {
    std::vector<std::vector<MatrixXcd>> next(kmax + 1);
    for (int k = 1; k <= kmax; ++k) {
      next[k].resize(steps + 1);
      for (int q = 0; q <= steps; ++q) {
        MatrixXcd acc = free_k(k, q, family0.gammas[k - 1]);
        for (int p = 0; p <= q && q > 0; ++p) {
          const double w = (p == 0 || p == q) ? 0.5 * dt : dt;
          const MatrixXcd integrand =
              (k == kmax) ? b_closure[p]
                          : collision_B(grid, cfg.pot.pair, k, cur[k + 1][p]);
          acc += w * free_k(k, q - p, integrand);
        }
        next[k][q] = std::move(acc);
      }
    }
    std::vector<double> level_inc(kmax);
    for (int k = 1; k <= kmax; ++k)
      level_inc[k - 1] = trace_norm(next[k][steps] - cur[k][steps]);
    res.increments.push_back(level_inc[0]);
    res.increments_by_level.push_back(std::move(level_inc));
    cur = std::move(next);
  }

  for (int k = 1; k <= kmax; ++k)
    res.final_family.gammas.push_back(cur[k][steps]);
  return res;
}

}  // namespace mflab
