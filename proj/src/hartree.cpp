#include "mflab/hartree.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mflab {

const VectorXcd& HartreeTrajectory::state_at(double t) const {
  const double pos = dt > 0 ? t / dt : 0.0;
  const auto idx = static_cast<std::ptrdiff_t>(std::llround(pos));
  if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(states.size()) ||
      std::abs(pos - double(idx)) > 1e-6)
    throw std::invalid_argument(
        "trajectory: requested time is not on the sample grid");
  return states[static_cast<std::size_t>(idx)];
}

namespace {

struct Splitter {
  const EffectiveConfig* cfg;
  MatrixXd vecs;    // eigenbasis of -Delta + V_ext
  VectorXd vals;

  explicit Splitter(const EffectiveConfig& c) : cfg(&c) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(
        one_body_matrix(c.grid, c.pot));
    vecs = es.eigenvectors();
    vals = es.eigenvalues();
  }

  void linear_half(VectorXcd& phi, double dt) const {
    VectorXcd modes = vecs.transpose() * phi;
    for (Index j = 0; j < modes.size(); ++j)
      modes[j] *= std::exp(Complex(0.0, -0.5 * dt * vals[j]));
    phi = vecs * modes;
  }

  void nonlinear_full(VectorXcd& phi, double dt) const {
    const VectorXd density = phi.cwiseAbs2();
    if (cfg->mode == NonlinearityMode::kConvolution) {
      const VectorXd u = convolve(cfg->grid, cfg->pot.pair, density);
      for (Index x = 0; x < phi.size(); ++x)
        phi[x] *= std::exp(Complex(0.0, -dt * u[x]));
    } else {
      for (Index x = 0; x < phi.size(); ++x)
        phi[x] *= std::exp(Complex(0.0, -dt * cfg->sigma * density[x]));
    }
  }

  void step(VectorXcd& phi, double dt) const {
    linear_half(phi, dt);
    nonlinear_full(phi, dt);
    linear_half(phi, dt);
  }
};

}  // namespace

HartreeTrajectory effective_evolve(const EffectiveConfig& cfg,
                                   const VectorXcd& phi0, double t,
                                   double dt_target) {
  if (std::abs(phi0.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("effective_evolve: phi0 must be normalized");
  if (!(t >= 0) || !(dt_target > 0))
    throw std::invalid_argument("effective_evolve: bad time arguments");

  const Splitter split(cfg);
  const int n_samples = std::max(1, static_cast<int>(std::ceil(t / dt_target - 1e-12)));
  const double dt_sample = t / n_samples;

  auto integrate = [&](int substeps) {
    HartreeTrajectory traj;
    traj.dt = dt_sample;
    traj.times.reserve(n_samples + 1);
    traj.states.reserve(n_samples + 1);
    VectorXcd phi = phi0;
    traj.times.push_back(0.0);
    traj.states.push_back(phi);
    const double dt = dt_sample / substeps;
    for (int q = 1; q <= n_samples; ++q) {
      for (int s = 0; s < substeps; ++s) split.step(phi, dt);
      traj.times.push_back(q * dt_sample);
      traj.states.push_back(phi);
    }
    return traj;
  };

  int substeps = 1;
  HartreeTrajectory traj = integrate(substeps);
  for (;;) {
    if (substeps > (1 << 20))
      throw std::runtime_error("effective_evolve: step size underflow");
    HartreeTrajectory fine = integrate(substeps * 2);
    double diff = 0.0;
    for (std::size_t q = 0; q < traj.states.size(); ++q)
      diff = std::max(diff,
                      (traj.states[q] - fine.states[q]).cwiseAbs().maxCoeff());
    traj = std::move(fine);
    substeps *= 2;
    if (diff < 1e-8) break;
  }

  const double e0 = effective_energy(cfg, traj.states.front());
  for (const auto& s : traj.states) {
    const double e = effective_energy(cfg, s);
    traj.energy_drift = std::max(
        traj.energy_drift, std::abs(e - e0) / std::max(1.0, std::abs(e0)));
  }
  return traj;
}

VectorXcd effective_step_fixed(const EffectiveConfig& cfg,
                               const VectorXcd& phi0, double t, int n_steps) {
  const Splitter split(cfg);
  VectorXcd phi = phi0;
  for (int s = 0; s < n_steps; ++s) split.step(phi, t / n_steps);
  return phi;
}

double effective_energy(const EffectiveConfig& cfg, const VectorXcd& phi) {
  const VectorXcd lap = laplacian_apply(cfg.grid, phi);
  double e = std::real(phi.dot(lap));
  const VectorXd density = phi.cwiseAbs2();
  e += cfg.pot.external.dot(density);
  if (cfg.mode == NonlinearityMode::kConvolution)
    e += 0.5 * convolve(cfg.grid, cfg.pot.pair, density).dot(density);
  else
    e += 0.5 * cfg.sigma * density.squaredNorm();
  return e;
}

}  // namespace mflab
