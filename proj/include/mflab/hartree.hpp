#pragma once

#include <vector>

#include "mflab/lattice.hpp"

namespace mflab {

enum class NonlinearityMode { kConvolution, kCubic };

/// One-body effective equation
///   i d/dt phi = (-Delta + V_ext) phi + (V * |phi|^2) phi   (convolution)
///   i d/dt phi = (-Delta + V_ext) phi + sigma |phi|^2 phi   (cubic)
struct EffectiveConfig {
  Grid grid;
  NonlinearityMode mode = NonlinearityMode::kConvolution;
  PotentialSpec pot;   // pair part feeds the convolution; external is always on
  double sigma = 0.0;  // cubic coupling
};

struct HartreeTrajectory {
  double dt = 0.0;  // sample spacing
  std::vector<double> times;
  std::vector<VectorXcd> states;
  double energy_drift = 0.0;  // max relative deviation seen while stepping

  const VectorXcd& state_at(double t) const;
  const VectorXcd& back() const { return states.back(); }
};

/// Strang splitting: exact half-steps in the eigenbasis of the discrete
/// one-body operator around a frozen-density nonlinear phase step. The
/// internal step is halved (whole-trajectory step doubling) until the
/// sampled states move by less than 1e-8 in the sup norm.
HartreeTrajectory effective_evolve(const EffectiveConfig& cfg,
                                   const VectorXcd& phi0, double t,
                                   double dt_target);

double effective_energy(const EffectiveConfig& cfg, const VectorXcd& phi);

// n_steps uniform splitting steps with no adaptivity (order measurements)
VectorXcd effective_step_fixed(const EffectiveConfig& cfg,
                               const VectorXcd& phi0, double t, int n_steps);

}  // namespace mflab
