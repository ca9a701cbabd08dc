#pragma once

#include <vector>

#include "mflab/hartree.hpp"
#include "mflab/lattice.hpp"
#include "mflab/marginals.hpp"

namespace mflab {

/// Family of k-body density matrices, k = 1..K_max.
struct DensityFamily {
  Grid grid;
  std::vector<MatrixXcd> gammas;  // gammas[k-1] has side sites^k
};

// one-particle propagator e^{-i (-Delta + V_ext) t}
MatrixXcd one_body_propagator(const Grid& grid, const PotentialSpec& pot,
                              double t);

// U^{(k)}(t) gamma = G(t)^{(x) k} gamma G(t)^{(x) k *}; trace-norm preserving
MatrixXcd free_evolution(const Grid& grid, const PotentialSpec& pot, int k,
                         double t, const MatrixXcd& gamma);

// -i sum_{i<j} [V(x_i - x_j), gamma^{(k)}]
MatrixXcd collision_A(const Grid& grid, const VectorXd& pair, int k,
                      const MatrixXcd& gamma);

// -i sum_{j<=k} Tr_{k+1} [V(x_j - x_{k+1}), gamma^{(k+1)}], evaluated through
// the kernel sum over the traced coordinate
MatrixXcd collision_B(const Grid& grid, const VectorXd& pair, int k,
                      const MatrixXcd& gamma_kplus1);

/// Tr | gamma_t - U(t) gamma_0 - int_0^t U(t-s) B gamma^{(k+1)}_s ds | for the
/// Hartree-factorized family, with composite-trapezoid quadrature of width
/// quad_dt. The trajectory must hold every quadrature node.
double infinite_hierarchy_residual(const EffectiveConfig& cfg,
                                   const HartreeTrajectory& traj, int k,
                                   double t, double quad_dt);

struct PicardOptions {
  double quad_dt = 1.0 / 64.0;
  int k_max = 3;
};

struct PicardResult {
  // trace norms of successive increments of the k=1 component at time t
  std::vector<double> increments;
  // increments per level, increments_by_level[m][k-1]
  std::vector<std::vector<double>> increments_by_level;
  DensityFamily final_family;
  bool closure_used = false;  // the K_max level integrates the closure
};

/// Picard iteration of the hierarchy's integral form, started from the free
/// family; the missing gamma^{(K_max+1)} is closed with the Hartree
/// factorized family carried by the trajectory.
PicardResult picard_iterate(const DensityFamily& family0,
                            const EffectiveConfig& cfg,
                            const HartreeTrajectory& traj, double t,
                            int orders, const PicardOptions& opt = {});

}  // namespace mflab
