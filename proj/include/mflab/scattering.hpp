#pragma once

#include <functional>

#include "mflab/lattice.hpp"

namespace mflab {

/// Radial 3D potential, kept as a callable so the solver can refine its own
/// mesh; values/dr hold the samples of the most recent solve.
struct RadialPotential {
  std::function<double(double)> v;
  double r_max = 0.0;
  double dr = 0.0;  // initial mesh width

  static RadialPotential square_barrier(double v0, double radius,
                                        double r_max, double dr);
  static RadialPotential gaussian(double v0, double width, double r_max,
                                  double dr);
  static RadialPotential from_samples(VectorXd values, double dr,
                                      double r_max);
  RadialPotential scaled(double lambda) const;

  bool nonnegative_on_mesh() const;
};

struct ScatteringResult {
  VectorXd f;       // f(r) on the final mesh, r_i = (i+1) dr
  double dr = 0.0;
  double a0 = 0.0;          // from the asymptotic fit u ~ c (r - a0)
  double a0_integral = 0.0; // from (1/8pi) int V f
  double b0 = 0.0;          // int V
  double rho = 0.0;         // sup r^2 V + int V/|x|
  double fit_residual = 0.0;
  bool tail_flag = false;   // decay check |V| <= C r^-sigma, sigma > 5, failed
  int refinements = 0;
};

/// Outward RK4 integration of u'' = (1/2) V(r) u with u = r f, u(0) = 0,
/// fitting u ~ c (r - a0) on [0.7 r_max, r_max]; the mesh is halved until a0
/// moves by less than 1e-8.
ScatteringResult solve_zero_energy(const RadialPotential& pot);

// scattering length of V_n(r) = n^2 V(n r); checks a(V_n) = a0 / n
double scaled_scattering_length(const RadialPotential& pot, int n);

// 8 pi a0 at beta = 1, b0 = int V for 0 < beta < 1
double coupling_for_beta(const RadialPotential& pot, double beta);

}  // namespace mflab
