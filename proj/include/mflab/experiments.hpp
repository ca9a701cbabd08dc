#pragma once

#include <map>
#include <string>
#include <vector>

#include "mflab/fock.hpp"
#include "mflab/hartree.hpp"
#include "mflab/lattice.hpp"

namespace mflab {

struct ConvergenceExperiment {
  Grid grid;
  PotentialSpec pot;
  VectorXcd phi0;
  std::vector<int> n_list;
  std::vector<double> sample_times;
  // effective equation matched against the many-body run
  NonlinearityMode effective_mode = NonlinearityMode::kConvolution;
  double cubic_sigma = 0.0;
  double hartree_dt = 1e-3;
  double propagator_tol = 1e-10;
  double leakage_tol = 1e-8;
  int workers = 1;

  void validate() const;
};

struct DistanceRow {
  int n = 0;
  double t = 0.0;
  double distance = 0.0;
  double leakage = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;   // natural-log space
  double residual = 0.0;    // rms of ln-residuals
  int points_used = 0;
  int points_excluded = 0;
};

// least squares on (ln N, ln D); points with D <= 10 * floor are excluded,
// fewer than 3 surviving points is a refusal
RateFit fit_rate(const std::vector<std::pair<double, double>>& points,
                 double floor);

struct ConvergenceResult {
  std::vector<DistanceRow> rows;                  // sorted by (t, n)
  std::vector<std::pair<double, RateFit>> fits;   // per sample time
  double floor = 0.0;
  std::vector<std::string> notes;
};

// phi^{(x)N} evolved under the 1/N Hamiltonian against the matched Hartree
// trajectory, distance Tr|gamma^(1) - P_phi(t)| per (N, t)
ConvergenceResult run_factorized(const ConvergenceExperiment& exp);

// W(sqrt(N) phi) Omega evolved exactly; marginal via the number-normalized
// correlator; aborts an N whose coherent-state leakage breaches the bound
ConvergenceResult run_coherent(const ConvergenceExperiment& exp);

// on-site pair interaction against the cubic equation with sigma = g
ConvergenceResult run_delta_limit(const ConvergenceExperiment& exp);

struct FluctuationRow {
  int n = 0;
  double t = 0.0;
  int power = 0;
  double moment = 0.0;
  double leakage = 0.0;
};

struct ExpFit {
  double log_c = 0.0;
  double rate = 0.0;      // fitted K of C e^{K t}
  double residual = 0.0;  // rms of ln-residuals
};

struct FluctuationResult {
  std::vector<FluctuationRow> rows;
  std::vector<std::pair<int, ExpFit>> fits;  // per N, on the first moment
  std::vector<std::string> notes;
};

// moments of the fluctuation vector W(sqrt(N) phi_t)* e^{-iHt} W(sqrt(N) phi) Omega
FluctuationResult fluctuation_growth(const ConvergenceExperiment& exp,
                                     int j_max);

// trajectory grid that lands exactly on every requested sample time
HartreeTrajectory matched_hartree_trajectory(const ConvergenceExperiment& exp);

}  // namespace mflab
