#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mflab/lattice.hpp"

namespace mflab {

struct ProbeResult {
  double max_ratio = 0.0;
  int trials = 0;
};

// max over random band-limited two-particle states of
//   <psi, V(x1-x2) psi> / (|V|_1 <psi, (1-D1)(1-D2) psi>)
ProbeResult probe_sobolev_L1(const Grid& grid, const VectorXd& pair,
                             int trials, std::uint64_t seed);

// bilinear variant with the mixed-derivative form on both factors
ProbeResult probe_nabla_dot(const Grid& grid, const VectorXd& pair, int trials,
                            std::uint64_t seed);

struct PoincareRow {
  double alpha = 0.0;
  double max_ratio = 0.0;
};

// lattice mollifier h_alpha(r) = profile(dist(r)/alpha), normalized to total
// mass one under the counting measure
VectorXd lattice_mollifier(const Grid& grid,
                           const std::function<double(double)>& profile,
                           double alpha);

// |<phi, (h_alpha - delta) psi>| / (alpha^kappa sqrt(form(phi) form(psi)))
// along a dyadic alpha ladder; alphas below two lattice spacings are refused
std::vector<PoincareRow> probe_poincare(
    const Grid& grid, const std::function<double(double)>& profile,
    const std::vector<double>& alphas, double kappa, int trials,
    std::uint64_t seed);

}  // namespace mflab
