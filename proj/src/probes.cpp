#include "mflab/probes.hpp"

#include <cmath>

#include "mflab/random.hpp"

namespace mflab {

namespace {

constexpr int kBandCut = 1;  // random states stay low-mode, forms stay O(1)
constexpr int kPairRank = 4;

// sum_{x,y} V(x-y) conj(phi(x,y)) psi(x,y)
Complex pair_potential_pairing(const Grid& grid, const VectorXd& pair,
                               const VectorXcd& phi, const VectorXcd& psi) {
  const Index n = grid.sites();
  Complex acc = 0.0;
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) {
      const double v = pair[grid.displacement_index(x, y)];
      if (v != 0.0) acc += v * std::conj(phi[x + n * y]) * psi[x + n * y];
    }
  return acc;
}

}  // namespace

ProbeResult probe_sobolev_L1(const Grid& grid, const VectorXd& pair,
                             int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("probe: trials must be >= 1");
  const double l1 = pair.cwiseAbs().sum();
  Rng rng(seed);
  ProbeResult res;
  res.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    const VectorXcd psi = random_band_limited_pair(grid, kBandCut, kPairRank, rng);
    if (l1 == 0.0) continue;
    const double num =
        std::real(pair_potential_pairing(grid, pair, psi, psi));
    const double den =
        l1 * sobolev_pair_form(grid, psi, PairFormKind::kProductSobolev);
    res.max_ratio = std::max(res.max_ratio, num / den);
  }
  return res;
}

ProbeResult probe_nabla_dot(const Grid& grid, const VectorXd& pair, int trials,
                            std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("probe: trials must be >= 1");
  const double l1 = pair.cwiseAbs().sum();
  Rng rng(seed);
  ProbeResult res;
  res.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    const VectorXcd phi = random_band_limited_pair(grid, kBandCut, kPairRank, rng);
    const VectorXcd psi = random_band_limited_pair(grid, kBandCut, kPairRank, rng);
    if (l1 == 0.0) continue;
    const double num = std::abs(pair_potential_pairing(grid, pair, phi, psi));
    const double den =
        l1 *
        std::sqrt(sobolev_pair_form(grid, phi, PairFormKind::kMixedGradient)) *
        std::sqrt(sobolev_pair_form(grid, psi, PairFormKind::kMixedGradient));
    res.max_ratio = std::max(res.max_ratio, num / den);
  }
  return res;
}

VectorXd lattice_mollifier(const Grid& grid,
                           const std::function<double(double)>& profile,
                           double alpha) {
  VectorXd h(grid.sites());
  for (Index r = 0; r < grid.sites(); ++r)
    h[r] = profile(grid.displacement_distance(r) / alpha);
  const double mass = h.sum();
  if (!(mass > 0))
    throw std::invalid_argument("mollifier: profile has no mass on the grid");
  return h / mass;
}

std::vector<PoincareRow> probe_poincare(
    const Grid& grid, const std::function<double(double)>& profile,
    const std::vector<double>& alphas, double kappa, int trials,
    std::uint64_t seed) {
  if (kappa < 0.0 || kappa >= 0.5)
    throw std::invalid_argument("probe_poincare: kappa must lie in [0, 1/2)");
  for (const double a : alphas)
    if (a < 2.0 * grid.spacing() - 1e-12)
      throw std::invalid_argument(
          "probe_poincare: alpha below the lattice resolution");
  std::vector<PoincareRow> table;
  for (const double alpha : alphas) {
    VectorXd kernel = lattice_mollifier(grid, profile, alpha);
    kernel[0] -= 1.0;  // h_alpha - lattice delta
    Rng rng(seed);     // same draw sequence along the ladder
    PoincareRow row;
    row.alpha = alpha;
    for (int trial = 0; trial < trials; ++trial) {
      const VectorXcd phi =
          random_band_limited_pair(grid, kBandCut, kPairRank, rng);
      const VectorXcd psi =
          random_band_limited_pair(grid, kBandCut, kPairRank, rng);
      const double num =
          std::abs(pair_potential_pairing(grid, kernel, phi, psi));
      const double den =
          std::pow(alpha, kappa) *
          std::sqrt(
              sobolev_pair_form(grid, phi, PairFormKind::kProductSobolev)) *
          std::sqrt(
              sobolev_pair_form(grid, psi, PairFormKind::kProductSobolev));
      row.max_ratio = std::max(row.max_ratio, num / den);
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace mflab
