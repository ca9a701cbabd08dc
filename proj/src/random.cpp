#include "mflab/random.hpp"

#include <cmath>

namespace mflab {

VectorXcd random_band_limited_field(const Grid& grid, int kcut, Rng& rng) {
  const int m = grid.points_per_axis();
  VectorXcd out = VectorXcd::Zero(grid.sites());
  std::vector<int> k(grid.dim(), -kcut);
  for (;;) {
    const Complex c = rng.cgauss();
    for (Index s = 0; s < grid.sites(); ++s) {
      double phase = 0.0;
      Index rest = s;
      for (int a = 0; a < grid.dim(); ++a) {
        phase += 2.0 * M_PI * k[a] * double(rest % m) / m;
        rest /= m;
      }
      out[s] += c * std::exp(Complex(0.0, phase));
    }
    int a = 0;
    for (; a < grid.dim(); ++a) {
      if (++k[a] <= kcut) break;
      k[a] = -kcut;
    }
    if (a == grid.dim()) break;
  }
  return out / out.norm();
}

VectorXcd random_band_limited_pair(const Grid& grid, int kcut, int rank,
                                   Rng& rng) {
  const Index n = grid.sites();
  VectorXcd out = VectorXcd::Zero(n * n);
  for (int r = 0; r < rank; ++r) {
    const VectorXcd u = random_band_limited_field(grid, kcut, rng);
    const VectorXcd v = random_band_limited_field(grid, kcut, rng);
    const Complex w = rng.cgauss();
    for (Index x2 = 0; x2 < n; ++x2)
      out.segment(x2 * n, n) += w * v[x2] * u;
  }
  return out / out.norm();
}

VectorXcd random_normalized_vector(Index n, Rng& rng) {
  VectorXcd v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.cgauss();
  return v / v.norm();
}

MatrixXcd random_hermitian(Index n, Rng& rng) {
  MatrixXcd a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = rng.cgauss();
  return 0.5 * (a + a.adjoint());
}

}  // namespace mflab
