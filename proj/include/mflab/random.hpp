#pragma once

#include <cstdint>
#include <random>

#include "mflab/lattice.hpp"

namespace mflab {

/// Seeded generator with hand-rolled gaussian sampling so streams are
/// reproducible independent of the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return double(eng_() >> 11) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  Complex cgauss() { return Complex(gaussian(), gaussian()); }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// random field from plane waves with per-axis wave numbers in [-kcut, kcut]
VectorXcd random_band_limited_field(const Grid& grid, int kcut, Rng& rng);

// normalized sum of `rank` product fields; band-limited per particle
VectorXcd random_band_limited_pair(const Grid& grid, int kcut, int rank,
                                   Rng& rng);

VectorXcd random_normalized_vector(Index n, Rng& rng);

MatrixXcd random_hermitian(Index n, Rng& rng);

}  // namespace mflab
