#include "mflab/lattice.hpp"

#include <cmath>

namespace mflab {

Grid::Grid(int dim, int m, double h) : dim_(dim), m_(m), h_(h) {
  if (dim != 1 && dim != 3) throw ConfigError("grid.dim", "must be 1 or 3");
  if (m < 2) throw ConfigError("grid.m", "must be >= 2");
  if (!(h > 0.0)) throw ConfigError("grid.h", "must be positive");
  sites_ = 1;
  for (int a = 0; a < dim_; ++a) {
    if (sites_ > (Index(1) << 40) / m_)
      throw ConfigError("grid.m", "site count overflow");
    sites_ *= m_;
  }
  neigh_plus_.assign(dim_, std::vector<Index>(sites_));
  neigh_minus_.assign(dim_, std::vector<Index>(sites_));
  Index stride = 1;
  for (int a = 0; a < dim_; ++a) {
    for (Index s = 0; s < sites_; ++s) {
      const int c = static_cast<int>((s / stride) % m_);
      neigh_plus_[a][s] = s + stride * ((c + 1) % m_ - c);
      neigh_minus_[a][s] = s + stride * ((c + m_ - 1) % m_ - c);
    }
    stride *= m_;
  }
}

Index Grid::site_index(const std::vector<int>& coords) const {
  Index idx = 0, stride = 1;
  for (int a = 0; a < dim_; ++a) {
    const int c = ((coords[a] % m_) + m_) % m_;
    idx += stride * c;
    stride *= m_;
  }
  return idx;
}

std::vector<int> Grid::site_coords(Index idx) const {
  std::vector<int> c(dim_);
  for (int a = 0; a < dim_; ++a) {
    c[a] = static_cast<int>(idx % m_);
    idx /= m_;
  }
  return c;
}

Index Grid::displacement_index(Index x, Index y) const {
  Index idx = 0, stride = 1;
  for (int a = 0; a < dim_; ++a) {
    const int cx = static_cast<int>((x / stride) % m_);
    const int cy = static_cast<int>((y / stride) % m_);
    idx += stride * ((cx - cy + m_) % m_);
    stride *= m_;
  }
  return idx;
}

Index Grid::negate_displacement(Index r) const {
  Index idx = 0, stride = 1;
  for (int a = 0; a < dim_; ++a) {
    const int c = static_cast<int>((r / stride) % m_);
    idx += stride * ((m_ - c) % m_);
    stride *= m_;
  }
  return idx;
}

double Grid::displacement_distance(Index r) const {
  double d2 = 0.0;
  Index stride = 1;
  for (int a = 0; a < dim_; ++a) {
    int c = static_cast<int>((r / stride) % m_);
    if (c > m_ / 2) c -= m_;  // minimal image, per-axis |c| <= m/2
    d2 += double(c) * double(c);
    stride *= m_;
  }
  return h_ * std::sqrt(d2);
}

double Grid::stencil_symbol(const std::vector<int>& k) const {
  double w = 0.0;
  for (int a = 0; a < dim_; ++a)
    w += (2.0 - 2.0 * std::cos(2.0 * M_PI * k[a] / m_)) / (h_ * h_);
  return w;
}

PotentialSpec PotentialSpec::make(const Grid& grid, VectorXd pair_values,
                                  VectorXd external_values) {
  if (pair_values.size() == 0) pair_values = VectorXd::Zero(grid.sites());
  if (external_values.size() == 0)
    external_values = VectorXd::Zero(grid.sites());
  if (pair_values.size() != grid.sites())
    throw ConfigError("potential.pair", "sample count must equal site count");
  if (external_values.size() != grid.sites())
    throw ConfigError("potential.external",
                      "sample count must equal site count");
  for (Index r = 0; r < grid.sites(); ++r) {
    const Index nr = grid.negate_displacement(r);
    if (std::abs(pair_values[r] - pair_values[nr]) > 1e-12)
      throw ConfigError("potential.pair", "must be even under r -> -r");
  }
  PotentialSpec p;
  p.pair = std::move(pair_values);
  p.external = std::move(external_values);
  p.sup_norm = p.pair.size() ? p.pair.cwiseAbs().maxCoeff() : 0.0;
  p.l1_norm = p.pair.cwiseAbs().sum();
  return p;
}

PotentialSpec PotentialSpec::zero(const Grid& grid) {
  return make(grid, VectorXd::Zero(grid.sites()), VectorXd::Zero(grid.sites()));
}

PotentialSpec PotentialSpec::gaussian(const Grid& grid, double amplitude,
                                      double width, VectorXd external) {
  if (!(width > 0)) throw ConfigError("potential.width", "must be positive");
  VectorXd v(grid.sites());
  for (Index r = 0; r < grid.sites(); ++r) {
    const double d = grid.displacement_distance(r);
    v[r] = amplitude * std::exp(-(d * d) / (width * width));
  }
  return make(grid, std::move(v), std::move(external));
}

PotentialSpec PotentialSpec::box(const Grid& grid, double amplitude,
                                 double radius, VectorXd external) {
  VectorXd v(grid.sites());
  for (Index r = 0; r < grid.sites(); ++r)
    v[r] = grid.displacement_distance(r) <= radius ? amplitude : 0.0;
  return make(grid, std::move(v), std::move(external));
}

PotentialSpec PotentialSpec::kronecker_delta(const Grid& grid, double g,
                                             VectorXd external) {
  VectorXd v = VectorXd::Zero(grid.sites());
  v[0] = g;
  return make(grid, std::move(v), std::move(external));
}

VectorXcd laplacian_apply(const Grid& grid, const VectorXcd& phi) {
  if (phi.size() != grid.sites())
    throw ConfigError("wavefunction", "size must equal site count");
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  VectorXcd out = VectorXcd::Zero(phi.size());
  for (int a = 0; a < grid.dim(); ++a)
    for (Index s = 0; s < phi.size(); ++s)
      out[s] += inv_h2 * (2.0 * phi[s] - phi[grid.neighbor(s, a, +1)] -
                          phi[grid.neighbor(s, a, -1)]);
  return out;
}

VectorXcd one_body_apply(const Grid& grid, const PotentialSpec& pot,
                         const VectorXcd& phi) {
  VectorXcd out = laplacian_apply(grid, phi);
  out.array() += pot.external.array().cast<Complex>() * phi.array();
  return out;
}

MatrixXd one_body_matrix(const Grid& grid, const PotentialSpec& pot) {
  const Index n = grid.sites();
  if (pot.external.size() != n)
    throw ConfigError("potential.external", "shape mismatch with grid");
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  MatrixXd h = MatrixXd::Zero(n, n);
  for (Index s = 0; s < n; ++s) {
    h(s, s) = 2.0 * grid.dim() * inv_h2 + pot.external[s];
    for (int a = 0; a < grid.dim(); ++a) {
      h(s, grid.neighbor(s, a, +1)) -= inv_h2;
      h(s, grid.neighbor(s, a, -1)) -= inv_h2;
    }
  }
  return h;
}

VectorXd convolve(const Grid& grid, const VectorXd& pair_values,
                  const VectorXd& density) {
  if (pair_values.size() != grid.sites() || density.size() != grid.sites())
    throw ConfigError("convolve", "shape mismatch with grid");
  VectorXd out = VectorXd::Zero(grid.sites());
  for (Index x = 0; x < grid.sites(); ++x) {
    double acc = 0.0;
    for (Index y = 0; y < grid.sites(); ++y)
      acc += pair_values[grid.displacement_index(x, y)] * density[y];
    out[x] = acc;
  }
  return out;
}

VectorXcd pair_forward_diff(const Grid& grid, const VectorXcd& psi,
                            int particle, int axis) {
  const Index n = grid.sites();
  if (psi.size() != n * n)
    throw ConfigError("pair field", "size must equal sites^2");
  VectorXcd out(n * n);
  const double inv_h = 1.0 / grid.spacing();
  if (particle == 0) {
    for (Index x2 = 0; x2 < n; ++x2)
      for (Index x1 = 0; x1 < n; ++x1)
        out[x1 + n * x2] =
            inv_h * (psi[grid.neighbor(x1, axis, +1) + n * x2] -
                     psi[x1 + n * x2]);
  } else {
    for (Index x2 = 0; x2 < n; ++x2) {
      const Index x2p = grid.neighbor(x2, axis, +1);
      for (Index x1 = 0; x1 < n; ++x1)
        out[x1 + n * x2] = inv_h * (psi[x1 + n * x2p] - psi[x1 + n * x2]);
    }
  }
  return out;
}

double sobolev_pair_form(const Grid& grid, const VectorXcd& psi,
                         PairFormKind kind) {
  double value = psi.squaredNorm();
  for (int a = 0; a < grid.dim(); ++a) {
    value += pair_forward_diff(grid, psi, 0, a).squaredNorm();
    value += pair_forward_diff(grid, psi, 1, a).squaredNorm();
  }
  switch (kind) {
    case PairFormKind::kProductSobolev: {
      for (int a = 0; a < grid.dim(); ++a) {
        const VectorXcd d1 = pair_forward_diff(grid, psi, 0, a);
        for (int b = 0; b < grid.dim(); ++b)
          value += pair_forward_diff(grid, d1, 1, b).squaredNorm();
      }
      return value;
    }
    case PairFormKind::kMixedGradient: {
      VectorXcd dot = VectorXcd::Zero(psi.size());
      for (int a = 0; a < grid.dim(); ++a)
        dot += pair_forward_diff(grid, pair_forward_diff(grid, psi, 0, a), 1, a);
      return value + dot.squaredNorm();
    }
  }
  throw std::invalid_argument("unknown pair form tag");
}

}  // namespace mflab
