#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

using Complex = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string& msg)
      : std::runtime_error(field_ + ": " + msg), field(std::move(field_)) {}
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Periodic hypercubic lattice with m points per axis and spacing h.
/// All norms and inner products use the counting measure (plain sums,
/// no h-weight), so the many-body model and the one-body effective
/// equations live on exactly the same Hilbert space.
class Grid {
 public:
  Grid(int dim, int m, double h);

  int dim() const { return dim_; }
  int points_per_axis() const { return m_; }
  double spacing() const { return h_; }
  double length() const { return m_ * h_; }
  Index sites() const { return sites_; }

  // flat index <-> integer coordinates, axis 0 fastest
  Index site_index(const std::vector<int>& coords) const;
  std::vector<int> site_coords(Index idx) const;

  Index neighbor(Index site, int axis, int step) const {
    return step > 0 ? neigh_plus_[axis][site] : neigh_minus_[axis][site];
  }

  // flat index of the periodic displacement x - y
  Index displacement_index(Index x, Index y) const;
  // flat index of -r
  Index negate_displacement(Index r) const;

  // minimal-image Euclidean distance of displacement r from the origin
  double displacement_distance(Index r) const;

  // eigenvalue of the nearest-neighbor -Laplacian on the plane wave
  // with integer wave numbers k (one per axis)
  double stencil_symbol(const std::vector<int>& k) const;

  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && m_ == o.m_ && h_ == o.h_;
  }

 private:
  int dim_;
  int m_;
  double h_;
  Index sites_;
  std::vector<std::vector<Index>> neigh_plus_;   // [axis][site]
  std::vector<std::vector<Index>> neigh_minus_;  // [axis][site]
};

/// Pair potential sampled per periodic displacement plus an external
/// one-body potential per site. pair(r) must be even under r -> -r.
struct PotentialSpec {
  VectorXd pair;      // V(r), indexed by displacement site index
  VectorXd external;  // V_ext(x) per site
  double sup_norm = 0.0;
  double l1_norm = 0.0;

  static PotentialSpec make(const Grid& grid, VectorXd pair_values,
                            VectorXd external_values);
  static PotentialSpec zero(const Grid& grid);
  // named families; the delta family is g at displacement 0
  static PotentialSpec gaussian(const Grid& grid, double amplitude,
                                double width, VectorXd external = {});
  static PotentialSpec box(const Grid& grid, double amplitude, double radius,
                           VectorXd external = {});
  static PotentialSpec kronecker_delta(const Grid& grid, double g,
                                       VectorXd external = {});
};

// -Delta phi with the nearest-neighbor second difference,
// (2 phi(x) - phi(x+h e_a) - phi(x-h e_a)) / h^2 summed over axes
VectorXcd laplacian_apply(const Grid& grid, const VectorXcd& phi);

// (-Delta + V_ext) phi
VectorXcd one_body_apply(const Grid& grid, const PotentialSpec& pot,
                         const VectorXcd& phi);

// dense matrix of -Delta + V_ext (real symmetric)
MatrixXd one_body_matrix(const Grid& grid, const PotentialSpec& pot);

// periodic counting-measure convolution (V * rho)(x) = sum_y V(x-y) rho(y)
VectorXd convolve(const Grid& grid, const VectorXd& pair_values,
                  const VectorXd& density);

enum class PairFormKind {
  kProductSobolev,  // <psi, (1-Delta_1)(1-Delta_2) psi>
  kMixedGradient,   // <psi, ((grad_1 . grad_2)^2 - Delta_1 - Delta_2 + 1) psi>
};

// quadratic form on a two-particle field psi(x1,x2), stored with x1 fastest;
// built from forward-difference gradients, always real and >= |psi|^2
double sobolev_pair_form(const Grid& grid, const VectorXcd& psi,
                         PairFormKind kind);

// forward difference along one axis acting on particle slot 0 or 1 of a
// two-particle field (helper shared with the probes)
VectorXcd pair_forward_diff(const Grid& grid, const VectorXcd& psi,
                            int particle, int axis);

inline double norm_sq(const VectorXcd& v) { return v.squaredNorm(); }

}  // namespace mflab
