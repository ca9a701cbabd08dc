#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mflab/lattice.hpp"

namespace mflab {

struct Sector {
  enum class Kind { kFixedN, kCutoff };
  Kind kind;
  int n;  // particle count (FixedN) or total-occupation cap (Cutoff)

  static Sector fixed(int n) { return {Kind::kFixedN, n}; }
  static Sector cutoff(int n_max) { return {Kind::kCutoff, n_max}; }
  bool is_cutoff() const { return kind == Kind::kCutoff; }
};

/// Occupation-number basis over the lattice modes. States are ordered
/// sector-major (total occupation ascending), lexicographically within
/// each sector; the order is fixed so run artifacts are byte-stable.
class FockBasis {
 public:
  static constexpr const char* kEnumerationVersion = "sector-lex-v1";
  static constexpr Index kMaxStates = 60'000'000;

  FockBasis(Grid grid, Sector sector);

  const Grid& grid() const { return grid_; }
  const Sector& sector() const { return sector_; }
  Index dim() const { return dim_; }
  int modes() const { return modes_; }
  int max_total() const { return sector_.n; }

  const std::uint8_t* occupation(Index i) const {
    return occ_.data() + static_cast<std::size_t>(i) * modes_;
  }
  int total_occupation(Index i) const;

  // sector blocks: for FixedN there is a single block
  int sector_count() const { return static_cast<int>(offsets_.size()) - 1; }
  int sector_total(int block) const {
    return sector_.is_cutoff() ? block : sector_.n;
  }
  Index sector_offset(int block) const { return offsets_[block]; }
  Index sector_dim(int block) const {
    return offsets_[block + 1] - offsets_[block];
  }

  // exact index of an occupation vector with known total; total above the
  // cap has no index and must be handled by the caller
  Index index_of(const std::uint8_t* occ, int total) const;

  static std::uint64_t fixed_dim(int modes, int n);
  static std::uint64_t cutoff_dim(int modes, int n_max);

 private:
  Index rank_in_sector(const std::uint8_t* occ, int total) const;

  Grid grid_;
  Sector sector_;
  int modes_;
  Index dim_;
  std::vector<std::uint8_t> occ_;
  std::vector<Index> offsets_;              // sector block boundaries
  std::vector<std::uint64_t> pascal_;       // C(a,b) table, row-major
  int pascal_rows_ = 0;
  std::uint64_t choose(int a, int b) const {
    return (b < 0 || b > a) ? 0 : pascal_[static_cast<std::size_t>(a) * pascal_rows_ + b];
  }
};

struct FockVector {
  std::shared_ptr<const FockBasis> basis;
  VectorXcd coeffs;
  double leakage = 0.0;  // squared-norm-scale truncation diagnostic

  double norm() const { return coeffs.norm(); }
};

FockVector vacuum(std::shared_ptr<const FockBasis> basis);

// a*(f) on a Cutoff-basis vector; amplitude reaching past the cap is
// dropped and accounted in the result's leakage
FockVector apply_create(const VectorXcd& f, const FockVector& psi);

// a(f); on FixedN(n) the result lives on FixedN(n-1)
FockVector apply_annihilate(const VectorXcd& f, const FockVector& psi);

// single-mode a_x (used by the marginals); same sector mapping as above
FockVector lower_mode(const FockVector& psi, Index x);

FockVector apply_number(const FockVector& psi);
double number_moment(const FockVector& psi, int power);

/// Matrix-free action of the lattice many-body Hamiltonian
///   -(1/h^2) sum_<xy> (a*_x a_y + a*_y a_x)
///   + sum_x (2 dim/h^2 + V_ext(x)) n_x
///   + (1/2N) sum_{x,y} V(x-y) (n_x n_y - delta_xy n_x)
/// Commutes with the total number operator, so each fixed-n block of a
/// Cutoff basis is invariant.
class ManyBodyHamiltonian {
 public:
  ManyBodyHamiltonian(std::shared_ptr<const FockBasis> basis,
                      PotentialSpec pot, double n_param = 0.0,
                      int workers = 1);

  const FockBasis& basis() const { return *basis_; }
  std::shared_ptr<const FockBasis> basis_ptr() const { return basis_; }
  double n_param() const { return n_param_; }
  int workers() const { return workers_; }

  void apply(const VectorXcd& in, VectorXcd& out) const;
  Index rows() const { return basis_->dim(); }

  // action restricted to one sector block (segment vectors of the block size)
  void apply_sector(int block, const VectorXcd& in, VectorXcd& out) const;

  double diagonal(Index i) const;
  // crude spectral-radius bound used for substep selection
  double norm_bound() const;

 private:
  std::shared_ptr<const FockBasis> basis_;
  PotentialSpec pot_;
  double n_param_;
  int workers_;
  double inv_h2_;
};

struct WeylOptions {
  double tol = 1e-12;      // Krylov relative residual target
  int workers = 1;
  double mem_budget = 2.5e9;
};

// W(f) = exp(a*(f) - a(f)) applied through the Lanczos exponential of the
// antihermitian generator; result leakage carries a boundary-flux bound on
// the truncation error (squared, to stay comparable with norm deficits)
FockVector weyl_apply(const VectorXcd& f, const FockVector& psi,
                      const WeylOptions& opt = {});

// coherent state from the closed-form occupation amplitudes
//   e^{-|f|^2/2} prod_x f(x)^{n_x} / sqrt(n_x!)
// leakage is the exact truncated tail mass. The default cutoff policy is
// n_max = ceil(|f|^2 + 8 |f| + 8).
int coherent_cutoff_policy(double f_norm_sq);
FockVector coherent_state(std::shared_ptr<const FockBasis> basis,
                          const VectorXcd& f);
FockVector coherent_state(const Grid& grid, const VectorXcd& f);

// phi^{(x) n} product state on FixedN(n); phi must be normalized
FockVector factorized_state(const Grid& grid, const VectorXcd& phi, int n);

Complex inner(const FockVector& a, const FockVector& b);

}  // namespace mflab
