#pragma once

#include "mflab/fock.hpp"
#include "mflab/lattice.hpp"

namespace mflab {

/// Trace-one Hermitian k-body operator on the lattice; entries indexed by
/// k-tuples of sites with the first particle slot fastest.
struct ReducedDensityMatrix {
  Grid grid;
  int k = 1;
  MatrixXcd rho;

  Index side() const { return rho.rows(); }
};

// entries(x; x') proportional to <psi, a*_{x'_1}..a*_{x'_k} a_{x_1}..a_{x_k} psi>,
// normalized to unit trace; for FixedN states this is the k-particle partial
// trace of |psi><psi|
ReducedDensityMatrix reduce(const FockVector& psi, int k,
                            Index dense_cap = 5000);

// Tr |a - b| through a Hermitian eigendecomposition
double trace_distance(const ReducedDensityMatrix& a,
                      const ReducedDensityMatrix& b);

// Tr |h| for a Hermitian matrix
double trace_norm(const MatrixXcd& h);

Complex observable_expectation(const ReducedDensityMatrix& rho,
                               const MatrixXcd& obs);

struct RankOneDistance {
  double trace_norm;
  double twice_op_norm;
};

// Tr |gamma - |phi><phi|| and 2 op-norm of the same difference; the two
// agree because the difference is traceless with one negative eigenvalue
RankOneDistance trace_distance_rank_one(const ReducedDensityMatrix& gamma,
                                        const VectorXcd& phi);

// partial trace over the last particle slot of a k-body matrix
MatrixXcd partial_trace_last(const MatrixXcd& rho, Index sites, int k);

// |phi><phi|^{(x) k}
ReducedDensityMatrix pure_power_rdm(const Grid& grid, const VectorXcd& phi,
                                    int k);

// phi^{(x) k} as a dense k-particle vector (first slot fastest)
VectorXcd tensor_power(const VectorXcd& phi, int k);

}  // namespace mflab
