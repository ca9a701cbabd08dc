#pragma once

#include <functional>

#include "mflab/fock.hpp"
#include "mflab/lattice.hpp"

namespace mflab {

struct KrylovOptions {
  double tol = 1e-10;  // error target relative to the input norm
  int min_dim = 8;
  int max_dim = 64;
  double mem_budget = 2.5e9;  // bytes available for the Krylov basis
  double min_substep = 1e-12;
  // called with the state after every accepted substep
  std::function<void(const VectorXcd&)> substep_monitor;
};

struct KrylovReport {
  int substeps = 0;
  int matvecs = 0;
  int krylov_dim = 0;
  double est_error = 0.0;
};

namespace detail {
VectorXcd krylov_expm_impl(
    const std::function<void(const VectorXcd&, VectorXcd&)>& apply, Index dim,
    const VectorXcd& v, double t, const KrylovOptions& opt,
    KrylovReport* report);
}

/// e^{-iHt} v for a Hermitian matrix-free operator, by Lanczos with
/// residual-controlled adaptive substepping.
template <class Op>
VectorXcd krylov_expm(const Op& op, const VectorXcd& v, double t,
                      const KrylovOptions& opt = {},
                      KrylovReport* report = nullptr) {
  return detail::krylov_expm_impl(
      [&op](const VectorXcd& in, VectorXcd& out) { op.apply(in, out); },
      op.rows(), v, t, opt, report);
}

// exact dense propagation through an eigendecomposition; refuses
// non-Hermitian input and dimensions above the cap
VectorXcd dense_expm_oracle(const MatrixXcd& h, const VectorXcd& psi, double t,
                            Index dense_cap = 5000);

// materialize the dense matrix of a matrix-free operator (tests, oracle)
template <class Op>
MatrixXcd dense_matrix(const Op& op) {
  const Index n = op.rows();
  MatrixXcd h(n, n);
  VectorXcd e = VectorXcd::Zero(n), col(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    h.col(j) = col;
    e[j] = 0.0;
  }
  return h;
}

/// e^{-iHt} psi for the many-body Hamiltonian. Number conservation makes
/// every fixed-n block invariant, so Cutoff-basis states are propagated
/// sector by sector; blocks below the negligibility threshold are skipped
/// and their mass is added to the leakage diagnostic.
FockVector evolve_state(const ManyBodyHamiltonian& h, const FockVector& psi,
                        double t, const KrylovOptions& opt = {},
                        KrylovReport* report = nullptr);

}  // namespace mflab
