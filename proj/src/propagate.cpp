#include "mflab/propagate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mflab {
namespace detail {

namespace {

// exp(-i s T) (beta e_1) for the real symmetric tridiagonal T
VectorXcd tridiag_expm_e1(const VectorXd& alpha, const VectorXd& beta,
                          int m, double s, double scale) {
  MatrixXd t = MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    t(j, j) = alpha[j];
    if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j];
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(t);
  VectorXcd phases(m);
  for (int j = 0; j < m; ++j)
    phases[j] = std::exp(Complex(0.0, -s * es.eigenvalues()[j]));
  VectorXd e1 = es.eigenvectors().row(0).transpose() * scale;
  return es.eigenvectors().cast<Complex>() *
         (phases.array() * e1.cast<Complex>().array()).matrix();
}

}  // namespace

VectorXcd krylov_expm_impl(
    const std::function<void(const VectorXcd&, VectorXcd&)>& apply, Index dim,
    const VectorXcd& v, double t, const KrylovOptions& opt,
    KrylovReport* report) {
  if (!(opt.tol > 0)) throw std::invalid_argument("evolve: tol must be > 0");
  if (!std::isfinite(t)) throw std::invalid_argument("evolve: t not finite");
  KrylovReport local;
  KrylovReport& rep = report ? *report : local;

  const double norm0 = v.norm();
  if (t == 0.0 || norm0 == 0.0) {
    rep.krylov_dim = 0;
    return v;
  }

  // cap the basis size by the memory budget, never below a 3-term chain
  int m_cap = opt.max_dim;
  const double per_vec = 16.0 * static_cast<double>(dim);
  if (per_vec * m_cap > opt.mem_budget)
    m_cap = std::max(3, static_cast<int>(opt.mem_budget / per_vec));
  m_cap = std::max(m_cap, 3);
  const bool reorth = per_vec * m_cap <= 256.0 * (1 << 20);

  const double sign = t > 0 ? 1.0 : -1.0;
  double remaining = std::abs(t);
  double tau = remaining;  // trial substep, adapted below
  VectorXcd cur = v;
  VectorXcd w(dim), av(dim);
  MatrixXcd basis(dim, m_cap);
  VectorXd alpha(m_cap), beta(m_cap);

  while (remaining > 0.0) {
    const double bnorm = cur.norm();
    if (!std::isfinite(bnorm) || bnorm == 0.0)
      throw std::runtime_error("evolve: propagation lost the state");
    basis.col(0) = cur / bnorm;
    int m = 0;
    bool breakdown = false;
    double hnorm_est = 0.0;
    for (int j = 0; j < m_cap; ++j) {
      apply(basis.col(j), av);
      ++rep.matvecs;
      if (j > 0) av -= beta[j - 1] * basis.col(j - 1);
      alpha[j] = std::real(basis.col(j).dot(av));
      av -= alpha[j] * basis.col(j);
      if (reorth)
        for (int i = 0; i <= j; ++i) av -= basis.col(i).dot(av) * basis.col(i);
      m = j + 1;
      hnorm_est = std::max(hnorm_est, std::abs(alpha[j]) +
                                          (j > 0 ? std::abs(beta[j - 1]) : 0.0));
      const double b = av.norm();
      if (!std::isfinite(b)) throw std::runtime_error("evolve: breakdown");
      if (b <= 1e-14 * std::max(1.0, hnorm_est)) {
        breakdown = true;  // invariant subspace: exponential is exact here
        break;
      }
      if (j + 1 < m_cap) {
        beta[j] = b;
        basis.col(j + 1) = av / b;
      } else {
        beta[j] = b;  // kept for the error estimate
      }
    }
    rep.krylov_dim = std::max(rep.krylov_dim, m);

    tau = std::min(tau, remaining);
    if (breakdown) tau = remaining;
    for (;;) {
      const VectorXcd u = tridiag_expm_e1(alpha, beta, m, sign * tau, bnorm);
      double err = 0.0;
      if (!breakdown && m < static_cast<int>(dim)) {
        err = beta[m - 1] * std::abs(u[m - 1]);
        if (m >= 4) {
          // compare against the exponential in the two-smaller subspace
          const VectorXcd u_ref =
              tridiag_expm_e1(alpha, beta, m - 2, sign * tau, bnorm);
          err = std::max(err, (u.head(m - 2) - u_ref).norm() +
                                  u.tail(2).norm());
        }
      }
      if (breakdown || err <= opt.tol * norm0 * (tau / std::abs(t)) ||
          tau <= opt.min_substep * std::abs(t)) {
        if (tau <= opt.min_substep * std::abs(t) && !breakdown &&
            err > opt.tol * norm0 * (tau / std::abs(t)))
          throw std::runtime_error(
              "evolve: no convergence at the minimum substep");
        cur = basis.leftCols(m) * u;
        rep.est_error += err;
        ++rep.substeps;
        remaining -= tau;
        if (opt.substep_monitor) opt.substep_monitor(cur);
        if (err < 0.1 * opt.tol * norm0 * (tau / std::abs(t)))
          tau *= 2.0;  // substep was overly cautious
        break;
      }
      tau *= 0.5;
    }
  }
  return cur;
}

}  // namespace detail

VectorXcd dense_expm_oracle(const MatrixXcd& h, const VectorXcd& psi, double t,
                            Index dense_cap) {
  if (h.rows() != h.cols() || h.rows() != psi.size())
    throw std::invalid_argument("dense_expm_oracle: shape mismatch");
  if (h.rows() > dense_cap)
    throw BudgetError("dense_expm_oracle: dimension above the dense cap");
  const double herm_defect = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (herm_defect > 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("dense_expm_oracle: operator not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  VectorXcd phases(h.rows());
  for (Index j = 0; j < h.rows(); ++j)
    phases[j] = std::exp(Complex(0.0, -t * es.eigenvalues()[j]));
  return es.eigenvectors() *
         (phases.array() * (es.eigenvectors().adjoint() * psi).array())
             .matrix();
}

FockVector evolve_state(const ManyBodyHamiltonian& h, const FockVector& psi,
                        double t, const KrylovOptions& opt,
                        KrylovReport* report) {
  if (psi.basis.get() != &h.basis())
    throw std::invalid_argument("evolve_state: basis mismatch");
  const FockBasis& basis = *psi.basis;
  FockVector out{psi.basis, VectorXcd::Zero(basis.dim()), psi.leakage};
  const double skip_tol = 1e-3 * opt.tol;
  double skipped = 0.0;
  for (int block = 0; block < basis.sector_count(); ++block) {
    const Index off = basis.sector_offset(block);
    const Index bdim = basis.sector_dim(block);
    const VectorXcd seg = psi.coeffs.segment(off, bdim);
    const double segnorm = seg.norm();
    if (segnorm <= skip_tol * std::max(1.0, psi.norm())) {
      skipped += segnorm * segnorm;
      continue;
    }
    struct SectorOp {
      const ManyBodyHamiltonian* ham;
      int block;
      Index n;
      void apply(const VectorXcd& in, VectorXcd& out) const {
        ham->apply_sector(block, in, out);
      }
      Index rows() const { return n; }
    } sop{&h, block, bdim};
    out.coeffs.segment(off, bdim) = krylov_expm(sop, seg, t, opt, report);
  }
  out.leakage += skipped;
  return out;
}

}  // namespace mflab
