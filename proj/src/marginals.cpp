#include "mflab/marginals.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mflab {

namespace {

// a_{x_1} .. a_{x_k} psi along a ladder of bases (FixedN descends, Cutoff
// stays in place)
VectorXcd lower_chain(const FockBasis& basis, const VectorXcd& coeffs,
                      const std::vector<Index>& tuple,
                      const std::vector<std::shared_ptr<const FockBasis>>& ladder) {
  VectorXcd cur = coeffs;
  const FockBasis* src = &basis;
  for (std::size_t step = 0; step < tuple.size(); ++step) {
    const FockBasis* dst = ladder.empty() ? src : ladder[step].get();
    VectorXcd next = VectorXcd::Zero(dst->dim());
    const Index x = tuple[step];
    const int cap = src->sector().n;
    for (Index i = 0; i < dst->dim(); ++i) {
      const std::uint8_t* occ = dst->occupation(i);
      const int total = dst->total_occupation(i);
      if (src->sector().is_cutoff() && total + 1 > cap) continue;
      std::uint8_t buf[512];
      std::copy(occ, occ + dst->modes(), buf);
      buf[x] = static_cast<std::uint8_t>(occ[x] + 1);
      next[i] = std::sqrt(double(occ[x]) + 1.0) *
                cur[src->index_of(buf, total + 1)];
    }
    cur = std::move(next);
    src = dst;
  }
  return cur;
}

void unpack_tuple(Index t, Index sites, int k, std::vector<Index>& out) {
  out.resize(k);
  for (int j = 0; j < k; ++j) {
    out[j] = t % sites;
    t /= sites;
  }
}

}  // namespace

ReducedDensityMatrix reduce(const FockVector& psi, int k, Index dense_cap) {
  const FockBasis& b = *psi.basis;
  const Grid& grid = b.grid();
  if (k < 1) throw std::invalid_argument("reduce: k must be >= 1");
  if (k > 3) throw std::invalid_argument("reduce: k is capped at 3");
  if (b.max_total() < k)
    throw std::invalid_argument("reduce: k exceeds the particle content");
  double side_d = 1.0;
  for (int j = 0; j < k; ++j) side_d *= double(grid.sites());
  if (side_d > double(dense_cap))
    throw BudgetError("reduce: k-body matrix side above the dense cap");
  const Index side = static_cast<Index>(side_d);

  // ladder of target bases for the annihilation chain
  std::vector<std::shared_ptr<const FockBasis>> ladder;
  if (!b.sector().is_cutoff()) {
    for (int j = 1; j <= k; ++j)
      ladder.push_back(std::make_shared<const FockBasis>(
          grid, Sector::fixed(b.sector().n - j)));
  } else {
    for (int j = 1; j <= k; ++j) ladder.push_back(psi.basis);
  }

  MatrixXcd rho(side, side);
  const double cache_bytes =
      double(side) * double(ladder.back()->dim()) * 16.0;
  std::vector<Index> tup;
  if (cache_bytes <= 512.0 * (1 << 20)) {
    std::vector<VectorXcd> lowered(side);
    for (Index t = 0; t < side; ++t) {
      unpack_tuple(t, grid.sites(), k, tup);
      lowered[t] = lower_chain(b, psi.coeffs, tup, ladder);
    }
    for (Index col = 0; col < side; ++col)
      for (Index row = 0; row <= col; ++row) {
        // rho(x; x') = <L_{x'} psi, L_x psi>
        rho(row, col) = lowered[col].dot(lowered[row]);
        rho(col, row) = std::conj(rho(row, col));
      }
  } else {
    std::vector<Index> tup2;
    for (Index col = 0; col < side; ++col) {
      unpack_tuple(col, grid.sites(), k, tup);
      const VectorXcd lc = lower_chain(b, psi.coeffs, tup, ladder);
      for (Index row = 0; row <= col; ++row) {
        unpack_tuple(row, grid.sites(), k, tup2);
        const VectorXcd lr = lower_chain(b, psi.coeffs, tup2, ladder);
        rho(row, col) = lc.dot(lr);
        rho(col, row) = std::conj(rho(row, col));
      }
    }
  }

  const double tr = rho.trace().real();
  if (!(tr > 0))
    throw std::invalid_argument("reduce: state has no k-particle content");
  rho /= tr;
  return ReducedDensityMatrix{grid, k, std::move(rho)};
}

double trace_norm(const MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const ReducedDensityMatrix& a,
                      const ReducedDensityMatrix& b) {
  if (!(a.grid == b.grid) || a.k != b.k)
    throw std::invalid_argument("trace_distance: shape mismatch");
  return trace_norm(a.rho - b.rho);
}

Complex observable_expectation(const ReducedDensityMatrix& rho,
                               const MatrixXcd& obs) {
  if (obs.rows() != rho.side() || obs.cols() != rho.side())
    throw std::invalid_argument("observable_expectation: shape mismatch");
  return (obs.transpose().cwiseProduct(rho.rho)).sum();
}

RankOneDistance trace_distance_rank_one(const ReducedDensityMatrix& gamma,
                                        const VectorXcd& phi) {
  if (gamma.k != 1)
    throw std::invalid_argument("trace_distance_rank_one: needs k = 1");
  if (std::abs(phi.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("trace_distance_rank_one: phi not normalized");
  MatrixXcd diff = gamma.rho - phi * phi.adjoint();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(diff, Eigen::EigenvaluesOnly);
  const double tn = es.eigenvalues().cwiseAbs().sum();
  const double op2 = 2.0 * es.eigenvalues().cwiseAbs().maxCoeff();
  if (std::abs(tn - op2) > 1e-8)
    throw std::runtime_error(
        "trace_distance_rank_one: trace norm and 2 op-norm disagree");
  return RankOneDistance{tn, op2};
}

MatrixXcd partial_trace_last(const MatrixXcd& rho, Index sites, int k) {
  if (k < 2) throw std::invalid_argument("partial_trace_last: k must be >= 2");
  Index small = 1;
  for (int j = 0; j < k - 1; ++j) small *= sites;
  if (rho.rows() != small * sites)
    throw std::invalid_argument("partial_trace_last: shape mismatch");
  MatrixXcd out = MatrixXcd::Zero(small, small);
  for (Index z = 0; z < sites; ++z)
    out += rho.block(z * small, z * small, small, small);
  return out;
}

VectorXcd tensor_power(const VectorXcd& phi, int k) {
  VectorXcd out = phi;
  for (int j = 1; j < k; ++j) {
    VectorXcd next(out.size() * phi.size());
    for (Index hi = 0; hi < phi.size(); ++hi)
      next.segment(hi * out.size(), out.size()) = phi[hi] * out;
    out = std::move(next);
  }
  return out;
}

ReducedDensityMatrix pure_power_rdm(const Grid& grid, const VectorXcd& phi,
                                    int k) {
  const VectorXcd v = tensor_power(phi, k);
  return ReducedDensityMatrix{grid, k, v * v.adjoint()};
}

}  // namespace mflab
