#include "mflab/fock.hpp"

#include <algorithm>
#include <cmath>

#include "mflab/propagate.hpp"
#include "mflab/threading.hpp"

namespace mflab {

namespace {
constexpr std::uint64_t kSaturate = std::uint64_t(4) << 60;

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t s = a + b;
  return (s < a || s > kSaturate) ? kSaturate : s;
}
}  // namespace

FockBasis::FockBasis(Grid grid, Sector sector)
    : grid_(std::move(grid)), sector_(sector), modes_(static_cast<int>(grid_.sites())) {
  if (sector_.n < 0)
    throw ConfigError("sector.n", "occupation must be nonnegative");
  if (sector_.n > 250)
    throw ConfigError("sector.n", "occupation beyond representable range");

  // C(a, b) for b <= n+1, larger b handled through symmetry
  const int bmax = sector_.n + 1;
  pascal_rows_ = bmax + 1;
  const int amax = modes_ + sector_.n + 1;
  pascal_.assign(static_cast<std::size_t>(amax + 1) * pascal_rows_, 0);
  for (int a = 0; a <= amax; ++a) {
    pascal_[static_cast<std::size_t>(a) * pascal_rows_] = 1;
    for (int b = 1; b <= std::min(a, bmax); ++b) {
      const std::uint64_t up = pascal_[static_cast<std::size_t>(a - 1) * pascal_rows_ + b];
      const std::uint64_t upleft =
          pascal_[static_cast<std::size_t>(a - 1) * pascal_rows_ + b - 1];
      pascal_[static_cast<std::size_t>(a) * pascal_rows_ + b] = sat_add(up, upleft);
    }
  }

  const int n_lo = sector_.is_cutoff() ? 0 : sector_.n;
  const int n_hi = sector_.n;
  std::uint64_t total = 0;
  offsets_.push_back(0);
  for (int n = n_lo; n <= n_hi; ++n) {
    total = sat_add(total, fixed_dim(modes_, n));
    if (total > static_cast<std::uint64_t>(kMaxStates))
      throw BudgetError("fock basis exceeds the state-count budget");
    offsets_.push_back(static_cast<Index>(total));
  }
  dim_ = static_cast<Index>(total);

  occ_.resize(static_cast<std::size_t>(dim_) * modes_);
  std::vector<std::uint8_t> s(modes_, 0);
  std::size_t cursor = 0;
  // lexicographic enumeration within each total-occupation sector
  auto emit = [&](int n) {
    auto rec = [&](auto&& self, int pos, int rem) -> void {
      if (pos == modes_ - 1) {
        s[pos] = static_cast<std::uint8_t>(rem);
        std::copy(s.begin(), s.end(), occ_.begin() + cursor);
        cursor += modes_;
        return;
      }
      for (int v = 0; v <= rem; ++v) {
        s[pos] = static_cast<std::uint8_t>(v);
        self(self, pos + 1, rem - v);
      }
    };
    rec(rec, 0, n);
  };
  for (int n = n_lo; n <= n_hi; ++n) emit(n);
}

std::uint64_t FockBasis::fixed_dim(int modes, int n) {
  // C(modes + n - 1, n), computed in floating point guardedly
  long double v = 1.0L;
  for (int j = 1; j <= n; ++j) v = v * (modes - 1 + j) / j;
  if (v > static_cast<long double>(kSaturate)) return kSaturate;
  return static_cast<std::uint64_t>(v + 0.5L);
}

std::uint64_t FockBasis::cutoff_dim(int modes, int n_max) {
  std::uint64_t total = 0;
  for (int n = 0; n <= n_max; ++n) total = sat_add(total, fixed_dim(modes, n));
  return total;
}

int FockBasis::total_occupation(Index i) const {
  if (!sector_.is_cutoff()) return sector_.n;
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
  return static_cast<int>(it - offsets_.begin()) - 1;
}

Index FockBasis::rank_in_sector(const std::uint8_t* occ, int total) const {
  std::uint64_t r = 0;
  int rem = total;
  for (int j = 0; j < modes_ - 1 && rem > 0; ++j) {
    const int v = occ[j];
    if (v > 0) {
      const int d = modes_ - 1 - j;
      r += choose(rem + d, std::min(d, rem)) -
           choose(rem - v + d, std::min(d, rem - v));
      rem -= v;
    }
  }
  return static_cast<Index>(r);
}

Index FockBasis::index_of(const std::uint8_t* occ, int total) const {
  if (sector_.is_cutoff()) {
    if (total > sector_.n)
      throw std::invalid_argument("index_of: total above the cutoff");
    return offsets_[total] + rank_in_sector(occ, total);
  }
  if (total != sector_.n)
    throw std::invalid_argument("index_of: total outside the fixed sector");
  return rank_in_sector(occ, total);
}

FockVector vacuum(std::shared_ptr<const FockBasis> basis) {
  if (!basis->sector().is_cutoff() && basis->sector().n != 0)
    throw std::invalid_argument("vacuum: basis has no zero-particle sector");
  FockVector v{std::move(basis), {}, 0.0};
  v.coeffs = VectorXcd::Zero(v.basis->dim());
  v.coeffs[0] = 1.0;
  return v;
}

namespace {

// a(f) kernel: src holds the input coefficients, dst receives the lowered
// vector (dst may be the same basis for Cutoff sectors)
void annihilate_into(const FockBasis& src, const VectorXcd& in,
                     const VectorXcd& f, const FockBasis& dst,
                     VectorXcd& out) {
  out = VectorXcd::Zero(dst.dim());
  const int cap = src.sector().n;
  for (Index i = 0; i < dst.dim(); ++i) {
    const std::uint8_t* occ = dst.occupation(i);
    const int total = dst.total_occupation(i);
    if (src.sector().is_cutoff() && total + 1 > cap) continue;
    std::uint8_t buf[512];
    std::copy(occ, occ + dst.modes(), buf);
    Complex acc = 0.0;
    for (int x = 0; x < dst.modes(); ++x) {
      if (f[x] == 0.0) continue;
      buf[x] = static_cast<std::uint8_t>(occ[x] + 1);
      acc += std::conj(f[x]) * std::sqrt(double(occ[x]) + 1.0) *
             in[src.index_of(buf, total + 1)];
      buf[x] = occ[x];
    }
    out[i] = acc;
  }
}

}  // namespace

FockVector apply_create(const VectorXcd& f, const FockVector& psi) {
  const FockBasis& b = *psi.basis;
  if (!b.sector().is_cutoff())
    throw std::invalid_argument("apply_create: FixedN state maps out of sector");
  if (f.size() != b.modes())
    throw std::invalid_argument("apply_create: mode count mismatch");
  FockVector out{psi.basis, VectorXcd::Zero(b.dim()), psi.leakage};
  for (Index i = 0; i < b.dim(); ++i) {
    const std::uint8_t* occ = b.occupation(i);
    const int total = b.total_occupation(i);
    if (total == 0) continue;
    std::uint8_t buf[512];
    std::copy(occ, occ + b.modes(), buf);
    Complex acc = 0.0;
    for (int x = 0; x < b.modes(); ++x) {
      if (occ[x] == 0 || f[x] == 0.0) continue;
      buf[x] = static_cast<std::uint8_t>(occ[x] - 1);
      acc += f[x] * std::sqrt(double(occ[x])) *
             psi.coeffs[b.index_of(buf, total - 1)];
      buf[x] = occ[x];
    }
    out.coeffs[i] = acc;
  }
  // the image of the top sector lies entirely outside the basis;
  // |a*(f) chi|^2 = |a(f) chi|^2 + |f|^2 |chi|^2 gives the lost norm exactly
  const int top = b.sector_count() - 1;
  const Index off = b.sector_offset(top);
  const Index bdim = b.sector_dim(top);
  const double top_mass = psi.coeffs.segment(off, bdim).squaredNorm();
  if (top_mass > 0) {
    VectorXcd chi = VectorXcd::Zero(b.dim());
    chi.segment(off, bdim) = psi.coeffs.segment(off, bdim);
    VectorXcd low;
    annihilate_into(b, chi, f, b, low);
    out.leakage += low.squaredNorm() + f.squaredNorm() * top_mass;
  }
  return out;
}

FockVector apply_annihilate(const VectorXcd& f, const FockVector& psi) {
  const FockBasis& b = *psi.basis;
  if (f.size() != b.modes())
    throw std::invalid_argument("apply_annihilate: mode count mismatch");
  std::shared_ptr<const FockBasis> target = psi.basis;
  if (!b.sector().is_cutoff()) {
    const int n = b.sector().n;
    target = std::make_shared<const FockBasis>(
        b.grid(), Sector::fixed(std::max(0, n - 1)));
    if (n == 0) return FockVector{target, VectorXcd::Zero(1), psi.leakage};
  }
  FockVector out{target, {}, psi.leakage};
  annihilate_into(b, psi.coeffs, f, *target, out.coeffs);
  return out;
}

FockVector lower_mode(const FockVector& psi, Index x) {
  VectorXcd f = VectorXcd::Zero(psi.basis->modes());
  f[x] = 1.0;
  return apply_annihilate(f, psi);
}

FockVector apply_number(const FockVector& psi) {
  const FockBasis& b = *psi.basis;
  FockVector out{psi.basis, VectorXcd(b.dim()), psi.leakage};
  for (int block = 0; block < b.sector_count(); ++block) {
    const double n = b.sector_total(block);
    out.coeffs.segment(b.sector_offset(block), b.sector_dim(block)) =
        n * psi.coeffs.segment(b.sector_offset(block), b.sector_dim(block));
  }
  return out;
}

double number_moment(const FockVector& psi, int power) {
  const FockBasis& b = *psi.basis;
  double num = 0.0;
  for (int block = 0; block < b.sector_count(); ++block) {
    const double n = b.sector_total(block);
    num += std::pow(n, power) *
           psi.coeffs.segment(b.sector_offset(block), b.sector_dim(block))
               .squaredNorm();
  }
  return num / psi.coeffs.squaredNorm();
}

ManyBodyHamiltonian::ManyBodyHamiltonian(std::shared_ptr<const FockBasis> basis,
                                         PotentialSpec pot, double n_param,
                                         int workers)
    : basis_(std::move(basis)),
      pot_(std::move(pot)),
      n_param_(n_param),
      workers_(workers) {
  const Grid& g = basis_->grid();
  if (pot_.pair.size() != g.sites() || pot_.external.size() != g.sites())
    throw ConfigError("potential", "shape mismatch with the basis grid");
  if (n_param_ == 0.0) {
    if (basis_->sector().is_cutoff())
      throw ConfigError("hamiltonian.n_param",
                        "required for a cutoff-sector basis");
    n_param_ = std::max(1, basis_->sector().n);
  }
  inv_h2_ = 1.0 / (g.spacing() * g.spacing());
}

double ManyBodyHamiltonian::diagonal(Index i) const {
  const FockBasis& b = *basis_;
  const Grid& g = b.grid();
  const std::uint8_t* occ = b.occupation(i);
  const int total = b.total_occupation(i);
  double d = 2.0 * g.dim() * inv_h2_ * total;
  double inter = 0.0;
  for (int x = 0; x < b.modes(); ++x) {
    if (occ[x] == 0) continue;
    d += pot_.external[x] * occ[x];
    for (int y = 0; y < b.modes(); ++y) {
      if (occ[y] == 0) continue;
      inter += pot_.pair[g.displacement_index(x, y)] * occ[x] * occ[y];
    }
    inter -= pot_.pair[0] * occ[x];  // normal ordering: n_x(n_x-1), not n_x^2
  }
  return d + inter / (2.0 * n_param_);
}

void ManyBodyHamiltonian::apply_sector(int block, const VectorXcd& in,
                                       VectorXcd& out) const {
  const FockBasis& b = *basis_;
  const Grid& g = b.grid();
  const Index off = b.sector_offset(block);
  const Index bdim = b.sector_dim(block);
  const int total = b.sector_total(block);
  if (in.size() != bdim) throw std::invalid_argument("apply_sector: size");
  out.resize(bdim);
  parallel_for(bdim, workers_, [&](Index lo, Index hi) {
    std::uint8_t buf[512];
    for (Index li = lo; li < hi; ++li) {
      const Index i = off + li;
      const std::uint8_t* occ = b.occupation(i);
      Complex acc = diagonal(i) * in[li];
      std::copy(occ, occ + b.modes(), buf);
      for (int x = 0; x < b.modes(); ++x) {
        if (occ[x] == 0) continue;
        for (int a = 0; a < g.dim(); ++a) {
          for (int step = -1; step <= 1; step += 2) {
            const Index y = g.neighbor(x, a, step);
            // hop gather: <i| a*_x a_y |j> with j = i - e_x + e_y
            buf[x] = static_cast<std::uint8_t>(occ[x] - 1);
            buf[y] = static_cast<std::uint8_t>(buf[y] + 1);
            const Index j = b.index_of(buf, total) - off;
            acc -= inv_h2_ *
                   std::sqrt(double(occ[x]) * double(occ[y] + 1)) * in[j];
            buf[x] = occ[x];
            buf[y] = occ[y];
          }
        }
      }
      out[li] = acc;
    }
  });
}

void ManyBodyHamiltonian::apply(const VectorXcd& in, VectorXcd& out) const {
  const FockBasis& b = *basis_;
  if (in.size() != b.dim()) throw std::invalid_argument("apply: size mismatch");
  out.resize(b.dim());
  for (int block = 0; block < b.sector_count(); ++block) {
    const Index off = b.sector_offset(block);
    const Index bdim = b.sector_dim(block);
    VectorXcd seg_out(bdim);
    const VectorXcd seg_in = in.segment(off, bdim);
    apply_sector(block, seg_in, seg_out);
    out.segment(off, bdim) = seg_out;
  }
}

double ManyBodyHamiltonian::norm_bound() const {
  const FockBasis& b = *basis_;
  const int n = b.max_total();
  const double ext =
      b.modes() ? pot_.external.cwiseAbs().maxCoeff() : 0.0;
  return 4.0 * b.grid().dim() * inv_h2_ * n + ext * n +
         pot_.sup_norm * n * double(n) / (2.0 * n_param_);
}

namespace {

// i (a*(f) - a(f)), the Hermitian generator behind W(f) = exp(a*(f) - a(f))
struct WeylGenerator {
  const FockBasis* basis;
  const VectorXcd* f;
  int workers;

  Index rows() const { return basis->dim(); }
  void apply(const VectorXcd& in, VectorXcd& out) const {
    const FockBasis& b = *basis;
    const VectorXcd& ff = *f;
    out.resize(b.dim());
    const int cap = b.sector().n;
    parallel_for(b.dim(), workers, [&](Index lo, Index hi) {
      std::uint8_t buf[512];
      for (Index i = lo; i < hi; ++i) {
        const std::uint8_t* occ = b.occupation(i);
        const int total = b.total_occupation(i);
        std::copy(occ, occ + b.modes(), buf);
        Complex acc = 0.0;
        for (int x = 0; x < b.modes(); ++x) {
          if (ff[x] == 0.0) continue;
          if (occ[x] > 0) {
            buf[x] = static_cast<std::uint8_t>(occ[x] - 1);
            acc += ff[x] * std::sqrt(double(occ[x])) *
                   in[b.index_of(buf, total - 1)];
            buf[x] = occ[x];
          }
          if (total + 1 <= cap) {
            buf[x] = static_cast<std::uint8_t>(occ[x] + 1);
            acc -= std::conj(ff[x]) * std::sqrt(double(occ[x]) + 1.0) *
                   in[b.index_of(buf, total + 1)];
            buf[x] = occ[x];
          }
        }
        out[i] = Complex(0.0, 1.0) * acc;
      }
    });
  }
};

// norm of the generator amplitude that would leave the basis from the top
// sector of psi; drives the truncation-error bound of weyl_apply
double boundary_flux(const FockBasis& b, const VectorXcd& f,
                     const VectorXcd& coeffs) {
  const int top = b.sector_count() - 1;
  const Index off = b.sector_offset(top);
  const Index bdim = b.sector_dim(top);
  const double top_mass = coeffs.segment(off, bdim).squaredNorm();
  if (top_mass == 0.0) return 0.0;
  VectorXcd chi = VectorXcd::Zero(b.dim());
  chi.segment(off, bdim) = coeffs.segment(off, bdim);
  VectorXcd low;
  annihilate_into(b, chi, f, b, low);
  return std::sqrt(low.squaredNorm() + f.squaredNorm() * top_mass);
}

}  // namespace

FockVector weyl_apply(const VectorXcd& f, const FockVector& psi,
                      const WeylOptions& opt) {
  const FockBasis& b = *psi.basis;
  if (!b.sector().is_cutoff())
    throw std::invalid_argument("weyl_apply: needs a cutoff-sector basis");
  if (f.size() != b.modes())
    throw std::invalid_argument("weyl_apply: mode count mismatch");
  if (f.squaredNorm() == 0.0) return psi;

  WeylGenerator gen{&b, &f, opt.workers};
  double max_flux = boundary_flux(b, f, psi.coeffs);
  KrylovOptions kopt;
  kopt.tol = opt.tol;
  kopt.mem_budget = opt.mem_budget;
  kopt.substep_monitor = [&](const VectorXcd& state) {
    max_flux = std::max(max_flux, boundary_flux(b, f, state));
  };
  KrylovReport rep;
  FockVector out{psi.basis, krylov_expm(gen, psi.coeffs, 1.0, kopt, &rep),
                 psi.leakage};
  out.leakage += max_flux * max_flux + rep.est_error * rep.est_error;
  return out;
}

int coherent_cutoff_policy(double f_norm_sq) {
  return static_cast<int>(
      std::ceil(f_norm_sq + 8.0 * std::sqrt(f_norm_sq) + 8.0));
}

FockVector coherent_state(std::shared_ptr<const FockBasis> basis,
                          const VectorXcd& f) {
  const FockBasis& b = *basis;
  if (!b.sector().is_cutoff())
    throw std::invalid_argument("coherent_state: needs a cutoff-sector basis");
  if (f.size() != b.modes())
    throw std::invalid_argument("coherent_state: mode count mismatch");
  const int cap = b.sector().n;
  // per-mode amplitude tables f(x)^n / sqrt(n!)
  MatrixXcd amp(b.modes(), cap + 1);
  for (int x = 0; x < b.modes(); ++x) {
    amp(x, 0) = 1.0;
    for (int n = 1; n <= cap; ++n)
      amp(x, n) = amp(x, n - 1) * f[x] / std::sqrt(double(n));
  }
  const double pref = std::exp(-0.5 * f.squaredNorm());
  FockVector out{std::move(basis), VectorXcd(b.dim()), 0.0};
  for (Index i = 0; i < b.dim(); ++i) {
    const std::uint8_t* occ = b.occupation(i);
    Complex c = pref;
    for (int x = 0; x < b.modes(); ++x)
      if (occ[x] > 0) c *= amp(x, occ[x]);
    out.coeffs[i] = c;
  }
  out.leakage = std::max(0.0, 1.0 - out.coeffs.squaredNorm());
  return out;
}

FockVector coherent_state(const Grid& grid, const VectorXcd& f) {
  const int cap = coherent_cutoff_policy(f.squaredNorm());
  auto basis = std::make_shared<const FockBasis>(grid, Sector::cutoff(cap));
  return coherent_state(std::move(basis), f);
}

FockVector factorized_state(const Grid& grid, const VectorXcd& phi, int n) {
  if (std::abs(phi.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("factorized_state: phi must be normalized");
  auto basis = std::make_shared<const FockBasis>(grid, Sector::fixed(n));
  const FockBasis& b = *basis;
  std::vector<double> sqrt_fact(n + 1, 1.0);
  for (int j = 1; j <= n; ++j) sqrt_fact[j] = sqrt_fact[j - 1] * std::sqrt(double(j));
  MatrixXcd pow_phi(b.modes(), n + 1);
  for (int x = 0; x < b.modes(); ++x) {
    pow_phi(x, 0) = 1.0;
    for (int j = 1; j <= n; ++j) pow_phi(x, j) = pow_phi(x, j - 1) * phi[x];
  }
  FockVector out{std::move(basis), VectorXcd(b.dim()), 0.0};
  for (Index i = 0; i < b.dim(); ++i) {
    const std::uint8_t* occ = b.occupation(i);
    Complex c = sqrt_fact[n];  // sqrt(n!/prod n_x!) prod phi^{n_x}
    for (int x = 0; x < b.modes(); ++x)
      if (occ[x] > 0) c *= pow_phi(x, occ[x]) / sqrt_fact[occ[x]];
    out.coeffs[i] = c;
  }
  return out;
}

Complex inner(const FockVector& a, const FockVector& b) {
  if (a.coeffs.size() != b.coeffs.size())
    throw std::invalid_argument("inner: basis mismatch");
  return a.coeffs.dot(b.coeffs);
}

}  // namespace mflab
