#include "mflab/scattering.hpp"

#include <cmath>
#include <memory>

namespace mflab {

RadialPotential RadialPotential::square_barrier(double v0, double radius,
                                                double r_max, double dr) {
  return RadialPotential{
      [v0, radius](double r) { return r < radius ? v0 : 0.0; }, r_max, dr};
}

RadialPotential RadialPotential::gaussian(double v0, double width,
                                          double r_max, double dr) {
  return RadialPotential{
      [v0, width](double r) { return v0 * std::exp(-(r * r) / (width * width)); },
      r_max, dr};
}

RadialPotential RadialPotential::from_samples(VectorXd values, double dr,
                                              double r_max) {
  auto samples = std::make_shared<VectorXd>(std::move(values));
  auto v = [samples, dr](double r) {
    // linear interpolation of samples at r_i = (i+1) dr
    const double pos = r / dr - 1.0;
    if (pos <= 0.0) return (*samples)[0];
    const auto i = static_cast<Index>(pos);
    if (i + 1 >= samples->size()) return 0.0;
    const double w = pos - double(i);
    return (1.0 - w) * (*samples)[i] + w * (*samples)[i + 1];
  };
  return RadialPotential{v, r_max, dr};
}

RadialPotential RadialPotential::scaled(double lambda) const {
  auto base = v;
  return RadialPotential{[base, lambda](double r) { return lambda * base(r); },
                         r_max, dr};
}

bool RadialPotential::nonnegative_on_mesh() const {
  const int n = static_cast<int>(std::llround(r_max / dr));
  for (int i = 0; i < n; ++i)
    if (v((i + 1) * dr) < -1e-14) return false;
  return true;
}

namespace {

struct SolveOnce {
  VectorXd u;   // u(r_i), r_i = (i+1) h
  VectorXd vr;  // V(r_i)
  double h;
  double a0;
  double slope;
  double fit_residual;
};

// one RK4 pass at mesh width h plus the linear asymptotic fit
SolveOnce integrate(const RadialPotential& pot, double h) {
  const int n = static_cast<int>(std::llround(pot.r_max / h));
  SolveOnce out;
  out.h = h;
  out.u.resize(n);
  out.vr.resize(n);
  double u = 0.0, up = 1.0, r = 0.0;
  auto rhs = [&pot](double r_, double u_) { return 0.5 * pot.v(r_) * u_; };
  for (int i = 0; i < n; ++i) {
    // classic RK4 for u'' = rhs(r, u)
    const double k1u = up, k1p = rhs(r, u);
    const double k2u = up + 0.5 * h * k1p, k2p = rhs(r + 0.5 * h, u + 0.5 * h * k1u);
    const double k3u = up + 0.5 * h * k2p, k3p = rhs(r + 0.5 * h, u + 0.5 * h * k2u);
    const double k4u = up + h * k3p, k4p = rhs(r + h, u + h * k3u);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    up += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    r += h;
    out.u[i] = u;
    out.vr[i] = pot.v(r);
    if (u <= 0.0)
      throw std::invalid_argument(
          "solve_zero_energy: u crossed zero (attractive potential outside "
          "scope)");
  }
  // least squares u = slope r + b on the asymptotic window
  const int lo = static_cast<int>(0.7 * n);
  double sr = 0, su = 0, srr = 0, sru = 0, cnt = 0;
  for (int i = lo; i < n; ++i) {
    const double ri = (i + 1) * h;
    sr += ri;
    su += out.u[i];
    srr += ri * ri;
    sru += ri * out.u[i];
    cnt += 1;
  }
  const double det = cnt * srr - sr * sr;
  out.slope = (cnt * sru - sr * su) / det;
  const double b = (su * srr - sr * sru) / det;
  out.a0 = -b / out.slope;
  double rss = 0;
  for (int i = lo; i < n; ++i) {
    const double ri = (i + 1) * h;
    const double res = out.u[i] - (out.slope * ri + b);
    rss += res * res;
  }
  out.fit_residual =
      std::sqrt(rss / cnt) / std::max(1e-300, std::abs(out.slope) * pot.r_max);
  return out;
}

double simpson(const VectorXd& samples, double h) {
  // integrand at r_0 = 0 vanishes for all our integrands (factor r or r^2)
  const int n = static_cast<int>(samples.size());
  double acc = 0.0;
  int i = 0;
  for (; i + 2 <= n; i += 2)
    acc += h / 3.0 *
           ((i == 0 ? 0.0 : samples[i - 1]) + 4.0 * samples[i] + samples[i + 1]);
  if (i + 1 <= n && i > 0)  // trapezoid tail for an even sample count
    acc += 0.5 * h * (samples[i - 1] + samples[i]);
  return acc;
}

}  // namespace

ScatteringResult solve_zero_energy(const RadialPotential& pot) {
  if (!(pot.r_max > 0) || !(pot.dr > 0))
    throw std::invalid_argument("solve_zero_energy: bad mesh parameters");
  double h = pot.dr;
  SolveOnce cur = integrate(pot, h);
  int refinements = 0;
  for (;;) {
    SolveOnce fine = integrate(pot, h / 2.0);
    const bool settled = std::abs(fine.a0 - cur.a0) < 1e-8;
    cur = std::move(fine);
    h /= 2.0;
    ++refinements;
    if (settled) break;
    if (refinements > 14)
      throw std::runtime_error("solve_zero_energy: mesh refinement stalled");
  }

  ScatteringResult res;
  res.dr = h;
  res.a0 = cur.a0;
  res.refinements = refinements;
  res.fit_residual = cur.fit_residual;
  const int n = static_cast<int>(cur.u.size());
  res.f.resize(n);
  for (int i = 0; i < n; ++i) {
    const double r = (i + 1) * h;
    res.f[i] = cur.u[i] / (cur.slope * r);
  }
  // 8 pi a0 = int V f  ->  a0_integral = 1/2 int_0^inf V(r) f(r) r^2 dr
  VectorXd integrand(n), vr2(n), vr1(n);
  for (int i = 0; i < n; ++i) {
    const double r = (i + 1) * h;
    integrand[i] = cur.vr[i] * res.f[i] * r * r;
    vr2[i] = cur.vr[i] * r * r;
    vr1[i] = cur.vr[i] * r;
  }
  res.a0_integral = 0.5 * simpson(integrand, h);
  res.b0 = 4.0 * M_PI * simpson(vr2, h);
  double sup_r2v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 1) * h;
    sup_r2v = std::max(sup_r2v, r * r * cur.vr[i]);
  }
  res.rho = sup_r2v + 4.0 * M_PI * simpson(vr1, h);

  // decay check against C r^-sigma, sigma > 5, on the outer half
  const double c_ref = std::abs(cur.vr[n / 2]) * std::pow((n / 2 + 1) * h, 5.0);
  for (int i = n / 2; i < n; ++i) {
    const double r = (i + 1) * h;
    if (std::abs(cur.vr[i]) > std::max(c_ref, 1e-12) * std::pow(r, -5.0) +
                                  1e-12)
      res.tail_flag = true;
  }
  return res;
}

double scaled_scattering_length(const RadialPotential& pot, int n) {
  if (n < 1) throw std::invalid_argument("scaled_scattering_length: n >= 1");
  const ScatteringResult base = solve_zero_energy(pot);
  if (n == 1) return base.a0;
  auto v = pot.v;
  const double dn = n;
  RadialPotential scaled{[v, dn](double r) { return dn * dn * v(dn * r); },
                         pot.r_max, pot.dr / dn};
  const ScatteringResult res = solve_zero_energy(scaled);
  const double expected = base.a0 / dn;
  if (std::abs(res.a0 - expected) > 1e-8 * std::max(1.0, std::abs(expected)))
    throw std::runtime_error(
        "scaled_scattering_length: a(V_n) deviates from a0/n");
  return res.a0;
}

double coupling_for_beta(const RadialPotential& pot, double beta) {
  if (!(beta > 0.0) || beta > 1.0)
    throw std::invalid_argument("coupling_for_beta: beta must lie in (0, 1]");
  if (!pot.nonnegative_on_mesh())
    throw std::invalid_argument("coupling_for_beta: potential must be >= 0");
  const ScatteringResult res = solve_zero_energy(pot);
  return beta == 1.0 ? 8.0 * M_PI * res.a0 : res.b0;
}

}  // namespace mflab
