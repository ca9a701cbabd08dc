#include "mflab/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "mflab/marginals.hpp"
#include "mflab/propagate.hpp"

namespace mflab {

void ConvergenceExperiment::validate() const {
  if (n_list.size() < 3)
    throw ConfigError("n_list", "needs at least 3 particle numbers");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw ConfigError("n_list", "must be strictly increasing");
  if (sample_times.empty())
    throw ConfigError("sample_times", "must not be empty");
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] <= 0)
      throw ConfigError("sample_times", "times must be positive");
    if (i > 0 && sample_times[i] <= sample_times[i - 1])
      throw ConfigError("sample_times", "must be strictly increasing");
  }
  if (std::abs(phi0.norm() - 1.0) > 1e-10)
    throw ConfigError("phi0", "must be normalized");
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points,
                 double floor) {
  std::vector<std::pair<double, double>> kept;
  for (const auto& [n, d] : points)
    if (d > 10.0 * floor) kept.emplace_back(std::log(n), std::log(d));
  RateFit fit;
  fit.points_excluded = static_cast<int>(points.size() - kept.size());
  fit.points_used = static_cast<int>(kept.size());
  if (kept.size() < 3)
    throw std::invalid_argument(
        "fit_rate: fewer than 3 points above the numerical floor");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : kept) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(kept.size());
  const double det = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy * sxx - sx * sxy) / det;
  double rss = 0;
  for (const auto& [x, y] : kept) {
    const double r = y - (fit.slope * x + fit.intercept);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

HartreeTrajectory matched_hartree_trajectory(const ConvergenceExperiment& exp) {
  EffectiveConfig cfg{exp.grid, exp.effective_mode, exp.pot, exp.cubic_sigma};
  const double t_end = exp.sample_times.back();
  // pick the sample spacing so every requested time is a grid node
  int n = std::max(1, static_cast<int>(std::ceil(t_end / exp.hartree_dt)));
  for (; n < (1 << 22); ++n) {
    bool ok = true;
    for (const double t : exp.sample_times) {
      const double pos = t / t_end * n;
      if (std::abs(pos - std::llround(pos)) > 1e-9) ok = false;
    }
    if (ok) break;
  }
  return effective_evolve(cfg, exp.phi0, t_end, t_end / n);
}

namespace {

ConvergenceResult run_exact_family(const ConvergenceExperiment& exp,
                                   bool coherent) {
  exp.validate();
  ConvergenceResult res;
  const HartreeTrajectory traj = matched_hartree_trajectory(exp);
  double max_leak = 0.0;

  for (const int n : exp.n_list) {
    FockVector psi;
    std::shared_ptr<const FockBasis> basis;
    double state_leak = 0.0;
    if (coherent) {
      const int cap = coherent_cutoff_policy(double(n));
      basis = std::make_shared<const FockBasis>(exp.grid, Sector::cutoff(cap));
      psi = coherent_state(basis, std::sqrt(double(n)) * exp.phi0);
      state_leak = psi.leakage;
      if (state_leak > exp.leakage_tol) {
        res.notes.push_back("N=" + std::to_string(n) +
                            " aborted: coherent leakage above tolerance");
        continue;
      }
    } else {
      psi = factorized_state(exp.grid, exp.phi0, n);
      basis = psi.basis;
    }
    const ManyBodyHamiltonian ham(basis, exp.pot, double(n), exp.workers);
    KrylovOptions kopt;
    kopt.tol = exp.propagator_tol;

    double t_cur = 0.0;
    for (const double t : exp.sample_times) {
      psi = evolve_state(ham, psi, t - t_cur, kopt);
      t_cur = t;
      const ReducedDensityMatrix gamma = reduce(psi, 1);
      const ReducedDensityMatrix target =
          pure_power_rdm(exp.grid, traj.state_at(t), 1);
      DistanceRow row;
      row.n = n;
      row.t = t;
      row.distance = trace_distance(gamma, target);
      row.leakage = psi.leakage;
      max_leak = std::max(max_leak, psi.leakage);
      res.rows.push_back(row);
    }
  }

  res.floor = std::max(exp.propagator_tol, max_leak);
  for (const double t : exp.sample_times) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : res.rows)
      if (row.t == t) pts.emplace_back(double(row.n), row.distance);
    if (pts.size() >= 3) res.fits.emplace_back(t, fit_rate(pts, res.floor));
  }
  std::sort(res.rows.begin(), res.rows.end(), [](const auto& a, const auto& b) {
    return a.t != b.t ? a.t < b.t : a.n < b.n;
  });
  return res;
}

}  // namespace

ConvergenceResult run_factorized(const ConvergenceExperiment& exp) {
  return run_exact_family(exp, /*coherent=*/false);
}

ConvergenceResult run_coherent(const ConvergenceExperiment& exp) {
  return run_exact_family(exp, /*coherent=*/true);
}

ConvergenceResult run_delta_limit(const ConvergenceExperiment& exp) {
  for (Index r = 1; r < exp.grid.sites(); ++r)
    if (exp.pot.pair[r] != 0.0)
      throw ConfigError("potential",
                        "delta-limit run needs an on-site pair potential");
  ConvergenceExperiment local = exp;
  local.effective_mode = NonlinearityMode::kCubic;
  local.cubic_sigma = exp.pot.pair[0];
  return run_exact_family(local, /*coherent=*/false);
}

FluctuationResult fluctuation_growth(const ConvergenceExperiment& exp,
                                     int j_max) {
  exp.validate();
  if (j_max < 1) throw std::invalid_argument("fluctuation_growth: j_max >= 1");
  FluctuationResult res;
  const HartreeTrajectory traj = matched_hartree_trajectory(exp);

  for (const int n : exp.n_list) {
    const int cap = coherent_cutoff_policy(double(n));
    auto basis =
        std::make_shared<const FockBasis>(exp.grid, Sector::cutoff(cap));
    FockVector psi = coherent_state(basis, std::sqrt(double(n)) * exp.phi0);
    if (psi.leakage > exp.leakage_tol) {
      res.notes.push_back("N=" + std::to_string(n) +
                          " aborted: coherent leakage above tolerance");
      continue;
    }
    const ManyBodyHamiltonian ham(basis, exp.pot, double(n), exp.workers);
    KrylovOptions kopt;
    kopt.tol = exp.propagator_tol;
    WeylOptions wopt;
    wopt.workers = exp.workers;

    std::vector<std::pair<double, double>> first_moments;
    double t_cur = 0.0;
    for (const double t : exp.sample_times) {
      psi = evolve_state(ham, psi, t - t_cur, kopt);
      t_cur = t;
      const FockVector fluct =
          weyl_apply(-std::sqrt(double(n)) * traj.state_at(t), psi, wopt);
      for (int j = 1; j <= j_max; ++j) {
        FluctuationRow row;
        row.n = n;
        row.t = t;
        row.power = j;
        row.moment = number_moment(fluct, j);
        row.leakage = fluct.leakage;
        res.rows.push_back(row);
        if (j == 1) first_moments.emplace_back(t, row.moment);
      }
    }
    // exponential fit ln m1 = ln C + K t
    if (first_moments.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (const auto& [t, m1] : first_moments) {
        const double y = std::log(std::max(m1, 1e-300));
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
      }
      const double cnt = double(first_moments.size());
      const double det = cnt * sxx - sx * sx;
      ExpFit fit;
      fit.rate = (cnt * sxy - sx * sy) / det;
      fit.log_c = (sy * sxx - sx * sxy) / det;
      double rss = 0;
      for (const auto& [t, m1] : first_moments) {
        const double r =
            std::log(std::max(m1, 1e-300)) - (fit.log_c + fit.rate * t);
        rss += r * r;
      }
      fit.residual = std::sqrt(rss / cnt);
      res.fits.emplace_back(n, fit);
    }
  }
  return res;
}

}  // namespace mflab
