#include "mflab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "mflab/experiments.hpp"
#include "mflab/fock.hpp"
#include "mflab/hartree.hpp"
#include "mflab/hierarchy.hpp"
#include "mflab/io.hpp"
#include "mflab/marginals.hpp"
#include "mflab/probes.hpp"
#include "mflab/propagate.hpp"
#include "mflab/random.hpp"
#include "mflab/scattering.hpp"

namespace mflab {

namespace {

using nlohmann::json;

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct TaskContext {
  const Config* cfg;
  RunOptions opt;
  std::string hash8;
  std::vector<Assertion> assertions;
  json summary_extra = json::object();
  std::map<std::string, double> floors;

  void check(const std::string& name, bool pass, const std::string& detail) {
    assertions.push_back({name, pass, detail});
  }
  std::string table_path(const std::string& name) const {
    return opt.out_dir + "/" + name + "-" + hash8 + ".csv";
  }
};

Grid grid_from(const Config& cfg) {
  return Grid(cfg.get_int("grid.dim"), cfg.get_int("grid.m"),
              cfg.get_double("grid.h"));
}

VectorXd table_column_file(const std::string& path, Index size,
                           const std::string& field) {
  VectorXd out = VectorXd::Zero(size);
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot read file " + path);
  Index idx;
  double value;
  while (in >> idx >> value) {
    if (idx < 0 || idx >= size) throw ConfigError(field, "index out of range");
    out[idx] = value;
  }
  return out;
}

PotentialSpec pot_from(const Config& cfg, const Grid& grid) {
  const std::string kind = cfg.get("potential.kind");
  VectorXd ext = VectorXd::Zero(grid.sites());
  if (cfg.has("external.file"))
    ext = table_column_file(cfg.get("external.file"), grid.sites(),
                            "external.file");
  if (kind == "gaussian")
    return PotentialSpec::gaussian(grid, cfg.get_double("potential.amplitude"),
                                   cfg.get_double("potential.width"),
                                   std::move(ext));
  if (kind == "box")
    return PotentialSpec::box(grid, cfg.get_double("potential.amplitude"),
                              cfg.get_double("potential.radius"),
                              std::move(ext));
  if (kind == "delta")
    return PotentialSpec::kronecker_delta(grid, cfg.get_double("potential.g"),
                                          std::move(ext));
  if (kind == "zero")
    return PotentialSpec::make(grid, VectorXd::Zero(grid.sites()),
                               std::move(ext));
  if (kind == "table")
    return PotentialSpec::make(
        grid,
        table_column_file(cfg.get("potential.file"), grid.sites(),
                          "potential.file"),
        std::move(ext));
  throw ConfigError("potential.kind", "unknown family '" + kind + "'");
}

VectorXcd phi0_from(const Config& cfg, const Grid& grid) {
  const std::string kind = cfg.get("phi0.kind");
  VectorXcd phi(grid.sites());
  if (kind == "uniform") {
    phi.setOnes();
  } else if (kind == "modulated") {
    const double a = cfg.get_double("phi0.a");
    const int q = cfg.get_int("phi0.q");
    const double theta = cfg.get_double_or("phi0.theta", 0.0);
    const int m = grid.points_per_axis();
    for (Index s = 0; s < grid.sites(); ++s) {
      const double x = double(s % m);
      phi[s] = 1.0 + a * std::cos(2.0 * M_PI * q * x / m + theta);
    }
  } else if (kind == "bump") {
    const double w = cfg.get_double("phi0.width");
    for (Index s = 0; s < grid.sites(); ++s) {
      const double d = grid.displacement_distance(s);
      phi[s] = std::exp(-(d * d) / (w * w));
    }
  } else if (kind == "table") {
    std::ifstream in(cfg.get("phi0.file"));
    if (!in) throw ConfigError("phi0.file", "cannot read file");
    for (Index s = 0; s < grid.sites(); ++s) {
      double re = 0, im = 0;
      if (!(in >> re >> im)) throw ConfigError("phi0.file", "truncated file");
      phi[s] = Complex(re, im);
    }
  } else {
    throw ConfigError("phi0.kind", "unknown family '" + kind + "'");
  }
  if (phi.norm() == 0) throw ConfigError("phi0", "vanishing state");
  return phi / phi.norm();
}

ConvergenceExperiment experiment_from(const Config& cfg, const RunOptions& opt) {
  ConvergenceExperiment exp{grid_from(cfg),
                            PotentialSpec{},
                            VectorXcd{},
                            cfg.get_int_list("n_list"),
                            cfg.get_double_list("sample_times")};
  exp.pot = pot_from(cfg, exp.grid);
  exp.phi0 = phi0_from(cfg, exp.grid);
  exp.hartree_dt = cfg.get_double("hartree.dt");
  exp.propagator_tol = cfg.get_double("tol.propagator");
  exp.leakage_tol = cfg.get_double_or("tol.leakage", 1e-8);
  exp.workers = opt.workers;
  return exp;
}

std::string fmtc(double v) { return format_full(v); }

void write_distance_outputs(TaskContext& ctx, const ConvergenceResult& res) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : res.rows)
    rows.push_back({std::to_string(r.n), fmtc(r.t), fmtc(r.distance),
                    fmtc(r.leakage)});
  write_csv(ctx.table_path("distances"), {"N", "t", "distance", "leakage"},
            rows);
  json fits = json::array();
  for (const auto& [t, fit] : res.fits)
    fits.push_back({{"t", t},
                    {"slope", fit.slope},
                    {"intercept", fit.intercept},
                    {"residual", fit.residual},
                    {"points_used", fit.points_used},
                    {"points_excluded", fit.points_excluded}});
  json distances = json::array();
  for (const auto& r : res.rows)
    distances.push_back({{"N", r.n},
                         {"t", r.t},
                         {"distance", r.distance},
                         {"leakage", r.leakage}});
  ctx.summary_extra["fits"] = fits;
  ctx.summary_extra["distances"] = distances;
  ctx.summary_extra["notes"] = res.notes;
  ctx.floors["distance_floor"] = res.floor;
}

void assert_convergence(TaskContext& ctx, const ConvergenceResult& res) {
  const Config& cfg = *ctx.cfg;
  if (cfg.get_bool_or("assert.monotone", true)) {
    bool monotone = true;
    std::string detail;
    for (const auto& [t, fit] : res.fits) (void)t;
    std::map<double, std::vector<std::pair<int, double>>> by_time;
    for (const auto& r : res.rows) by_time[r.t].emplace_back(r.n, r.distance);
    for (auto& [t, pts] : by_time) {
      std::sort(pts.begin(), pts.end());
      for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].second >= pts[i - 1].second) {
          monotone = false;
          detail = "t=" + fmtc(t) + " D(N=" + std::to_string(pts[i].first) +
                   ") did not decrease";
        }
    }
    ctx.check("distance-monotone-in-N", monotone, detail);
  }
  if (cfg.has("assert.slope_max")) {
    const double bound = cfg.get_double("assert.slope_max");
    for (const auto& [t, fit] : res.fits)
      ctx.check("rate-slope(t=" + fmtc(t) + ")", fit.slope <= bound,
                "slope " + fmtc(fit.slope) + " vs bound " + fmtc(bound));
  }
  if (cfg.has("assert.residual_max")) {
    const double bound = cfg.get_double("assert.residual_max");
    for (const auto& [t, fit] : res.fits)
      ctx.check("rate-residual(t=" + fmtc(t) + ")", fit.residual <= bound,
                "residual " + fmtc(fit.residual) + " vs bound " + fmtc(bound));
  }
  for (const auto& note : res.notes)
    ctx.check("run-note", false, note);  // aborted N counts as a failure
}

// ---------------------------------------------------------------- tasks ---

void task_evolve_exact(TaskContext& ctx) {
  const Config& cfg = *ctx.cfg;
  const Grid grid = grid_from(cfg);
  const PotentialSpec pot = pot_from(cfg, grid);
  const VectorXcd phi0 = phi0_from(cfg, grid);
  const std::string kind = cfg.get("state.kind");
  const int n = cfg.get_int("state.n");
  const double t_final = cfg.get_double("t.final");
  const int samples = cfg.get_int_or("sample.count", 8);
  KrylovOptions kopt;
  kopt.tol = cfg.get_double("tol.propagator");

  FockVector psi;
  if (kind == "factorized") {
    psi = factorized_state(grid, phi0, n);
  } else if (kind == "coherent") {
    psi = coherent_state(grid, std::sqrt(double(n)) * phi0);
  } else {
    throw ConfigError("state.kind", "expected factorized or coherent");
  }
  const ManyBodyHamiltonian ham(psi.basis, pot, double(n), ctx.opt.workers);

  auto energy_of = [&](const FockVector& v) {
    VectorXcd hv;
    ham.apply(v.coeffs, hv);
    return std::real(v.coeffs.dot(hv)) / v.coeffs.squaredNorm();
  };

  std::vector<std::vector<std::string>> rows;
  const double norm0 = psi.norm();
  const double e0 = energy_of(psi);
  const double n0 = number_moment(psi, 1);
  rows.push_back({fmtc(0.0), fmtc(norm0), fmtc(e0), fmtc(n0),
                  fmtc(psi.leakage)});
  double norm_dev = 0, e_dev = 0, n_dev = 0;
  for (int q = 1; q <= samples; ++q) {
    psi = evolve_state(ham, psi, t_final / samples, kopt);
    const double nr = psi.norm(), ee = energy_of(psi), nn = number_moment(psi, 1);
    rows.push_back({fmtc(q * t_final / samples), fmtc(nr), fmtc(ee), fmtc(nn),
                    fmtc(psi.leakage)});
    norm_dev = std::max(norm_dev, std::abs(nr - norm0));
    e_dev = std::max(e_dev, std::abs(ee - e0));
    n_dev = std::max(n_dev, std::abs(nn - n0));
  }
  write_csv(ctx.table_path("exact_trajectory"),
            {"t", "norm", "energy", "number", "leakage"}, rows);

  const std::string snap = cfg.get_or("snapshot.format", "none");
  if (snap == "text")
    save_fock_text(ctx.opt.out_dir + "/state_final-" + ctx.hash8 + ".fvec", psi);
  else if (snap == "binary")
    save_fock_binary(ctx.opt.out_dir + "/state_final-" + ctx.hash8 + ".fvb", psi);
  else if (snap != "none")
    throw ConfigError("snapshot.format", "expected none, text or binary");

  const double norm_tol = cfg.get_double("assert.norm_tol");
  const double cons_tol = cfg.get_double("assert.conservation_tol");
  ctx.check("norm-conservation", norm_dev <= norm_tol,
            "max deviation " + fmtc(norm_dev));
  ctx.check("energy-conservation", e_dev <= cons_tol * (1.0 + std::abs(e0)),
            "max deviation " + fmtc(e_dev));
  ctx.check("number-conservation", n_dev <= cons_tol * (1.0 + std::abs(n0)),
            "max deviation " + fmtc(n_dev));
  ctx.floors["leakage"] = psi.leakage;
  ctx.summary_extra["energy0"] = e0;
  ctx.summary_extra["number0"] = n0;
}

void task_evolve_hartree(TaskContext& ctx) {
  const Config& cfg = *ctx.cfg;
  const Grid grid = grid_from(cfg);
  EffectiveConfig ecfg{grid, NonlinearityMode::kConvolution, pot_from(cfg, grid),
                       0.0};
  const std::string mode = cfg.get("mode");
  if (mode == "cubic") {
    ecfg.mode = NonlinearityMode::kCubic;
    ecfg.sigma = cfg.get_double("sigma");
  } else if (mode != "convolution") {
    throw ConfigError("mode", "expected convolution or cubic");
  }
  const VectorXcd phi0 = phi0_from(cfg, grid);
  const double t_final = cfg.get_double("t.final");
  const HartreeTrajectory traj =
      effective_evolve(ecfg, phi0, t_final, cfg.get_double("hartree.dt"));

  std::vector<std::string> header = {"t", "mass", "energy"};
  for (Index s = 0; s < grid.sites(); ++s) {
    header.push_back("re_" + std::to_string(s));
    header.push_back("im_" + std::to_string(s));
  }
  std::vector<std::vector<std::string>> rows;
  double mass_dev = 0.0;
  for (std::size_t q = 0; q < traj.states.size(); ++q) {
    const VectorXcd& s = traj.states[q];
    std::vector<std::string> row = {fmtc(traj.times[q]), fmtc(s.norm()),
                                    fmtc(effective_energy(ecfg, s))};
    for (Index x = 0; x < s.size(); ++x) {
      row.push_back(fmtc(s[x].real()));
      row.push_back(fmtc(s[x].imag()));
    }
    rows.push_back(std::move(row));
    mass_dev = std::max(mass_dev, std::abs(s.norm() - 1.0));
  }
  write_csv(ctx.table_path("hartree_trajectory"), header, rows);

  ctx.check("mass-conservation", mass_dev <= cfg.get_double("assert.mass_tol"),
            "max deviation " + fmtc(mass_dev));
  ctx.check("energy-conservation",
            traj.energy_drift <= cfg.get_double("assert.energy_rel_tol"),
            "relative drift " + fmtc(traj.energy_drift));
  ctx.summary_extra["energy_drift"] = traj.energy_drift;
}

void task_converge(TaskContext& ctx, const std::string& which) {
  const ConvergenceExperiment exp = experiment_from(*ctx.cfg, ctx.opt);
  ConvergenceResult res;
  if (which == "factorized")
    res = run_factorized(exp);
  else if (which == "coherent")
    res = run_coherent(exp);
  else
    res = run_delta_limit(exp);
  write_distance_outputs(ctx, res);
  assert_convergence(ctx, res);
}

void task_fluctuations(TaskContext& ctx) {
  const Config& cfg = *ctx.cfg;
  const ConvergenceExperiment exp = experiment_from(cfg, ctx.opt);
  const int j_max = cfg.get_int_or("j_max", 2);
  const FluctuationResult res = fluctuation_growth(exp, j_max);

  std::vector<std::vector<std::string>> rows;
  for (const auto& r : res.rows)
    rows.push_back({std::to_string(r.n), fmtc(r.t), std::to_string(r.power),
                    fmtc(r.moment), fmtc(r.leakage)});
  write_csv(ctx.table_path("moments"), {"N", "t", "j", "moment", "leakage"},
            rows);

  json fits = json::array();
  for (const auto& [n, fit] : res.fits)
    fits.push_back({{"N", n},
                    {"rate", fit.rate},
                    {"log_c", fit.log_c},
                    {"residual", fit.residual}});
  ctx.summary_extra["exp_fits"] = fits;
  ctx.summary_extra["notes"] = res.notes;

  // N-uniformity of the first moment at every sample time
  if (cfg.has("assert.uniformity_max")) {
    const double bound = cfg.get_double("assert.uniformity_max");
    for (const double t : exp.sample_times) {
      double lo = 1e300, hi = 0.0;
      for (const auto& r : res.rows)
        if (r.power == 1 && r.t == t) {
          lo = std::min(lo, r.moment);
          hi = std::max(hi, r.moment);
        }
      const double ratio = hi / std::max(lo, 1e-300);
      ctx.check("fluctuation-uniformity(t=" + fmtc(t) + ")", ratio < bound,
                "max/min " + fmtc(ratio));
    }
  }
  if (cfg.has("assert.expfit_residual_max")) {
    const double bound = cfg.get_double("assert.expfit_residual_max");
    for (const auto& [n, fit] : res.fits)
      ctx.check("fluctuation-expfit(N=" + std::to_string(n) + ")",
                fit.residual < bound, "residual " + fmtc(fit.residual));
  }
  for (const auto& note : res.notes) ctx.check("run-note", false, note);
}

void task_hierarchy(TaskContext& ctx) {
  const Config& cfg = *ctx.cfg;
  const Grid grid = grid_from(cfg);
  const PotentialSpec pot = pot_from(cfg, grid);
  Rng rng(ctx.opt.seed);

  // trace-norm conservation and the collision bounds on random inputs
  const int trials = cfg.get_int_or("random.trials", 100);
  double worst_cu = 0.0, worst_a = -1e300, worst_b = -1e300;
  for (int trial = 0; trial < trials; ++trial) {
    const int k = 1 + (trial % 2);
    Index side = 1, side_up = 1;
    for (int j = 0; j < k; ++j) side *= grid.sites();
    side_up = side * grid.sites();
    const MatrixXcd gamma = random_hermitian(side, rng);
    const MatrixXcd gamma_up = random_hermitian(side_up, rng);
    const double t = rng.uniform();
    worst_cu = std::max(
        worst_cu, std::abs(trace_norm(free_evolution(grid, pot, k, t, gamma)) -
                           trace_norm(gamma)));
    const double tn_a = trace_norm(
        MatrixXcd(Complex(0, 1) * collision_A(grid, pot.pair, k, gamma)));
    worst_a = std::max(worst_a, tn_a - double(k) * double(k) * pot.sup_norm *
                                          trace_norm(gamma));
    const double tn_b = trace_norm(
        MatrixXcd(Complex(0, 1) * collision_B(grid, pot.pair, k, gamma_up)));
    worst_b = std::max(worst_b, tn_b - 2.0 * double(k) * pot.sup_norm *
                                           trace_norm(gamma_up));
  }
  ctx.check("free-evolution-isometry", worst_cu <= 1e-10,
            "worst defect " + fmtc(worst_cu));
  ctx.check("collision-A-bound", worst_a <= 1e-10,
            "worst margin " + fmtc(worst_a));
  ctx.check("collision-B-bound", worst_b <= 1e-10,
            "worst margin " + fmtc(worst_b));

  // residual self-convergence for the factorized family
  const VectorXcd phi0 = phi0_from(cfg, grid);
  EffectiveConfig ecfg{grid, NonlinearityMode::kConvolution, pot, 0.0};
  const double t_res = cfg.get_double("t.final");
  const int k_res = cfg.get_int_or("k", 1);
  std::vector<double> dts = cfg.get_double_list("quad.dts");
  std::sort(dts.begin(), dts.end(), std::greater<>());
  const HartreeTrajectory traj =
      effective_evolve(ecfg, phi0, t_res, dts.back());
  std::vector<std::vector<std::string>> rrows;
  std::vector<double> residuals;
  for (const double dt : dts) {
    const double r = infinite_hierarchy_residual(ecfg, traj, k_res, t_res, dt);
    residuals.push_back(r);
    rrows.push_back({fmtc(dt), fmtc(t_res), fmtc(r)});
  }
  write_csv(ctx.table_path("residuals"), {"dt", "t", "residual"}, rrows);
  json orders = json::array();
  for (std::size_t i = 1; i < residuals.size(); ++i) {
    const double order = std::log2(residuals[i - 1] / residuals[i]) /
                         std::log2(dts[i - 1] / dts[i]);
    orders.push_back(order);
    if (cfg.has("assert.order_band")) {
      const auto band = cfg.get_double_list("assert.order_band");
      ctx.check("residual-order(step " + std::to_string(i) + ")",
                order >= band[0] && order <= band[1], "order " + fmtc(order));
    }
  }
  if (cfg.has("assert.residual_max"))
    ctx.check("residual-at-finest-dt",
              residuals.back() <= cfg.get_double("assert.residual_max"),
              "residual " + fmtc(residuals.back()));
  ctx.summary_extra["residuals"] = residuals;
  ctx.summary_extra["residual_orders"] = orders;

  // Picard contraction
  const double t_pic = cfg.get_double("picard.t");
  const int orders_pic = cfg.get_int_or("picard.orders", 4);
  PicardOptions popt;
  popt.quad_dt = cfg.get_double("picard.quad_dt");
  popt.k_max = cfg.get_int_or("picard.k_max", 4);
  const HartreeTrajectory ptraj =
      effective_evolve(ecfg, phi0, t_pic, popt.quad_dt);
  DensityFamily family0{grid, {}};
  for (int k = 1; k <= popt.k_max; ++k)
    family0.gammas.push_back(pure_power_rdm(grid, phi0, k).rho);
  const PicardResult pres =
      picard_iterate(family0, ecfg, ptraj, t_pic, orders_pic, popt);
  std::vector<std::vector<std::string>> prows;
  for (std::size_t m = 0; m < pres.increments.size(); ++m)
    prows.push_back(
        {std::to_string(m + 1), fmtc(t_pic), fmtc(pres.increments[m])});
  write_csv(ctx.table_path("picard"), {"order", "t", "increment"}, prows);
  ctx.summary_extra["picard_increments"] = pres.increments;
  if (cfg.has("assert.increment_ratio_max")) {
    const double bound = cfg.get_double("assert.increment_ratio_max");
    for (std::size_t m = 1; m + 1 < pres.increments.size(); ++m) {
      // the last genuine increment ratio before closure degeneracy
      const double ratio = pres.increments[m] /
                           std::max(pres.increments[m - 1], 1e-300);
      ctx.check("picard-ratio(order " + std::to_string(m + 1) + ")",
                ratio <= bound, "ratio " + fmtc(ratio));
    }
  }
}

void task_scattering(TaskContext& ctx) {
  const Config& cfg = *ctx.cfg;
  const std::string kind = cfg.get("radial.kind");
  const double rmax = cfg.get_double("radial.rmax");
  const double dr = cfg.get_double("radial.dr");
  RadialPotential pot;
  double closed_form_a0 = std::nan("");
  if (kind == "square-barrier") {
    const double v0 = cfg.get_double("radial.v0");
    const double radius = cfg.get_double("radial.radius");
    pot = RadialPotential::square_barrier(v0, radius, rmax, dr);
    const double kappa = std::sqrt(0.5 * v0);
    closed_form_a0 = radius - std::tanh(kappa * radius) / kappa;
  } else if (kind == "gaussian") {
    pot = RadialPotential::gaussian(cfg.get_double("radial.v0"),
                                    cfg.get_double("radial.width"), rmax, dr);
  } else {
    throw ConfigError("radial.kind", "expected square-barrier or gaussian");
  }

  const ScatteringResult res = solve_zero_energy(pot);
  json out = {{"a0", res.a0},
              {"a0_integral", res.a0_integral},
              {"b0", res.b0},
              {"rho", res.rho},
              {"fit_residual", res.fit_residual},
              {"tail_flag", res.tail_flag},
              {"refinements", res.refinements},
              {"mesh_dr", res.dr}};
  if (!std::isnan(closed_form_a0)) out["a0_closed_form"] = closed_form_a0;

  std::vector<std::vector<std::string>> frows;
  const int stride = std::max<int>(1, static_cast<int>(res.f.size()) / 2048);
  for (int i = 0; i < res.f.size(); i += stride)
    frows.push_back({fmtc((i + 1) * res.dr), fmtc(res.f[i])});
  write_csv(ctx.table_path("profile"), {"r", "f"}, frows);

  const double a_rel = std::abs(res.a0 - res.a0_integral) /
                       std::max(1e-300, std::abs(res.a0));
  ctx.check("integral-identity",
            a_rel <= cfg.get_double_or("assert.integral_rel", 1e-6),
            "relative gap " + fmtc(a_rel));
  if (!std::isnan(closed_form_a0)) {
    const double cf_rel = std::abs(res.a0 - closed_form_a0) /
                          std::max(1e-300, std::abs(closed_form_a0));
    ctx.check("closed-form",
              cf_rel <= cfg.get_double_or("assert.closed_form_rel", 1e-6),
              "relative gap " + fmtc(cf_rel));
  }
  ctx.check("f-bounds", res.f.minCoeff() > 0.0 && res.f.maxCoeff() <= 1.0 + 1e-12,
            "range [" + fmtc(res.f.minCoeff()) + ", " + fmtc(res.f.maxCoeff()) +
                "]");

  if (cfg.has("scale.n")) {
    const int n = cfg.get_int("scale.n");
    bool ok = true;
    std::string detail;
    double a_scaled = 0.0;
    try {
      a_scaled = scaled_scattering_length(pot, n);
      detail = "a(V_n) = " + fmtc(a_scaled);
    } catch (const std::runtime_error& e) {
      ok = false;
      detail = e.what();
    }
    ctx.check("scaled-length", ok, detail);
    out["a_scaled"] = a_scaled;
    out["scale_n"] = n;
  }

  if (cfg.has("lambda.count")) {
    const int count = cfg.get_int("lambda.count");
    const double lmax = cfg.get_double("lambda.max");
    bool monotone = true, born = true;
    double prev = -1e300;
    json family = json::array();
    for (int i = 1; i <= count; ++i) {
      const double lam = lmax * i / count;
      const ScatteringResult r = solve_zero_energy(pot.scaled(lam));
      family.push_back({{"lambda", lam}, {"a0", r.a0}, {"b0", r.b0}});
      if (r.a0 < prev - 1e-12) monotone = false;
      if (8.0 * M_PI * r.a0 > r.b0 * (1.0 + 1e-9)) born = false;
      prev = r.a0;
    }
    out["lambda_family"] = family;
    ctx.check("a0-monotone-in-strength", monotone, "");
    ctx.check("born-dominates-8pia0", born, "");
  }

  write_text_file(ctx.opt.out_dir + "/scattering-" + ctx.hash8 + ".json",
                  out.dump(2) + "\n");
  ctx.summary_extra["scattering"] = out;
}

void task_probes(TaskContext& ctx) {
  const Config& cfg = *ctx.cfg;
  const Grid grid = grid_from(cfg);
  if (grid.dim() != 3) throw ConfigError("grid.dim", "probes need dim = 3");
  if (grid.points_per_axis() > 8)
    throw ConfigError("grid.m", "probes are capped at m = 8");
  const PotentialSpec pot = pot_from(cfg, grid);
  const int trials = cfg.get_int("probes.trials");
  if (trials < 100) throw ConfigError("probes.trials", "must be >= 100");

  std::vector<std::vector<std::string>> rows;
  auto stability = [&](const std::string& name, auto&& probe) {
    const ProbeResult base = probe(trials);
    const ProbeResult doubled = probe(2 * trials);
    rows.push_back({name, std::to_string(trials), fmtc(base.max_ratio)});
    rows.push_back({name, std::to_string(2 * trials), fmtc(doubled.max_ratio)});
    const double drift =
        doubled.max_ratio / std::max(base.max_ratio, 1e-300);
    ctx.check(name + "-stability",
              std::isfinite(base.max_ratio) && drift < 2.0,
              "drift x" + fmtc(drift));
    ctx.summary_extra[name] = {{"max_ratio", base.max_ratio},
                               {"max_ratio_doubled", doubled.max_ratio}};
  };
  stability("sobolev-L1", [&](int n) {
    return probe_sobolev_L1(grid, pot.pair, n, ctx.opt.seed);
  });
  stability("nabla-dot", [&](int n) {
    return probe_nabla_dot(grid, pot.pair, n, ctx.opt.seed);
  });

  const std::string mkind = cfg.get_or("mollifier.kind", "gaussian");
  std::function<double(double)> profile;
  if (mkind == "gaussian")
    profile = [](double u) { return std::exp(-u * u); };
  else if (mkind == "triangle")
    profile = [](double u) { return std::max(0.0, 1.0 - 2.0 * u); };
  else
    throw ConfigError("mollifier.kind", "expected gaussian or triangle");

  const double kappa = cfg.get_double("probes.kappa");
  std::vector<double> alphas = cfg.get_double_list("probes.alphas");
  std::sort(alphas.begin(), alphas.end(), std::greater<>());
  const auto ladder =
      probe_poincare(grid, profile, alphas, kappa, trials, ctx.opt.seed);
  json jladder = json::array();
  for (const auto& row : ladder) {
    rows.push_back({"poincare", fmtc(row.alpha), fmtc(row.max_ratio)});
    jladder.push_back({{"alpha", row.alpha}, {"max_ratio", row.max_ratio}});
  }
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    const double inflation =
        ladder[i].max_ratio / std::max(ladder[i - 1].max_ratio, 1e-300);
    ctx.check("poincare-ladder(alpha=" + fmtc(ladder[i].alpha) + ")",
              inflation <= 1.5, "inflation x" + fmtc(inflation));
  }
  ctx.summary_extra["poincare"] = jladder;
  write_csv(ctx.table_path("ratios"), {"probe", "param", "max_ratio"}, rows);
}

}  // namespace

int run_command(const RunOptions& opt, std::ostream& log) {
  Config cfg;
  std::string task;
  try {
    cfg = Config::parse_file(opt.config_path);
    task = cfg.get("task");
    std::filesystem::create_directories(opt.out_dir);

    TaskContext ctx;
    ctx.cfg = &cfg;
    ctx.opt = opt;
    ctx.hash8 = hash_hex(fnv1a64(cfg.raw_text())).substr(0, 8);

    if (task == "evolve-exact")
      task_evolve_exact(ctx);
    else if (task == "evolve-hartree")
      task_evolve_hartree(ctx);
    else if (task == "converge-factorized")
      task_converge(ctx, "factorized");
    else if (task == "converge-coherent")
      task_converge(ctx, "coherent");
    else if (task == "converge-delta")
      task_converge(ctx, "delta");
    else if (task == "fluctuations")
      task_fluctuations(ctx);
    else if (task == "hierarchy")
      task_hierarchy(ctx);
    else if (task == "scattering")
      task_scattering(ctx);
    else if (task == "probes")
      task_probes(ctx);
    else
      throw ConfigError("task", "unknown task '" + task + "'");

    // manifest: everything needed to reproduce the run
    json tolerances = json::object();
    for (const auto& [k, v] : cfg.entries())
      if (k.rfind("tol.", 0) == 0 || k.rfind("assert.", 0) == 0)
        tolerances[k] = v;
    json manifest = {
        {"schema_version", kSchemaVersion},
        {"tool_version", kToolVersion},
        {"task", task},
        {"config_hash", hash_hex(fnv1a64(cfg.raw_text()))},
        {"seed", opt.seed},
        {"workers", opt.workers},
        {"dense_cap", opt.dense_cap},
        {"enumeration_version", FockBasis::kEnumerationVersion},
        {"tolerances", tolerances},
        {"floors", ctx.floors},
    };
    json jconfig = json::object();
    for (const auto& [k, v] : cfg.entries()) jconfig[k] = v;
    manifest["config"] = jconfig;
    write_text_file(opt.out_dir + "/manifest.json", manifest.dump(2) + "\n");

    json summary = ctx.summary_extra;
    summary["schema_version"] = kSchemaVersion;
    summary["task"] = task;
    summary["config_hash"] = hash_hex(fnv1a64(cfg.raw_text()));
    json jassert = json::array();
    bool all_pass = true;
    for (const auto& a : ctx.assertions) {
      jassert.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
      if (!a.pass) {
        all_pass = false;
        log << "assertion failed: " << a.name
            << (a.detail.empty() ? "" : " (" + a.detail + ")") << "\n";
      }
    }
    summary["assertions"] = jassert;
    write_text_file(opt.out_dir + "/summary.json", summary.dump(2) + "\n");

    if (!all_pass && opt.check_assertions) return 1;
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    log << "budget error: " << e.what() << "\n";
    return 3;
  }
}

int report_command(const std::vector<std::string>& run_dirs,
                   const std::string& out_path, std::ostream& log) {
  json merged_fits = json::array();
  std::map<std::pair<double, double>, std::pair<double, std::string>> rows;
  int schema = -1;
  bool floor_flagged = false;
  for (const auto& dir : run_dirs) {
    json summary;
    try {
      summary = json::parse(read_text_file(dir + "/summary.json"));
    } catch (const std::exception& e) {
      log << "report: cannot load " << dir << ": " << e.what() << "\n";
      return 2;
    }
    const int sv = summary.value("schema_version", -1);
    if (schema == -1) schema = sv;
    if (sv != schema) {
      log << "report: schema version mismatch in " << dir << "\n";
      return 2;
    }
    for (const auto& fit : summary.value("fits", json::array())) {
      json f = fit;
      f["run"] = dir;
      if (fit.value("points_excluded", 0) > 0) {
        f["floor_contaminated"] = true;
        floor_flagged = true;
      }
      merged_fits.push_back(f);
    }
    for (const auto& d : summary.value("distances", json::array())) {
      const std::pair<double, double> key{d.value("N", 0.0), d.value("t", 0.0)};
      const double dist = d.value("distance", 0.0);
      const auto it = rows.find(key);
      if (it != rows.end() && it->second.first != dist) {
        log << "report: conflicting rows for N=" << key.first
            << " t=" << key.second << ": " << format_full(it->second.first)
            << " (" << it->second.second << ") vs " << format_full(dist) << " ("
            << dir << ")\n";
        return 2;
      }
      rows[key] = {dist, dir};
    }
  }
  std::ostringstream out;
  out << "N,t,distance,run\n";
  for (const auto& [key, val] : rows)
    out << key.first << "," << format_full(key.second) << ","
        << format_full(val.first) << "," << val.second << "\n";
  json report = {{"schema_version", schema},
                 {"fits", merged_fits},
                 {"floor_contaminated_runs", floor_flagged}};
  if (out_path.empty()) {
    log << out.str();
    log << report.dump(2) << "\n";
  } else {
    write_text_file(out_path + "/merged.csv", out.str());
    write_text_file(out_path + "/merged.json", report.dump(2) + "\n");
  }
  return 0;
}

}  // namespace mflab
