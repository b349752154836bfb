#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "semidg/drift_diffusion.hpp"
#include "semidg/io.hpp"
#include "semidg/kinetic_diagnostics.hpp"

namespace semidg {

struct SlopeFit {
  std::string name;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_ci95 = 0.0;  // 1.96 x standard error of the slope
  std::vector<double> xs, ys;
};

/// Least-squares line through (log10 x, log10 y) with the coefficient of
/// determination; at least three points are required for an asserted fit.
inline SlopeFit fit_loglog(const std::string& name, const std::vector<double>& xs,
                           const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("fit_loglog: need at least three points");
  SlopeFit f;
  f.name = name;
  f.xs = xs;
  f.ys = ys;
  const int n = static_cast<int>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("fit_loglog: series must be positive");
    const double lx = std::log10(xs[i]), ly = std::log10(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double den = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pred = f.slope * std::log10(xs[i]) + f.intercept;
    const double r = std::log10(ys[i]) - pred;
    ss_res += r * r;
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (n > 2) f.slope_ci95 = 1.96 * std::sqrt(ss_res / (n - 2) / (sxx - sx * sx / n));
  return f;
}

struct Assertion {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

inline Assertion assert_le(const std::string& name, double lhs, double rhs) {
  const bool ok = std::isfinite(lhs) && std::isfinite(rhs) && lhs <= rhs;
  return {name, lhs, rhs, ok};
}
inline Assertion assert_ge(const std::string& name, double lhs, double rhs) {
  const bool ok = std::isfinite(lhs) && std::isfinite(rhs) && lhs >= rhs;
  return {name, lhs, rhs, ok};
}

struct StudyResult {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<Assertion> assertions;
  std::vector<SlopeFit> fits;
  std::uint64_t seed = 0;

  /// No assertion passes on NaN: any non-finite value fails the whole study.
  bool pass() const {
    for (const auto& row : rows)
      for (double v : row)
        if (!std::isfinite(v)) return false;
    for (const auto& a : assertions) {
      if (!std::isfinite(a.lhs) || !std::isfinite(a.rhs)) return false;
      if (!a.pass) return false;
    }
    for (const auto& f : fits)
      if (!std::isfinite(f.slope) || !std::isfinite(f.r2)) return false;
    return true;
  }
};

/// Runs fn(i) for i in [0, n) on the requested number of threads. Work items
/// must be independent; results land in preallocated slots so the reduction
/// order (and therefore every output byte) is independent of the thread count.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

/// Full study configuration; every knob the five studies read.
struct StudyConfig {
  std::string kind;  // eps_sweep | h_sweep | maxwellian | stability | identities
  // physics
  double theta = 1.0;
  double L = 6.0;
  double T = 0.3;
  Profile omega{"constant", 1.0, 0.0, 1, 0.0, 1.0};
  Profile E_space{"sinusoid", 0.2, 0.1, 1, 0.0, 1.0};
  Profile rho0{"sinusoid", 0.0, 1.0, 1, 0.0, 1.0};
  std::string E_time = "constant";
  double E_time_freq = 1.0;
  // discretization grids
  std::vector<int> nx_list{16};
  int nv = 16;
  std::vector<double> eps_list{1e-2, 1e-3, 1e-4, 1e-5};
  int kx = 1;
  int kv = 1;
  std::vector<int> beta_list{0, 1};
  double dt_safety = 0.1;  // dt <= c * min(h_x, sqrt(eps))
  std::vector<double> dt_list{4e-3, 2e-3, 1e-3, 5e-4};
  std::vector<double> theta_list{0.5, 1.0, 2.0};
  std::vector<double> hv_factors{0.5, 0.25, 0.125};  // h_v = factor * sqrt(theta)
  double eps_hx_max_ratio = 1.0;
  // lattice | discrete | kinetic_matched | default
  // (default: lattice for pure h-convergence, kinetic-matched for AP sweeps)
  std::string theta_mode = "default";
  double lambda = M_PI * M_PI;                 // manufactured decay rate
  int mode = 1;                                // manufactured spatial mode
  // output / execution
  std::string out_dir = "out";
  std::uint64_t seed = 20240817;
  int threads = 1;
  int n_random = 100;

  ProblemData problem() const {
    ProblemData d;
    d.omega = omega;
    d.E_space = E_space;
    d.rho0 = rho0;
    d.theta = theta;
    d.E_time = E_time;
    d.E_time_freq = E_time_freq;
    return d;
  }

  TemperatureMode temperature_mode(TemperatureMode dflt) const {
    if (theta_mode == "default") return dflt;
    if (theta_mode == "lattice") return TemperatureMode::lattice;
    if (theta_mode == "discrete") return TemperatureMode::discrete;
    if (theta_mode == "kinetic_matched") return TemperatureMode::kinetic_matched;
    throw std::invalid_argument("StudyConfig: unknown theta_mode '" + theta_mode + "'");
  }

  double dt_for(double eps, double hx) const {
    return dt_safety * std::min(hx, std::sqrt(eps));
  }
};

/// Configuration validation: every hypothesis an asserted bound relies on is
/// checked up front; all violations are reported together.
inline void validate(const StudyConfig& c) {
  std::vector<std::string> errs;
  auto req = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  req(c.kind == "eps_sweep" || c.kind == "h_sweep" || c.kind == "maxwellian" ||
          c.kind == "stability" || c.kind == "identities",
      "kind must be one of eps_sweep|h_sweep|maxwellian|stability|identities");
  req(c.theta > 0.0, "theta must be positive");
  req(c.T > 0.0, "final time T must be positive");
  req(c.kv >= 1, "k_v >= 1 is required for the discrete Maxwellian");
  req(c.kx >= 0, "k_x must be nonnegative");
  req(c.nv >= 2 && c.nv % 2 == 0,
      "n_v must be even and >= 2 (symmetric velocity mesh with a node at 0)");
  for (int nx : c.nx_list) req(nx >= 2, "every n_x must be >= 2");
  for (int beta : c.beta_list) {
    req(beta == 0 || beta == 1, "beta must be 0 or 1");
    if (beta == 0 && c.kind == "h_sweep")
      req(c.kx >= 1, "k_x = 0 with beta = 0 is rejected (limit space locks)");
  }
  req(c.dt_safety > 0.0 && c.dt_safety <= 1.0, "dt_safety must lie in (0, 1]");
  req(c.theta_mode == "default" || c.theta_mode == "lattice" ||
          c.theta_mode == "discrete" || c.theta_mode == "kinetic_matched",
      "theta_mode must be default|lattice|discrete|kinetic_matched");
  req(c.threads >= 1, "threads must be >= 1");
  req(c.n_random >= 1, "n_random must be >= 1");

  if (c.kind != "maxwellian") {
    req(c.L >= std::sqrt(c.theta), "L >= sqrt(theta) is required");
    const double hv = 2.0 * c.L / c.nv;
    req(hv * hv <= 4.0 / std::sqrt(3.0) * c.theta,
        "h_v^2 <= (4/sqrt(3)) theta is required");
    try {
      ProblemData d = c.problem();
      req(d.omega_min() > 0.0, "omega must be strictly positive");
      if (c.kind == "eps_sweep" || c.kind == "stability") {
        DiscreteMaxwellian M(Mesh1D::symmetric(c.L, c.nv), c.theta);
        DGSpace Vv(Mesh1D::symmetric(c.L, c.nv), c.kv, Continuity::broken);
        const StabilityConstants st = stability_constants(d, M, trace_constant(Vv));
        for (double eps : c.eps_list) {
          req(eps > 0.0, "every eps must be positive");
          req(eps <= st.eps_threshold,
              "eps = " + format_double(eps) +
                  " exceeds the collision-dominance threshold eps_hv = " +
                  format_double(st.eps_threshold));
          for (int nx : c.nx_list)
            req(eps / (1.0 / nx) <= c.eps_hx_max_ratio,
                "eps / h_x must stay below " + format_double(c.eps_hx_max_ratio));
        }
      }
    } catch (const std::exception& e) {
      errs.push_back(e.what());
    }
  } else {
    for (double th : c.theta_list) req(th > 0.0, "every theta must be positive");
    for (double f : c.hv_factors) req(f > 0.0, "every h_v factor must be positive");
  }
  if (c.kind == "identities")
    for (int nx : c.nx_list) req(nx <= 8, "identity suite requires n_x, n_v <= 8");
  req(!c.out_dir.empty(), "output directory must be set");
  if (!errs.empty()) {
    std::string msg = "invalid study configuration:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw std::invalid_argument(msg);
  }
}

// ---------------------------------------------------------------------------
// maxwellian study

inline StudyResult run_maxwellian_study(const StudyConfig& c) {
  StudyResult r;
  r.kind = "maxwellian";
  r.seed = c.seed;
  r.columns = {"theta", "L",         "h_v",      "mass_residual", "endpoint_residual",
               "energy_residual",    "momentum_residual",         "theta_h",
               "l2_error", "l2_bound", "h1_error", "h1_bound",    "gamma_I",
               "gamma_B",  "gamma_star"};
  for (double theta : c.theta_list) {
    const double L = 6.0 * std::sqrt(theta);
    std::vector<double> hs, l2s, h1s, dthetas;
    for (double f : c.hv_factors) {
      const double hv = f * std::sqrt(theta);
      const int n = static_cast<int>(std::llround(2.0 * L / hv));
      DiscreteMaxwellian M(Mesh1D::symmetric(L, n), theta);
      const MaxwellianReport rep = assumption_report(M);
      const GammaCoefficients g = gamma_edges(M);
      r.rows.push_back({theta, L, rep.h_v, rep.mass_residual, rep.endpoint_residual,
                        rep.energy_residual, rep.momentum_residual, rep.theta_h,
                        rep.l2_error, rep.l2_bound, rep.h1_error, rep.h1_bound,
                        g.gamma_I, g.gamma_B_plus, g.gamma_star});
      const std::string tag = "theta=" + format_double(theta) + ",h_v=" + format_double(rep.h_v);
      r.assertions.push_back(assert_le("mass_residual[" + tag + "]", rep.mass_residual, 1e-12));
      r.assertions.push_back(
          assert_le("endpoint_residual[" + tag + "]", rep.endpoint_residual, 1e-12));
      r.assertions.push_back(
          assert_le("momentum_residual[" + tag + "]", rep.momentum_residual, 1e-12));
      r.assertions.push_back(assert_le("l2_error_within_bound[" + tag + "]", rep.l2_error,
                                       rep.l2_bound));
      r.assertions.push_back(assert_le("h1_error_within_bound[" + tag + "]", rep.h1_error,
                                       rep.h1_bound));
      r.assertions.push_back(assert_ge("gamma_star_positive[" + tag + "]", g.gamma_star,
                                       1e-30));
      hs.push_back(rep.h_v);
      l2s.push_back(rep.l2_error);
      h1s.push_back(rep.h1_error);
      dthetas.push_back(std::abs(rep.theta_h - theta));
    }
    const std::string t = "theta=" + format_double(theta);
    SlopeFit fl2 = fit_loglog("maxwellian_l2_order[" + t + "]", hs, l2s);
    SlopeFit fh1 = fit_loglog("maxwellian_h1_order[" + t + "]", hs, h1s);
    SlopeFit fth = fit_loglog("theta_h_order[" + t + "]", hs, dthetas);
    r.assertions.push_back(assert_ge("l2_order[" + t + "]", fl2.slope, 1.8));
    r.assertions.push_back(assert_ge("h1_order[" + t + "]", fh1.slope, 0.9));
    r.assertions.push_back(assert_ge("theta_h_order[" + t + "]", fth.slope, 0.9));
    r.fits.push_back(std::move(fl2));
    r.fits.push_back(std::move(fh1));
    r.fits.push_back(std::move(fth));
  }
  return r;
}

// ---------------------------------------------------------------------------
// eps sweep: kinetic versus limiting solver at fixed resolution

struct EpsPointResult {
  double eps;
  double rho_err_matched, J_err_matched;
  double rho_err_lattice, rho_err_discrete;
  double g0_norm;
};

inline EpsPointResult eps_point(const StudyConfig& c, int beta, double eps, int nx) {
  const ProblemData data = c.problem();
  const Mesh1D mesh_x(0.0, 1.0, nx);
  const Mesh1D mesh_v = Mesh1D::symmetric(c.L, c.nv);
  const DiscreteMaxwellian M(mesh_v, c.theta);
  PhaseSpace ps(mesh_x, c.kx, mesh_v, c.kv);
  KineticOperators ops(ps, M, data, beta, eps);
  const double dt = c.dt_for(eps, mesh_x.h());

  const KineticTrajectory kin = run_kinetic(ops, initial_state(ops), dt, c.T);

  const GammaCoefficients g = gamma_edges(M);
  auto dd_run = [&](TemperatureMode mode) {
    DDOperators dd(mesh_x, c.kx, data, g.gamma_I, beta,
                   dd_coefficients(mode, c.theta, M.theta_h()));
    return run_dd(dd, dd.initial_density(), dt, c.T);
  };
  const DDTrajectory matched = dd_run(TemperatureMode::kinetic_matched);
  const DDTrajectory lattice = dd_run(TemperatureMode::lattice);
  const DDTrajectory discrete = dd_run(TemperatureMode::discrete);

  const DGSpace Vx(mesh_x, c.kx, Continuity::broken);
  const DGSpace X(mesh_x, c.kx,
                  beta == 0 ? Continuity::continuous_zero_trace
                            : Continuity::broken_zero_trace);
  auto l2t_err = [&](const std::vector<Eigen::VectorXd>& a,
                     const std::vector<Eigen::VectorXd>& b, const DGSpace& sb) {
    double acc = 0.0;
    for (size_t n = 1; n < a.size(); ++n)
      acc += dt * std::pow(l2_diff(SpatialField(Vx, a[n]), SpatialField(sb, b[n])), 2);
    return std::sqrt(acc);
  };
  EpsPointResult out{};
  out.eps = eps;
  out.rho_err_matched = l2t_err(kin.rho, matched.rho, X);
  out.J_err_matched = l2t_err(kin.J, matched.J, Vx);
  out.rho_err_lattice = l2t_err(kin.rho, lattice.rho, X);
  out.rho_err_discrete = l2t_err(kin.rho, discrete.rho, X);
  out.g0_norm = kin.stats.g0_norm;
  return out;
}

inline StudyResult run_eps_sweep(const StudyConfig& c) {
  StudyResult r;
  r.kind = "eps_sweep";
  r.seed = c.seed;
  r.columns = {"beta",         "eps",
               "n_x",          "rho_err_matched",
               "J_err_matched", "rho_err_lattice",
               "rho_err_discrete", "g0_norm",
               "sqrt_eps_over_hx"};
  const int nx = c.nx_list.front();
  struct Slot {
    int beta;
    EpsPointResult p;
  };
  std::vector<Slot> slots(c.beta_list.size() * c.eps_list.size());
  std::vector<std::pair<int, double>> work;
  for (int beta : c.beta_list)
    for (double eps : c.eps_list) work.emplace_back(beta, eps);
  parallel_for(static_cast<int>(work.size()), c.threads, [&](int i) {
    slots[i] = {work[i].first, eps_point(c, work[i].first, work[i].second, nx)};
  });

  size_t idx = 0;
  for (int beta : c.beta_list) {
    std::vector<double> es, rerr, jerr;
    for (size_t k = 0; k < c.eps_list.size(); ++k, ++idx) {
      const EpsPointResult& p = slots[idx].p;
      r.rows.push_back({static_cast<double>(beta), p.eps, static_cast<double>(nx),
                        p.rho_err_matched, p.J_err_matched, p.rho_err_lattice,
                        p.rho_err_discrete, p.g0_norm,
                        std::sqrt(p.eps * nx)});
      es.push_back(p.eps);
      rerr.push_back(p.rho_err_matched);
      jerr.push_back(p.J_err_matched);
    }
    const std::string tag = "beta=" + std::to_string(beta);
    SlopeFit fr = fit_loglog("rho_error_vs_eps[" + tag + "]", es, rerr);
    SlopeFit fj = fit_loglog("J_error_vs_eps[" + tag + "]", es, jerr);
    r.assertions.push_back(assert_ge("rho_eps_slope_min[" + tag + "]", fr.slope, 0.35));
    r.assertions.push_back(assert_le("rho_eps_slope_max[" + tag + "]", fr.slope, 0.8));
    r.assertions.push_back(assert_ge("rho_eps_fit_r2[" + tag + "]", fr.r2, 0.9));
    // one-sided verification of the guaranteed estimate: the measured constant
    // in err <= C sqrt(eps/h_x) ||g0|| never grows as eps decreases
    {
      size_t imax = 0;
      for (size_t k = 1; k < es.size(); ++k)
        if (es[k] > es[imax]) imax = k;
      double cmax = 0.0;
      std::vector<double> cmeas(es.size());
      for (size_t k = 0; k < es.size(); ++k) {
        cmeas[k] = rerr[k] / (std::sqrt(es[k] * nx) *
                              std::max(slots[idx - es.size() + k].p.g0_norm, 1e-300));
        cmax = std::max(cmax, cmeas[k]);
      }
      r.assertions.push_back(assert_le("rho_apbound_constant[" + tag + "]", cmax,
                                       1.05 * cmeas[imax]));
    }
    r.fits.push_back(std::move(fr));
    r.fits.push_back(std::move(fj));  // J slope reported, not asserted
  }

  // doubling h_x at fixed eps: measured error ratio against the sqrt(2) prediction
  if (nx >= 4) {
    const int beta = c.beta_list.front();
    const double eps_mid = c.eps_list[c.eps_list.size() / 2];
    const EpsPointResult fine = eps_point(c, beta, eps_mid, nx);
    const EpsPointResult coarse = eps_point(c, beta, eps_mid, nx / 2);
    r.rows.push_back({static_cast<double>(beta), eps_mid, static_cast<double>(nx / 2),
                      coarse.rho_err_matched, coarse.J_err_matched,
                      coarse.rho_err_lattice, coarse.rho_err_discrete, coarse.g0_norm,
                      coarse.rho_err_matched / std::max(fine.rho_err_matched, 1e-300)});
  }
  return r;
}

// ---------------------------------------------------------------------------
// h sweep: manufactured-solution convergence of the limiting solver

inline StudyResult run_h_sweep(const StudyConfig& c) {
  StudyResult r;
  r.kind = "h_sweep";
  r.seed = c.seed;
  r.columns = {"beta", "n_x", "h_x", "dt", "rho_err_L2T", "J_err_L2T"};
  const ProblemData data = c.problem();
  const Mesh1D mesh_v = Mesh1D::symmetric(c.L, c.nv);
  const DiscreteMaxwellian M(mesh_v, c.theta);
  const GammaCoefficients g = gamma_edges(M);
  const DDCoefficients coef =
      dd_coefficients(c.temperature_mode(TemperatureMode::lattice), c.theta, M.theta_h());
  const ManufacturedReference ref = manufactured_reference(data, coef, c.lambda, c.mode);

  struct Slot {
    double rho_err, J_err, hx, dt;
  };
  std::vector<std::pair<int, int>> work;  // (beta, nx)
  for (int beta : c.beta_list)
    for (int nx : c.nx_list) work.emplace_back(beta, nx);
  std::vector<Slot> slots(work.size());
  parallel_for(static_cast<int>(work.size()), c.threads, [&](int i) {
    const auto [beta, nx] = work[i];
    const Mesh1D mesh_x(0.0, 1.0, nx);
    DDOperators dd(mesh_x, c.kx, data, g.gamma_I, beta, coef);
    // rho(0) from the exact profile so the total error is discretization-driven
    const SpatialField rho0 =
        l2_project([&](double x) { return ref.rho(x, 0.0); }, dd.X());
    // dt tied to h^2 keeps the implicit-Euler error on the same decay curve
    const double dt = c.T / std::ceil(c.T / (c.dt_safety * mesh_x.h() * mesh_x.h()));
    const DDTrajectory tr = run_dd(dd, rho0.coeffs, dt, c.T, ref.forcing, &ref);
    slots[i] = {tr.rho_err_L2T, tr.J_err_L2T, mesh_x.h(), dt};
  });

  size_t idx = 0;
  for (int beta : c.beta_list) {
    std::vector<double> hs, rerr, jerr;
    for (size_t k = 0; k < c.nx_list.size(); ++k, ++idx) {
      const Slot& s = slots[idx];
      r.rows.push_back({static_cast<double>(beta), static_cast<double>(c.nx_list[k]),
                        s.hx, s.dt, s.rho_err, s.J_err});
      hs.push_back(s.hx);
      rerr.push_back(s.rho_err);
      jerr.push_back(s.J_err);
    }
    const std::string tag = "beta=" + std::to_string(beta);
    SlopeFit fr = fit_loglog("rho_error_vs_h[" + tag + "]", hs, rerr);
    SlopeFit fj = fit_loglog("J_error_vs_h[" + tag + "]", hs, jerr);
    r.assertions.push_back(assert_ge("rho_h_order[" + tag + "]", fr.slope, 0.9));
    r.assertions.push_back(assert_ge("rho_h_fit_r2[" + tag + "]", fr.r2, 0.9));
    r.fits.push_back(std::move(fr));
    r.fits.push_back(std::move(fj));
  }
  return r;
}

// ---------------------------------------------------------------------------
// stability suite: uniform-in-eps a priori bounds

inline StudyResult run_stability_suite(const StudyConfig& c) {
  StudyResult r;
  r.kind = "stability";
  r.seed = c.seed;
  r.columns = {"beta",        "eps",          "dt",
               "energy_lhs",  "energy_rhs",   "relax_ratio",
               "J_ratio",     "dtrho_ratio",  "rho_jump_L2T",
               "rho_bdry_L2T", "proj_ratio",  "gamma_star"};
  const int nx = c.nx_list.front();
  const Mesh1D mesh_x(0.0, 1.0, nx);
  const Mesh1D mesh_v = Mesh1D::symmetric(c.L, c.nv);
  const DiscreteMaxwellian M(mesh_v, c.theta);
  const ProblemData data = c.problem();
  const double gstar = gamma_edges(M).gamma_star;

  struct Slot {
    KineticTrajectory tr;
    double dt;
  };
  std::vector<std::pair<int, double>> work;
  for (int beta : c.beta_list)
    for (double eps : c.eps_list) work.emplace_back(beta, eps);
  std::vector<Slot> slots(work.size());
  parallel_for(static_cast<int>(work.size()), c.threads, [&](int i) {
    const auto [beta, eps] = work[i];
    PhaseSpace ps(mesh_x, c.kx, mesh_v, c.kv);
    KineticOperators ops(ps, M, data, beta, eps);
    const double dt = c.dt_for(eps, mesh_x.h());
    slots[i] = {run_kinetic(ops, initial_state(ops), dt, c.T), dt};
  });

  size_t idx = 0;
  for (int beta : c.beta_list) {
    std::vector<double> es, relax_ratios, jump_norms;
    for (size_t k = 0; k < c.eps_list.size(); ++k, ++idx) {
      const auto& [tr, dt] = slots[idx];
      const double g0 = std::max(tr.stats.g0_norm, 1e-300);
      const double eps = work[idx].second;
      const double relax_ratio = tr.stats.relax_L2T / g0;
      const double J_ratio = tr.stats.J_L2T / g0;
      const double dtrho_ratio = tr.stats.dt_rho_dual_L2T / g0;
      const double proj_ratio =
          std::sqrt(1.0 / (eps * mesh_x.h())) *
          (tr.stats.rho_proj_L2T + tr.stats.rho_proj_h1h_L2T) * mesh_x.h() / g0;
      r.rows.push_back({static_cast<double>(beta), eps, dt, tr.energy.lhs,
                        tr.energy.rhs, relax_ratio, J_ratio, dtrho_ratio,
                        tr.stats.rho_jump_L2T, tr.stats.rho_bdry_L2T, proj_ratio,
                        gstar});
      const std::string tag =
          "beta=" + std::to_string(beta) + ",eps=" + format_double(eps);
      r.assertions.push_back(assert_le("energy_bound[" + tag + "]", tr.energy.lhs,
                                       tr.energy.rhs * (1.0 + 10.0 * dt)));
      es.push_back(eps);
      relax_ratios.push_back(relax_ratio);
      jump_norms.push_back(tr.stats.rho_jump_L2T);
    }
    const std::string tag = "beta=" + std::to_string(beta);
    const auto [lo, hi] = std::minmax_element(relax_ratios.begin(), relax_ratios.end());
    r.assertions.push_back(
        assert_le("relax_ratio_spread[" + tag + "]", *hi / std::max(*lo, 1e-300), 10.0));
    if (beta == 0) {
      SlopeFit fj = fit_loglog("rho_jump_vs_eps[" + tag + "]", es, jump_norms);
      r.assertions.push_back(assert_ge("rho_jump_eps_slope[" + tag + "]", fj.slope, 0.35));
      r.fits.push_back(std::move(fj));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// identity suite: machine-precision structure plus dt-refined residuals

inline StudyResult run_identity_suite(const StudyConfig& c) {
  StudyResult r;
  r.kind = "identities";
  r.seed = c.seed;
  r.columns = {"beta", "check", "value"};
  std::mt19937_64 rng(c.seed);
  const int nx = c.nx_list.front();
  const int nv = std::min(c.nv, 8);
  const double L = std::min(c.L, 0.6 * nv);
  const Mesh1D mesh_x(0.0, 1.0, nx);
  const Mesh1D mesh_v = Mesh1D::symmetric(L, nv);
  const DiscreteMaxwellian M(mesh_v, c.theta);
  const ProblemData data = c.problem();
  const double wmin = data.omega_min();

  std::normal_distribution<double> gauss(0.0, 1.0);
  int check_id = 0;
  auto record = [&](int beta, double value) {
    r.rows.push_back({static_cast<double>(beta), static_cast<double>(check_id++), value});
    return value;
  };

  for (int beta : c.beta_list) {
    PhaseSpace ps(mesh_x, c.kx, mesh_v, c.kv);
    KineticOperators ops(ps, M, data, beta, c.eps_list.front());
    const double epsb = std::pow(ops.eps(), beta);
    double worst_A = 0.0, worst_Q = 0.0, worst_BC = 0.0, worst_D = 0.0, worst_J = 0.0,
           worst_C = 0.0;
    for (int trial = 0; trial < c.n_random; ++trial) {
      Eigen::VectorXd g(ps.dim());
      for (int i = 0; i < g.size(); ++i) g[i] = gauss(rng);
      const double gsq = g.squaredNorm();
      const double a_lhs = ops.form_A(g, g);
      const double a_rhs = 0.5 * g.dot(ops.boundary_form_x() * g) +
                           epsb * 0.5 * g.dot(ops.jump_form() * g);
      worst_A = std::max(worst_A, std::abs(a_lhs - a_rhs) / gsq);

      const Eigen::VectorXd rho = ops.density(g);
      const Eigen::VectorXd gt = g - ops.isotropic(rho);
      const double fluct = std::max(0.0, gt.dot(ops.Mass() * gt));
      worst_Q = std::max(worst_Q, (wmin * fluct + ops.form_Q(g, g)) / gsq);

      Eigen::VectorXd q(ps.dimx());
      for (int i = 0; i < q.size(); ++i) q[i] = gauss(rng);
      const Eigen::VectorXd Mq = ops.isotropic(q);
      const double scale = g.norm() * Mq.norm() + 1e-30;
      worst_BC = std::max(
          worst_BC, std::abs(ops.form_B(g, Mq, 0.0) - ops.form_C(g, Mq, 0.0)) / scale);
      worst_D = std::max(worst_D, std::abs(ops.form_D(g, Mq, 0.0)) / scale);
      const Eigen::VectorXd Mrho = ops.isotropic(rho);
      worst_C = std::max(worst_C, std::abs(ops.form_C(Mrho, Mrho, 0.0)) /
                                      (Mrho.squaredNorm() + 1e-30));
      const Eigen::VectorXd J1 = ops.current(g);
      const Eigen::VectorXd J2 = ops.current_fluctuation_route(g);
      worst_J = std::max(worst_J, (J1 - J2).lpNorm<Eigen::Infinity>() /
                                      (J1.lpNorm<Eigen::Infinity>() + 1e-30));
    }
    const std::string tag = "beta=" + std::to_string(beta);
    r.assertions.push_back(
        assert_le("A_positivity_identity[" + tag + "]", record(beta, worst_A), 1e-11));
    r.assertions.push_back(
        assert_ge("Q_coercivity_margin[" + tag + "]", -record(beta, worst_Q), -1e-11));
    r.assertions.push_back(
        assert_le("B_equals_C_isotropic[" + tag + "]", record(beta, worst_BC), 1e-11));
    r.assertions.push_back(
        assert_le("D_isotropic_neutral[" + tag + "]", record(beta, worst_D), 1e-11));
    r.assertions.push_back(
        assert_le("C_equilibrium_null[" + tag + "]", record(beta, worst_C), 1e-11));
    r.assertions.push_back(
        assert_le("J_route_equivalence[" + tag + "]", record(beta, worst_J), 1e-11));
    const double bdry_cancel =
        std::abs(std::pow(M.node_value(mesh_v.n_cells()), 2) - std::pow(M.node_value(0), 2));
    r.assertions.push_back(
        assert_le("velocity_boundary_cancellation[" + tag + "]",
                  record(beta, bdry_cancel), 1e-14));

    // dt-refined moment-evolution residuals on a smooth trajectory
    PhaseSpace psd(mesh_x, c.kx, mesh_v, c.kv);
    KineticOperators opsd(psd, M, data, beta, 0.4);
    MomentIdentityEvaluator ev(opsd);
    KineticStepper warm(opsd);
    KineticState base = initial_state(opsd);
    for (int n = 0; n < 3; ++n) base = warm.step(base, 5e-3);
    std::vector<double> dts = c.dt_list, r_rho, r_cur;
    double worst_new = 0.0;
    for (double dt : dts) {
      KineticStepper st(opsd);
      KineticState next = st.step(base, dt);
      const EvolutionResiduals res = evolution_residuals(base, next, opsd, dt, ev);
      r_rho.push_back(res.rho_identity_old / res.state_scale);
      r_cur.push_back(res.current_identity_old / res.state_scale);
      worst_new = std::max(worst_new, res.rho_identity_new / res.state_scale);
      record(beta, res.gamma_star);
      r.assertions.push_back(assert_ge(
          "gamma_star_positive[" + tag + ",dt=" + format_double(dt) + "]",
          res.gamma_star, 1e-30));
    }
    r.assertions.push_back(
        assert_le("rho_identity_exact[" + tag + "]", record(beta, worst_new), 1e-11));
    SlopeFit frho = fit_loglog("rho_residual_vs_dt[" + tag + "]", dts, r_rho);
    SlopeFit fcur = fit_loglog("current_residual_vs_dt[" + tag + "]", dts, r_cur);
    r.assertions.push_back(assert_ge("rho_residual_dt_order[" + tag + "]", frho.slope, 0.9));
    r.assertions.push_back(
        assert_ge("current_residual_dt_order[" + tag + "]", fcur.slope, 0.9));
    r.fits.push_back(std::move(frho));
    r.fits.push_back(std::move(fcur));
  }
  return r;
}

inline StudyResult run_study(const StudyConfig& c) {
  validate(c);
  if (c.kind == "maxwellian") return run_maxwellian_study(c);
  if (c.kind == "eps_sweep") return run_eps_sweep(c);
  if (c.kind == "h_sweep") return run_h_sweep(c);
  if (c.kind == "stability") return run_stability_suite(c);
  if (c.kind == "identities") return run_identity_suite(c);
  throw std::invalid_argument("run_study: unknown kind '" + c.kind + "'");
}

/// Emit the study table, the pass/fail summary, and one plot per slope fit.
inline void emit_outputs(const StudyResult& r, const StudyConfig& c) {
  std::vector<std::string> cols = r.columns;
  cols.push_back("seed");
  std::vector<std::vector<double>> rows = r.rows;
  for (auto& row : rows) row.push_back(static_cast<double>(r.seed));
  write_csv(c.out_dir + "/" + r.kind + ".csv", cols, rows);

  std::ofstream sum(c.out_dir + "/" + r.kind + "_summary.csv", std::ios::binary);
  sum << "name,lhs,rhs,pass\n";
  if (r.assertions.empty() && r.fits.empty()) {
    sum << "no_assertions,0,0,1\n";
  } else {
    for (const auto& a : r.assertions)
      sum << a.name << "," << format_double(a.lhs) << "," << format_double(a.rhs) << ","
          << (a.pass ? 1 : 0) << "\n";
    for (const auto& f : r.fits) {
      sum << "fit:" << f.name << "," << format_double(f.slope) << ","
          << format_double(f.r2) << ",1\n";
      sum << "fit_ci95:" << f.name << "," << format_double(f.slope - f.slope_ci95)
          << "," << format_double(f.slope + f.slope_ci95) << ",1\n";
    }
  }
  sum.close();

  for (const auto& f : r.fits) {
    std::string fname = f.name;
    for (char& ch : fname)
      if (ch == '[' || ch == ']' || ch == '=' || ch == ',') ch = '_';
    write_svg_loglog(c.out_dir + "/" + fname + ".svg",
                     f.name + "  slope=" + format_double(f.slope) + " +- " +
                         format_double(f.slope_ci95) + "  R2=" + format_double(f.r2),
                     f.xs, f.ys, f.slope, f.intercept);
  }
}

}  // namespace semidg
