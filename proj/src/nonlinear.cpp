#include "returnctrl/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "returnctrl/errors.hpp"
#include "returnctrl/rng.hpp"

namespace returnctrl {

ControlWindow default_control_window(const BumpConfig& cfg, TrajectoryKind kind) {
  const double rho = cfg.resolved_rho();
  const double eps = cfg.bump_epsilon;
  if (!(eps > 0.0))
    throw ConfigError("control window: requires a resolved positive bump_epsilon");
  auto lambda = [&](double tau) {
    const double w = 1.0 - tau * tau;
    return eps * w * w;
  };

  ControlWindow win;
  win.t1 = cfg.center_t - 0.75 * rho * rho;
  win.t2 = cfg.center_t + 0.75 * rho * rho;
  const double r = 0.4 * rho * lambda(0.75);
  win.omega_lo = cfg.center_x - r;
  win.omega_hi = cfg.center_x + r;
  win.omega1_lo = cfg.center_x - 0.5 * r;
  win.omega1_hi = cfg.center_x + 0.5 * r;

  if (kind == TrajectoryKind::CubicReal) {
    // 3 u_bar^2 stays well above 1/M_bar on the control rectangle itself.
    win.certificate = {win.t1, win.t2, win.omega_lo, win.omega_hi};
  } else {
    // Im(2 u_bar) vanishes near the center; it is uniformly large on a
    // rectangle to the right of center late in the bump.
    const double lam = lambda(0.68);
    win.certificate = {cfg.center_t + 0.66 * rho * rho, cfg.center_t + 0.70 * rho * rho,
                       cfg.center_x + 0.58 * rho * lam, cfg.center_x + 0.80 * rho * lam};
  }
  return win;
}

double NonlinearProblem::resolved_delta() const {
  if (delta >= 0.0) return delta;
  return 1e-3 * traj.u_bar.max_abs();
}

void NonlinearProblem::validate() const {
  const int nx = traj.grid.nx;
  if (int(u0.size()) != nx || int(v0.size()) != nx)
    throw ConfigError("nonlinear problem: initial data size mismatch");
  if (!g.g || !g.dg_du || !g.dg_dv)
    throw ConfigError("nonlinear problem: coupling closures must be set");
  const double bound = resolved_delta();
  double m = 0.0;
  for (int i = 0; i < nx; ++i) m = std::max({m, std::abs(u0[i]), std::abs(v0[i])});
  if (m > bound)
    throw ConfigError("nonlinear problem: initial data exceed the smallness bound " +
                      std::to_string(bound));
}

CoefficientSet freeze_coefficients(const NonlinearProblem& problem, const ComplexPair& z) {
  const SpaceTimeGrid& grid = problem.traj.grid;
  const bool cx = problem.traj.kind == TrajectoryKind::QuadraticComplex;
  const double R = problem.traj.config.reaction;

  CoefficientSet c;
  c.a11 = ComplexField(grid);
  c.a12 = ComplexField(grid);
  c.a21 = ComplexField(grid);
  c.a22 = ComplexField(grid);

  // Difference-quotient switch level: below it the quotient loses all digits,
  // so fall back to the partial derivative.
  const double scale = std::max({problem.traj.u_bar.max_abs(), z.max_abs(), 1.0});
  const double tau = 1e-8 * scale;

  double mbar = 0.0;
#pragma omp parallel for schedule(static) reduction(max : mbar)
  for (int n = 0; n <= grid.nt; ++n)
    for (int i = 0; i < grid.nx; ++i) {
      const Z u = problem.traj.u_bar.at(n, i), v = problem.traj.v_bar.at(n, i);
      const Z z1 = z.first.at(n, i), z2 = z.second.at(n, i);
      const Z a11 = std::abs(z1) > tau
                        ? (problem.g.g(u + z1, v + z2) - problem.g.g(u, v + z2)) / z1
                        : problem.g.dg_du(u, v + z2);
      const Z a12 = std::abs(z2) > tau ? (problem.g.g(u, v + z2) - problem.g.g(u, v)) / z2
                                       : problem.g.dg_dv(u, v);
      // Exact expansion of [f(u + z1) - f(u)] / z1 for the polynomial
      // coupling f: no cancellation, valid at z1 = 0.
      const Z a21 = cx ? 2.0 * u + z1 : 3.0 * u * u + 3.0 * u * z1 + z1 * z1;
      c.a11.at(n, i) = a11;
      c.a12.at(n, i) = a12;
      c.a21.at(n, i) = a21;
      c.a22.at(n, i) = Z(R);
      mbar = std::max({mbar, std::abs(a11), std::abs(a12), std::abs(a21), std::abs(R)});
    }
  c.M_bar = std::max(mbar, 1.0);
  c.window = default_control_window(problem.traj.config, problem.traj.kind).certificate;
  c.check(cx);
  return c;
}

PicardResult run_picard(const NonlinearProblem& problem, const PicardOptions& opt) {
  problem.validate();
  const SpaceTimeGrid& grid = problem.traj.grid;
  const bool cx = problem.traj.kind == TrajectoryKind::QuadraticComplex;
  const ControlWindow win = default_control_window(problem.traj.config, problem.traj.kind);
  const CarlemanWeight weight = build_weights(grid, opt.s, win.omega1_lo, win.omega1_hi, opt.kappa);

  double data_scale = 0.0;
  for (int i = 0; i < grid.nx; ++i)
    data_scale = std::max({data_scale, std::abs(problem.u0[i]), std::abs(problem.v0[i])});
  data_scale = std::max(data_scale, 1e-300);

  PicardResult out;
  out.window = win;
  ComplexPair z(grid);
  double prev_update = std::numeric_limits<double>::infinity();
  int growing = 0;
  bool converged = false;
  std::vector<double> updates;

  for (int k = 1; k <= opt.max_iter; ++k) {
    const CoefficientSet coeffs = freeze_coefficients(problem, z);
    ControlResult ctrl =
        solve_penalized_control(grid, coeffs, problem.u0, problem.v0, weight,
                                opt.penalty_epsilon, win.t1, win.t2, win.omega_lo, win.omega_hi,
                                cx, opt.cg);
    double update = 0.0;
    for (int n = 0; n <= grid.nt; ++n)
      for (int i = 0; i < grid.nx; ++i)
        update = std::max({update, std::abs(ctrl.zeta.first.at(n, i) - z.first.at(n, i)),
                           std::abs(ctrl.zeta.second.at(n, i) - z.second.at(n, i))});
    updates.push_back(update);
    out.history.push_back({k, update, ctrl.zeta.max_abs(), ctrl.terminal_norm,
                           ctrl.cg_iterations});
    z = ctrl.zeta;
    out.control = std::move(ctrl);
    if (update <= opt.tol * std::max(out.control.zeta.max_abs(), data_scale)) {
      converged = true;
      break;
    }
    growing = update > prev_update ? growing + 1 : 0;
    if (growing >= 3)
      throw ConvergenceError("picard: update norms grew three times in a row", updates);
    prev_update = update;
  }
  if (!converged)
    throw ConvergenceError("picard: tolerance not reached within max_iter", updates);

  out.zeta = z;
  out.u = problem.traj.u_bar;
  out.v = problem.traj.v_bar;
  for (int n = 0; n <= grid.nt; ++n)
    for (int i = 0; i < grid.nx; ++i) {
      out.u.at(n, i) += z.first.at(n, i);
      out.v.at(n, i) += z.second.at(n, i);
    }

  // Total control: the staggered residual of the reference u-equation plus
  // the staggered linear control, both supported in omega.
  out.h = ComplexField(grid);
  ComplexPair ref;
  ref.first = problem.traj.u_bar;
  ref.second = problem.traj.v_bar;
  const ComplexPair ref_res = discrete_residual(
      grid, ref, nullptr, 0.0, 0.0, [&](Z a, Z b) { return problem.g.g(a, b); },
      [](Z) { return Z{}; }, problem.traj.config.reaction);
  auto [w0, w1] = grid.node_range(problem.traj.config.omega_lo, problem.traj.config.omega_hi);
  for (int n = 1; n <= grid.nt; ++n)
    for (int i = w0; i < w1; ++i)
      out.h.at(n, i) = ref_res.first.at(n, i) + out.control.h.at(n, i);

  double dn = 0.0, tn = 0.0;
  const double dx = grid.dx();
  for (int i = 0; i < grid.nx; ++i) {
    dn += std::norm(problem.u0[i]) + std::norm(problem.v0[i]);
    tn += std::norm(out.u.at(grid.nt, i)) + std::norm(out.v.at(grid.nt, i));
  }
  out.data_norm = std::sqrt(dx * dn);
  out.terminal_norm = std::sqrt(dx * tn);
  return out;
}

ObstructionReport demo_obstruction(const SpaceTimeGrid& grid, double R,
                                   const std::vector<double>& u0, const std::vector<double>& v0,
                                   double omega_lo, double omega_hi, int n_controls,
                                   std::uint64_t seed, double amplitude) {
  grid.validate();
  if (int(u0.size()) != grid.nx || int(v0.size()) != grid.nx)
    throw ConfigError("obstruction: initial data size mismatch");
  double vmin = 1e300, vmax = 0.0;
  for (double v : v0) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, std::fabs(v));
  }
  if (vmin < 0.0) throw ConfigError("obstruction: v0 must be nonnegative");
  if (vmax == 0.0) throw ConfigError("obstruction: v0 must not vanish identically");
  if (n_controls < 1) throw ConfigError("obstruction: n_controls must be >= 1");

  const RealField vstar = solve_scalar_implicit(grid, R, v0, nullptr);

  ObstructionReport rep;
  rep.n_controls = n_controls;
  rep.gaps.assign(std::size_t(n_controls), 0.0);
  rep.free_min_terminal = 1e300;
  for (int i = 0; i < grid.nx; ++i)
    rep.free_min_terminal = std::min(rep.free_min_terminal, vstar.at(grid.nt, i));

  // Per-control seeds drawn serially so the samples are independent of the
  // worker count.
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_controls));
  {
    Rng master(seed);
    for (auto& s : seeds) s = master.next_u64();
  }
  auto [w0, w1] = grid.node_range(omega_lo, omega_hi);

  std::vector<double> min_terms(std::size_t(n_controls), 1e300);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_controls; ++k) {
    Rng rng(seeds[std::size_t(k)]);
    RealField h(grid);
    for (int n = 1; n <= grid.nt; ++n)
      for (int i = w0; i < w1; ++i) h.at(n, i) = amplitude * rng.normal();
    const RealField u = solve_scalar_implicit(grid, 0.0, u0, &h);
    RealField usq(grid);
    for (int n = 0; n <= grid.nt; ++n)
      for (int i = 0; i < grid.nx; ++i) usq.at(n, i) = u.at(n, i) * u.at(n, i);
    const RealField v = solve_scalar_implicit(grid, R, v0, &usq);
    double gap = 1e300, mt = 1e300;
    for (int i = 0; i < grid.nx; ++i) {
      gap = std::min(gap, v.at(grid.nt, i) - vstar.at(grid.nt, i));
      mt = std::min(mt, v.at(grid.nt, i));
    }
    rep.gaps[std::size_t(k)] = gap;
    min_terms[std::size_t(k)] = mt;
  }
  rep.min_gap = *std::min_element(rep.gaps.begin(), rep.gaps.end());
  rep.min_terminal = *std::min_element(min_terms.begin(), min_terms.end());
  return rep;
}

}  // namespace returnctrl
