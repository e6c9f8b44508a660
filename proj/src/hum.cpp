#include "returnctrl/hum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "returnctrl/errors.hpp"
#include "returnctrl/rng.hpp"
#include "returnctrl/threads.hpp"

namespace returnctrl {

CarlemanWeight build_weights(const SpaceTimeGrid& grid, double s, double omega1_lo,
                             double omega1_hi, double kappa) {
  grid.validate();
  if (!(s > 0.0)) throw ConfigError("weights: s must be positive");
  if (!(kappa > 0.0 && kappa < 0.25)) throw ConfigError("weights: kappa must lie in (0, 1/4)");
  const double a = grid.x_lo, b = grid.x_hi;
  if (!(a < omega1_lo && omega1_lo < omega1_hi && omega1_hi < b))
    throw GeometryError("weights: omega1 must be strictly interior to the domain");

  // psi(x) = (x-a)(b-x)(1 + beta (x - xc)): vanishes at the endpoints and the
  // beta below places its critical point exactly at xc, the center of omega1,
  // so |psi'| > 0 away from omega1.
  const double xc = 0.5 * (omega1_lo + omega1_hi);
  const double beta = (2.0 * xc - a - b) / ((xc - a) * (b - xc));
  if (1.0 + beta * (a - xc) <= 0.0 || 1.0 + beta * (b - xc) <= 0.0)
    throw GeometryError("weights: omega1 too close to the boundary for a positive psi");
  auto psi = [&](double x) { return (x - a) * (b - x) * (1.0 + beta * (x - xc)); };

  const int n = 2049;
  double psimax = 0.0;
  for (int i = 0; i < n; ++i)
    psimax = std::max(psimax, psi(a + (b - a) * double(i) / double(n - 1)));
  const double mu = 2.0 / psimax;
  const double top = std::exp(2.0 * mu * psimax);

  CarlemanWeight w;
  w.s = s;
  w.kappa = kappa;
  w.rho_x = RealProfile::sample(a, b, n, [&](double x) { return top - std::exp(mu * psi(x)); },
                                "rho");
  for (double v : w.rho_x.values())
    if (!(v > 0.0)) throw ConstructionError("weights: rho must be positive");
  return w;
}

HumSystem::HumSystem(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                     const CarlemanWeight& weight, double t1, double t2, double omega_lo,
                     double omega_hi, bool conjugate)
    : omega_lo_(omega_lo), omega_hi_(omega_hi), conjugate_(conjugate) {
  grid.validate();
  if (!(0.0 <= t1 && t1 < t2 && t2 <= grid.T))
    throw ConfigError("hum: control window must satisfy 0 <= t1 < t2 <= T");
  const double dt = grid.dt();
  n1_ = int(std::lround(t1 / dt));
  n2_ = int(std::lround(t2 / dt));
  if (n2_ - n1_ < 2) throw ConfigError("hum: control window shorter than two time steps");
  gw_ = time_subgrid(grid, n1_, n2_);
  cw_ = slice_time(coeffs, n1_, n2_);
  std::tie(w0_, w1_) = grid.node_range(omega_lo, omega_hi);

  const double delta = gw_.T;
  const double eta_max = weight.eta(0.0, delta);
  double rho_max = 0.0;
  for (int i = w0_; i < w1_; ++i) rho_max = std::max(rho_max, weight.rho(grid.x(i)));
  if (weight.s * rho_max * eta_max > 700.0)
    throw ConfigError("hum: carleman weight overflows on this window; reduce s");

  wtab_.assign(std::size_t(gw_.nt), std::vector<double>(std::size_t(w1_ - w0_)));
  double wmax = 0.0;
  for (int m = 0; m < gw_.nt; ++m) {
    const double sigma = (double(m) + gw_.theta) * gw_.dt();
    for (int i = w0_; i < w1_; ++i) {
      const double v = weight.control_weight(grid.x(i), sigma, delta);
      if (!std::isfinite(v)) throw ConfigError("hum: carleman weight not finite");
      wtab_[std::size_t(m)][std::size_t(i - w0_)] = v;
      wmax = std::max(wmax, v);
    }
  }
  if (!(wmax > 0.0)) throw ConfigError("hum: carleman weight vanishes on the whole window");
  // Normalize to unit max.  The achievable control family W phi_1 is a linear
  // space, so this only reparametrizes the penalty scale (eps -> eps / wmax)
  // and keeps penalty magnitudes comparable across windows and s values.
  for (auto& row : wtab_)
    for (auto& v : row) v /= wmax;
}

HumSystem::WindowSolve HumSystem::propagate(const std::vector<Z>& phi) const {
  const int nx = gw_.nx;
  if (int(phi.size()) != 2 * nx) throw ConfigError("hum: phi dimension mismatch");
  const std::vector<Z> phi1(phi.begin(), phi.begin() + nx);
  const std::vector<Z> phi2(phi.begin() + nx, phi.end());
  const ComplexPair q = solve_adjoint(gw_, cw_, phi1, phi2, conjugate_);

  WindowSolve out;
  out.h = ComplexField(gw_);
  const double dtdx = gw_.dt() * gw_.dx();
  for (int m = 0; m < gw_.nt; ++m)
    for (int i = w0_; i < w1_; ++i) {
      const double w = wtab_[std::size_t(m)][std::size_t(i - w0_)];
      const Z q1 = q.first.at(m, i);
      out.h.at(m + 1, i) = w * q1;
      out.weighted_sq += w * std::norm(q1) * dtdx;
    }
  const std::vector<Z> zero(std::size_t(nx), Z{});
  out.zeta = solve_forward(gw_, cw_, zero, zero, &out.h, omega_lo_, omega_hi_);
  out.terminal.resize(std::size_t(2 * nx));
  for (int i = 0; i < nx; ++i) {
    out.terminal[std::size_t(i)] = out.zeta.first.at(gw_.nt, i);
    out.terminal[std::size_t(nx + i)] = out.zeta.second.at(gw_.nt, i);
  }
  return out;
}

std::vector<Z> HumSystem::apply(const std::vector<Z>& phi, double eps) const {
  std::vector<Z> out = propagate(phi).terminal;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += eps * phi[k];
  return out;
}

Z HumSystem::inner(const std::vector<Z>& a, const std::vector<Z>& b) const {
  Z acc{};
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * std::conj(b[k]);
  return gw_.dx() * acc;
}

double HumSystem::objective(const std::vector<Z>& phi, const std::vector<Z>& b,
                            double eps) const {
  const std::vector<Z> ap = apply(phi, eps);
  return 0.5 * inner(ap, phi).real() + inner(b, phi).real();
}

std::vector<Z> HumSystem::dense_matrix_serial(double eps) const {
  const int d = dim();
  std::vector<Z> mat(std::size_t(d) * std::size_t(d));
  for (int j = 0; j < d; ++j) {
    std::vector<Z> e(std::size_t(d), Z{});
    e[std::size_t(j)] = 1.0;
    const std::vector<Z> col = apply(e, eps);
    for (int i = 0; i < d; ++i) mat[std::size_t(i) * std::size_t(d) + std::size_t(j)] = col[std::size_t(i)];
  }
  return mat;
}

std::vector<Z> HumSystem::dense_matrix(double eps) const {
  const int d = dim();
  std::vector<Z> mat(std::size_t(d) * std::size_t(d));
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (int j = 0; j < d; ++j) {
    std::vector<Z> e(std::size_t(d), Z{});
    e[std::size_t(j)] = 1.0;
    const std::vector<Z> col = apply(e, eps);
    for (int i = 0; i < d; ++i) mat[std::size_t(i) * std::size_t(d) + std::size_t(j)] = col[std::size_t(i)];
  }
  return mat;
}

std::vector<Z> HumSystem::free_terminal(const std::vector<Z>& z1, const std::vector<Z>& z2) const {
  const ComplexPair zf = solve_forward(gw_, cw_, z1, z2);
  std::vector<Z> out(std::size_t(2 * gw_.nx));
  for (int i = 0; i < gw_.nx; ++i) {
    out[std::size_t(i)] = zf.first.at(gw_.nt, i);
    out[std::size_t(gw_.nx + i)] = zf.second.at(gw_.nt, i);
  }
  return out;
}

std::vector<Z> cg_solve(const HumSystem& sys, const std::vector<Z>& rhs, double eps,
                        const CgOptions& opt, int* iterations, double* residual,
                        std::vector<double>* history) {
  const std::size_t d = rhs.size();
  std::vector<Z> x(d, Z{});
  std::vector<Z> r = rhs, p = rhs;
  const double b_norm = std::sqrt(sys.inner(rhs, rhs).real());
  std::vector<double> hist;
  if (b_norm == 0.0) {
    if (iterations) *iterations = 0;
    if (residual) *residual = 0.0;
    if (history) history->clear();
    return x;
  }
  double rr = sys.inner(r, r).real();
  const int cap = opt.max_iter > 0 ? opt.max_iter : 4 * int(d) + 200;
  int k = 0;
  for (; k < cap; ++k) {
    const std::vector<Z> ap = sys.apply(p, eps);
    const double pap = sys.inner(ap, p).real();
    if (!(pap > 0.0))
      throw ConvergenceError("cg: operator lost positive definiteness", hist);
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = sys.inner(r, r).real();
    const double rel = std::sqrt(std::max(rr_new, 0.0)) / b_norm;
    hist.push_back(rel);
    if (rel <= opt.tol) {
      ++k;
      break;
    }
    // Stagnation: no meaningful progress over the last 50 iterations.
    if (k >= 50 && rel > 0.999 * hist[std::size_t(k - 50)])
      throw ConvergenceError("cg: stagnated before reaching tolerance", hist);
    const double beta = rr_new / rr;
    for (std::size_t i = 0; i < d; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
  }
  if (hist.empty() || hist.back() > opt.tol)
    throw ConvergenceError("cg: iteration cap reached before tolerance", hist);
  if (iterations) *iterations = k;
  if (residual) *residual = hist.back();
  if (history) *history = hist;
  return x;
}

ControlResult solve_penalized_control(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                                      const std::vector<Z>& alpha1, const std::vector<Z>& alpha2,
                                      const CarlemanWeight& weight, double penalty_epsilon,
                                      double t1, double t2, double omega_lo, double omega_hi,
                                      bool conjugate, const CgOptions& cg) {
  if (!(penalty_epsilon > 0.0)) throw ConfigError("hum: penalty_epsilon must be positive");
  const HumSystem sys(grid, coeffs, weight, t1, t2, omega_lo, omega_hi, conjugate);
  const int n1 = sys.n1(), n2 = sys.n2();
  if (n1 != 0 && n1 < 2) throw ConfigError("hum: t1 must be 0 or at least two steps in");
  if (n2 != grid.nt && grid.nt - n2 < 2)
    throw ConfigError("hum: t2 must be T or at least two steps before it");
  const int nx = grid.nx;

  // Phase 1: free evolution on (0, t1).
  std::vector<Z> z1_t1 = alpha1, z2_t1 = alpha2;
  ComplexPair pre;
  if (n1 > 0) {
    const SpaceTimeGrid gp = time_subgrid(grid, 0, n1);
    pre = solve_forward(gp, slice_time(coeffs, 0, n1), alpha1, alpha2);
    for (int i = 0; i < nx; ++i) {
      z1_t1[std::size_t(i)] = pre.first.at(n1, i);
      z2_t1[std::size_t(i)] = pre.second.at(n1, i);
    }
  }

  // Phase 2: minimize the dual quadratic over the adjoint final datum.
  std::vector<Z> b = sys.free_terminal(z1_t1, z2_t1);
  std::vector<Z> rhs(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) rhs[k] = -b[k];
  ControlResult res;
  res.penalty_epsilon = penalty_epsilon;
  res.phi_T = cg_solve(sys, rhs, penalty_epsilon, cg, &res.cg_iterations, &res.cg_residual,
                       &res.cg_history);

  const HumSystem::WindowSolve ws = sys.propagate(res.phi_T);
  const SpaceTimeGrid& gw = sys.window_grid();
  const ComplexPair zw = solve_forward(gw, sys.window_coeffs(), z1_t1, z2_t1, &ws.h,
                                       omega_lo, omega_hi);

  // Phase 3: free evolution on (t2, T).
  std::vector<Z> z1_t2(static_cast<std::size_t>(nx)), z2_t2(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i) {
    z1_t2[std::size_t(i)] = zw.first.at(gw.nt, i);
    z2_t2[std::size_t(i)] = zw.second.at(gw.nt, i);
  }
  ComplexPair post;
  if (n2 < grid.nt) {
    const SpaceTimeGrid gp = time_subgrid(grid, n2, grid.nt);
    post = solve_forward(gp, slice_time(coeffs, n2, grid.nt), z1_t2, z2_t2);
  }

  res.h = ComplexField(grid);
  res.zeta = ComplexPair(grid);
  for (int n = 0; n <= grid.nt; ++n)
    for (int i = 0; i < nx; ++i) {
      if (n <= n1) {
        res.zeta.first.at(n, i) = n1 > 0 ? pre.first.at(n, i) : alpha1[std::size_t(i)];
        res.zeta.second.at(n, i) = n1 > 0 ? pre.second.at(n, i) : alpha2[std::size_t(i)];
      } else if (n <= n2) {
        res.zeta.first.at(n, i) = zw.first.at(n - n1, i);
        res.zeta.second.at(n, i) = zw.second.at(n - n1, i);
        res.h.at(n, i) = ws.h.at(n - n1, i);
      } else {
        res.zeta.first.at(n, i) = post.first.at(n - n2, i);
        res.zeta.second.at(n, i) = post.second.at(n - n2, i);
      }
    }
  res.terminal_norm = res.zeta.slice_norm(grid.nt);
  res.weighted_norm = std::sqrt(ws.weighted_sq);
  res.sup_norm = res.h.max_abs();
  return res;
}

namespace {

ObservabilityStats observability_impl(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                                      double omega_lo, double omega_hi, int n_samples,
                                      std::uint64_t seed, bool conjugate, bool parallel) {
  grid.validate();
  if (n_samples < 1) throw ConfigError("observability: n_samples must be >= 1");
  const int nx = grid.nx;
  const double pi = 3.14159265358979323846;

  // Deterministic sine probes (component-pure, k = 1..4), then random data.
  std::vector<std::pair<std::vector<Z>, std::vector<Z>>> data;
  for (int k = 1; k <= 4; ++k)
    for (int comp = 0; comp < 2; ++comp) {
      std::vector<Z> p1(std::size_t(nx), Z{}), p2(std::size_t(nx), Z{});
      for (int i = 0; i < nx; ++i)
        (comp == 0 ? p1 : p2)[std::size_t(i)] = std::sin(double(k) * pi * grid.x(i));
      data.emplace_back(std::move(p1), std::move(p2));
    }
  Rng rng(seed);
  for (int sm = 0; sm < n_samples; ++sm) {
    std::vector<Z> p1(static_cast<std::size_t>(nx)), p2(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) {
      p1[std::size_t(i)] = rng.normal_complex();
      p2[std::size_t(i)] = rng.normal_complex();
    }
    data.emplace_back(std::move(p1), std::move(p2));
  }

  // Normalize to unit L2 norm up front (also rejects a zero datum outside
  // the parallel region, where throwing is safe).
  for (auto& [p1, p2] : data) {
    double nrm2 = 0.0;
    for (int i = 0; i < nx; ++i)
      nrm2 += std::norm(p1[std::size_t(i)]) + std::norm(p2[std::size_t(i)]);
    nrm2 *= grid.dx();
    if (nrm2 == 0.0) throw ConfigError("observability: zero final datum");
    const double scale = 1.0 / std::sqrt(nrm2);
    for (int i = 0; i < nx; ++i) {
      p1[std::size_t(i)] *= scale;
      p2[std::size_t(i)] *= scale;
    }
  }

  const auto [w0, w1] = grid.node_range(omega_lo, omega_hi);
  const int total = int(data.size());
  std::vector<double> ratios(static_cast<std::size_t>(total));
  auto run_one = [&](int idx) {
    const auto& [p1, p2] = data[std::size_t(idx)];
    const ComplexPair q = solve_adjoint(grid, coeffs, p1, p2, conjugate);
    const double num = std::pow(q.slice_norm(0), 2);
    double den = 0.0;
    for (int n = 0; n < grid.nt; ++n)
      for (int i = w0; i < w1; ++i) den += std::norm(q.first.at(n, i));
    den *= grid.dt() * grid.dx();
    ratios[std::size_t(idx)] =
        den <= 1e-14 * num ? std::numeric_limits<double>::infinity() : num / den;
  };
  if (parallel) {
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (int idx = 0; idx < total; ++idx) run_one(idx);
  } else {
    for (int idx = 0; idx < total; ++idx) run_one(idx);
  }

  ObservabilityStats st;
  st.ratios = ratios;
  st.n_samples = n_samples;
  double sum = 0.0;
  int finite = 0;
  for (double r : ratios) {
    if (std::isinf(r)) {
      st.divergent = true;
      continue;
    }
    st.max_ratio = std::max(st.max_ratio, r);
    sum += r;
    ++finite;
  }
  if (st.divergent) st.max_ratio = std::numeric_limits<double>::infinity();
  st.mean_finite = finite > 0 ? sum / double(finite) : 0.0;
  return st;
}

}  // namespace

ObservabilityStats estimate_observability(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                                          double omega_lo, double omega_hi, int n_samples,
                                          std::uint64_t seed, bool conjugate) {
  return observability_impl(grid, coeffs, omega_lo, omega_hi, n_samples, seed, conjugate, true);
}

ObservabilityStats estimate_observability_serial(const SpaceTimeGrid& grid,
                                                 const CoefficientSet& coeffs, double omega_lo,
                                                 double omega_hi, int n_samples,
                                                 std::uint64_t seed, bool conjugate) {
  return observability_impl(grid, coeffs, omega_lo, omega_hi, n_samples, seed, conjugate, false);
}

}  // namespace returnctrl
