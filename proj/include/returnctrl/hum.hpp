#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "returnctrl/pde.hpp"
#include "returnctrl/profile.hpp"

namespace returnctrl {

// Carleman-style weight pair: the control carries e^{-s rho eta} (s eta)^7
// and the dual norm the reciprocal.  eta(t) = 1/(t (Delta - t)) on a window
// of length Delta, evaluated with t clamped to [kappa Delta, (1-kappa) Delta]
// so both weights stay finite at the window ends.
struct CarlemanWeight {
  double s = 0.0;
  double kappa = 0.05;
  RealProfile rho_x;

  double rho(double x) const { return rho_x(x); }

  double eta(double sigma, double delta) const {
    const double lo = kappa * delta, hi = (1.0 - kappa) * delta;
    const double c = sigma < lo ? lo : (sigma > hi ? hi : sigma);
    return 1.0 / (c * (delta - c));
  }

  // e^{-s rho eta} (s eta)^7, computed in log form to avoid 0 * inf.
  double control_weight(double x, double sigma, double delta) const {
    const double e = eta(sigma, delta);
    return std::exp(-s * rho(x) * e + 7.0 * std::log(s * e));
  }
};

// rho(x) = e^{2 mu max psi} - e^{mu psi(x)} with psi a cubic positive on the
// open interval, vanishing at both endpoints, critical point at the center of
// omega1, and mu = 2 / max psi.
CarlemanWeight build_weights(const SpaceTimeGrid& grid, double s, double omega1_lo,
                             double omega1_hi, double kappa = 0.05);

struct ControlResult {
  ComplexField h;      // staggered control rows on the full grid
  ComplexPair zeta;    // controlled state over the full horizon
  std::vector<Z> phi_T;  // minimizing adjoint datum, stacked (phi1, phi2)
  double terminal_norm = 0.0;
  double weighted_norm = 0.0;
  double sup_norm = 0.0;
  double penalty_epsilon = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  std::vector<double> cg_history;
};

// The dual quadratic of the penalized problem on the control window:
// J(phi) = 1/2 <(Lambda + eps) phi, phi> + Re <b, phi> with Lambda the
// control-to-terminal-state Gramian for h = W phi_1 1_omega.  Lambda is
// Hermitian positive semidefinite by construction; `conjugate` must be true
// whenever the coefficients are genuinely complex.
class HumSystem {
 public:
  HumSystem(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
            const CarlemanWeight& weight, double t1, double t2, double omega_lo,
            double omega_hi, bool conjugate);

  const SpaceTimeGrid& window_grid() const { return gw_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int dim() const { return 2 * gw_.nx; }
  double omega_lo() const { return omega_lo_; }
  double omega_hi() const { return omega_hi_; }

  struct WindowSolve {
    ComplexField h;          // staggered control on the window grid
    ComplexPair zeta;        // state on the window grid (zero initial data)
    std::vector<Z> terminal;  // stacked terminal slices = Lambda phi
    double weighted_sq = 0.0;  // sum W |q1|^2 dt dx = dual-weighted norm^2 of h
  };
  WindowSolve propagate(const std::vector<Z>& phi) const;

  std::vector<Z> apply(const std::vector<Z>& phi, double eps) const;
  double objective(const std::vector<Z>& phi, const std::vector<Z>& b, double eps) const;

  // Dense assembly of Lambda + eps I, column by column (one adjoint/forward
  // sweep per column); the parallel version fans columns across workers and
  // is bitwise identical to the serial reference.
  std::vector<Z> dense_matrix(double eps) const;
  std::vector<Z> dense_matrix_serial(double eps) const;

  // Free evolution of the given window-initial slices, returning the stacked
  // terminal slices (the linear term b of the dual quadratic).
  std::vector<Z> free_terminal(const std::vector<Z>& z1, const std::vector<Z>& z2) const;

  Z inner(const std::vector<Z>& a, const std::vector<Z>& b) const;

  const CoefficientSet& window_coeffs() const { return cw_; }
  double weight_at(int step, int node) const { return wtab_[std::size_t(step)][std::size_t(node)]; }

 private:
  SpaceTimeGrid gw_;
  CoefficientSet cw_;
  double omega_lo_ = 0.0, omega_hi_ = 0.0;
  int n1_ = 0, n2_ = 0, w0_ = 0, w1_ = 0;
  bool conjugate_ = false;
  std::vector<std::vector<double>> wtab_;  // [step][node - w0] control weight
};

struct CgOptions {
  double tol = 1e-10;
  int max_iter = 0;  // 0: 4 * dim + 200
};

// Conjugate gradient on (Lambda + eps) phi = rhs; throws ConvergenceError
// with the residual history on stagnation or iteration-cap exhaustion.
std::vector<Z> cg_solve(const HumSystem& sys, const std::vector<Z>& rhs, double eps,
                        const CgOptions& opt, int* iterations, double* residual,
                        std::vector<double>* history);

// Three-phase penalized control: free on (0, t1), controlled on (t1, t2) by
// the CG-minimized dual problem, free on (t2, T).  alpha1/alpha2 are the
// initial data at t = 0.
ControlResult solve_penalized_control(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                                      const std::vector<Z>& alpha1, const std::vector<Z>& alpha2,
                                      const CarlemanWeight& weight, double penalty_epsilon,
                                      double t1, double t2, double omega_lo, double omega_hi,
                                      bool conjugate, const CgOptions& cg = {});

struct ObservabilityStats {
  std::vector<double> ratios;  // deterministic probes first, then random samples
  double max_ratio = 0.0;
  double mean_finite = 0.0;
  bool divergent = false;
  int n_samples = 0;
};

// Empirical observability ratio ||phi(0)||^2 / iint_{(0,T) x omega} |phi_1|^2
// over 8 deterministic sine probes plus n_samples seeded random unit final
// data.  Random data are generated up front from a single stream, so a run
// with more samples extends a shorter run and the result is independent of
// the worker count.  Reports divergence when a denominator vanishes (the
// a21 = 0 failure mode).
ObservabilityStats estimate_observability(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                                          double omega_lo, double omega_hi, int n_samples,
                                          std::uint64_t seed, bool conjugate = false);
ObservabilityStats estimate_observability_serial(const SpaceTimeGrid& grid,
                                                 const CoefficientSet& coeffs, double omega_lo,
                                                 double omega_hi, int n_samples,
                                                 std::uint64_t seed, bool conjugate = false);

}  // namespace returnctrl
