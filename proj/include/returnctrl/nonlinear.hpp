#pragma once

#include <cstdint>
#include <vector>

#include "returnctrl/hum.hpp"
#include "returnctrl/trajectory.hpp"

namespace returnctrl {

// Control geometry derived from the reference trajectory: the control acts on
// omega0 x (t1, t2), the Carleman weight is centered on the core interval
// omega1 (the middle half of omega0), and `certificate` is the space-time
// rectangle on which the frozen coupling coefficient is verified to stay away
// from zero.
struct ControlWindow {
  double t1 = 0.0, t2 = 0.0;
  double omega_lo = 0.0, omega_hi = 0.0;    // control support omega0
  double omega1_lo = 0.0, omega1_hi = 0.0;  // weight core omega1
  Window certificate{};
};

// Default window for a trajectory with resolved config.  Time window
// center_t +- 0.75 rho^2, control support center_x +- 0.4 rho lambda(0.75):
// inside the trajectory support but clear of the curve where the cubic-kind
// coupling 3 u_bar^2 vanishes.  For the complex kind the coupling certificate
// moves to a rectangle right of center where Im(2 u_bar) is uniformly large.
ControlWindow default_control_window(const BumpConfig& cfg, TrajectoryKind kind);

struct NonlinearProblem {
  ReferenceTrajectory traj;
  Coupling g;
  std::vector<Z> u0, v0;
  // Smallness bound on the initial data; negative means 1e-3 * max |u_bar|.
  double delta = -1.0;

  double resolved_delta() const;
  void validate() const;
};

// Frozen linearization of the perturbation system around the reference
// trajectory at the current iterate z = (z1, z2):
//   a11 = [g(u+z1, v+z2) - g(u, v+z2)] / z1 (difference quotient, switching
//         to dg_du below |z1| ~ 1e-8 * scale), a12 analogous in v,
//   a21 = exact expansion of f(u+z1) - f(u) over z1 for f(u) = u^3 or u^2,
//   a22 = the reaction constant.
// M_bar is measured from the frozen fields and the window invariant is
// checked; an empty or degenerate coupling window throws ConstructionError.
CoefficientSet freeze_coefficients(const NonlinearProblem& problem, const ComplexPair& z);

struct PicardOptions {
  double s = 2e-4;     // Carleman parameter of the control weight
  double kappa = 0.05;
  double penalty_epsilon = 1e-8;
  double tol = 1e-10;  // relative update tolerance
  int max_iter = 15;
  CgOptions cg{};
};

struct PicardStep {
  int k = 0;
  double update_norm = 0.0;
  double sup_norm = 0.0;
  double terminal_norm = 0.0;
  int cg_iterations = 0;
};

struct PicardResult {
  ComplexField u, v, h;  // total state u_bar + zeta1 etc., staggered control
  ComplexPair zeta;      // perturbation part
  ControlResult control;  // last linear control solve
  std::vector<PicardStep> history;
  ControlWindow window;
  double data_norm = 0.0;      // ||(u0, v0)||_{L2}
  double terminal_norm = 0.0;  // ||(u, v)(T)||_{L2}
};

// Picard iteration z^{k+1} = penalized-control solve of the system frozen at
// z^k, starting from z^0 = 0.  Throws ConvergenceError when the update norms
// grow three times in a row or the tolerance is not met within max_iter.
PicardResult run_picard(const NonlinearProblem& problem, const PicardOptions& opt = {});

struct ObstructionReport {
  std::vector<double> gaps;  // per control: min over nodes of v(T) - v*(T)
  double min_gap = 0.0;
  double min_terminal = 0.0;  // min over controls and nodes of v(T)
  double free_min_terminal = 0.0;  // min over nodes of v*(T)
  int n_controls = 0;
};

// Sign obstruction of the u^2-coupled system (implicit Euler, theta = 1):
//   u_t - Lap u = h 1_omega,   v_t - Lap v = R v + u^2,
// against the free evolution v* of the same v0 >= 0.  Since u^2 >= 0 and the
// implicit-Euler matrix is an M-matrix, v(T) >= v*(T) nodewise for every
// control; the report records the worst gap over n_controls random controls.
ObstructionReport demo_obstruction(const SpaceTimeGrid& grid, double R,
                                   const std::vector<double>& u0, const std::vector<double>& v0,
                                   double omega_lo, double omega_hi, int n_controls,
                                   std::uint64_t seed, double amplitude = 1.0);

}  // namespace returnctrl
