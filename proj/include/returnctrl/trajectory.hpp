#pragma once

#include <array>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "returnctrl/grid.hpp"
#include "returnctrl/jet.hpp"
#include "returnctrl/profile.hpp"
#include "returnctrl/radial_ode.hpp"
#include "returnctrl/source_profile.hpp"

namespace returnctrl {

// Coupling closure g(u, v) with partial-derivative closures; g(0,0) = 0.
struct Coupling {
  std::function<Z(Z, Z)> g;
  std::function<Z(Z, Z)> dg_du;
  std::function<Z(Z, Z)> dg_dv;

  static Coupling linear_v();  // g(u, v) = v
  static Coupling zero();
};

// All scalar parameters of the trajectory construction.
struct BumpConfig {
  // Bump amplitude; negative means "choose automatically": the largest value
  // <= 0.5 passing the remainder-domination check.  Zero gives the zero
  // trajectory (the small-amplitude limit).
  double bump_epsilon = -1.0;
  double delta = 0.05;
  int dim = 1;
  double reaction = 0.0;
  // Space-time support radius; negative means automatic:
  // 0.4 * min(sqrt(2 center_t), 2 dist(center_x, boundary of omega)).
  double rho_radius = -1.0;
  double center_t = 0.5;  // T/2
  double center_x = 0.5;  // x0, inside omega
  double omega_lo = 0.05;
  double omega_hi = 0.95;
  int z_grid_n = 2049;
  int t_grid_n = 2049;
  TrajectoryKind kind = TrajectoryKind::CubicReal;

  void validate() const;
  double resolved_rho() const;
};

struct SupportBox {
  double t_lo = 0.0, t_hi = 0.0, x_lo = 0.0, x_hi = 0.0;
  bool contains(double t, double x) const {
    return t > t_lo && t < t_hi && x > x_lo && x < x_hi;
  }
};

struct ReferenceTrajectory {
  SpaceTimeGrid grid;
  ComplexField u_bar, v_bar, h_bar;
  SupportBox support;
  TrajectoryKind kind = TrajectoryKind::CubicReal;
  BumpConfig config;  // with bump_epsilon and rho_radius resolved
};

// Finite-difference step controls for the defect oracle.  Steps scale with
// lambda(t): the trajectory's spatial features shrink like lambda near the
// ends of the time bump, so a fixed step would leave the asymptotic regime.
struct DefectOracleOptions {
  double cx = 5e-5;   // x-step = cx * rho * lambda(tau)
  double ct = 2e-4;   // t-step = ct * rho^2 * max(1 - tau^2, 0.05)
  int samples_t = 33;
  int samples_x = 65;
};

struct VerifyReport {
  double defect_u_max = 0.0;  // residual of the u-equation against stored h
  double defect_v_max = 0.0;  // at the refined FD level
  double defect_v_l2 = 0.0;
  std::vector<std::pair<double, double>> refinement;  // (step scale, max defect)
  double order = 0.0;  // observed convergence order between the two levels
};

// Evaluates the reference construction: V(t,r) = sum_i f_i(t) g_i(r/lambda),
// its source K with K^p = V_t - Delta V, and the rescaled, shifted fields.
class TrajectoryBuilder {
 public:
  explicit TrajectoryBuilder(const BumpConfig& cfg);

  const BumpConfig& config() const { return cfg_; }
  double bump_epsilon() const { return eps_; }
  double rho() const { return rho_; }
  int core_power() const { return G_.core_power(); }
  const RadialSolution& radial() const { return g0_; }

  // Reference (unit) frame, t in [-1,1], radial coordinate r.
  double lambda(double t) const;
  Jet<Z, 8> time_jet(int i, double t) const;  // f_i as a jet in t (i = 0..3)
  ZJet bump_profile_jet(int i, double z) const;  // g_i, i = 1..3
  ZJet calV(double t, double z) const;  // script-V as a jet in z
  Z A_value(double t, double z) const;  // A = calV / f_0, closed form off the band
  Z V_ref(double t, double r) const;
  Z K_ref(double t, double r) const;

  // Transformed and shifted frame.
  Z v_bar(double t, double x) const;
  Z u_bar(double t, double x) const;
  SupportBox support() const;

  ReferenceTrajectory assemble(const SpaceTimeGrid& grid, const Coupling& g) const;

 private:
  struct TimeSlice {
    double lam = 0.0;
    Z laml{}, lam2{};          // lambda*lambda', lambda^2
    std::array<Z, 4> f{};      // f_i(t)
    std::array<Z, 4> fdot{};   // f_i'(t)
  };
  TimeSlice time_slice(double t) const;
  ZJet calV(const TimeSlice& s, double z) const;
  Z K_from_V(double lam, Z V, double z) const;
  bool dominates(double eps) const;

  BumpConfig cfg_;
  SourceProfile G_;
  RadialSolution g0_;
  std::array<Z, 4> g0_half_{};  // g0^(k)(1/2), k = 0..3
  double eps_ = 0.0;
  double rho_ = 0.0;
};

// Spec-level profile builders (sampled views of the closures above).
std::vector<ComplexProfile> build_bump_profiles(double delta, TrajectoryKind kind,
                                                int grid_n = 2049);
std::vector<ComplexProfile> build_time_profiles(const BumpConfig& cfg, const ComplexProfile& g0);

ReferenceTrajectory assemble_trajectory(const BumpConfig& cfg, const SpaceTimeGrid& grid,
                                        const Coupling& g);

VerifyReport verify_trajectory(const ReferenceTrajectory& traj, const Coupling& g,
                               const DefectOracleOptions& opt = {});

}  // namespace returnctrl
