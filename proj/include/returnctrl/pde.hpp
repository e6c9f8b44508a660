#pragma once

#include <complex>
#include <vector>

#include "returnctrl/grid.hpp"

namespace returnctrl {

using Z = std::complex<double>;
using ComplexPair = FieldPair<std::complex<double>>;

// Control/observation window in space-time.
struct Window {
  double t1 = 0.0, t2 = 0.0, x_lo = 0.0, x_hi = 0.0;
};

// Time-space varying coupling coefficients of the linear 2x2 system
//   z1_t - Lap z1 = a11 z1 + a12 z2 + h 1_omega
//   z2_t - Lap z2 = a21 z1 + a22 z2
// with the uniform bound M_bar and the coupling window where a21 is bounded
// away from zero (real kind) or |Im a21| is (complex kind).
struct CoefficientSet {
  ComplexField a11, a12, a21, a22;
  double M_bar = 0.0;
  Window window{};

  static CoefficientSet constants(const SpaceTimeGrid& g, Z c11, Z c12, Z c21, Z c22);

  // Verifies |a_ij| <= M_bar everywhere and the window lower bound on a21
  // (a21 >= 1/M_bar for the real kind, |Im a21| >= 1/M_bar for the complex
  // kind); throws ConstructionError naming the violated bound.
  void check(bool complex_kind) const;
};

// Subgrid covering time-step rows n0..n1 of `grid` (same space nodes and
// theta, T = (n1 - n0) dt), and the coefficient restriction onto it.  Used by
// the phased control solves that work on a time window.
SpaceTimeGrid time_subgrid(const SpaceTimeGrid& grid, int n0, int n1);
CoefficientSet slice_time(const CoefficientSet& coeffs, int n0, int n1);

// Theta-scheme forward solve.  Per step the coefficients enter at the
// theta-weighted level A_n := theta A^{n+1} + (1-theta) A^n, used on both
// sides, so Crank-Nicolson keeps order 2 with time-varying coefficients and
// the discrete adjoint below mirrors the scheme exactly.  The control h acts
// on the first component only, masked to the omega node range, and is stored
// staggered: row n+1 holds the value applied during the step n -> n+1 (row 0
// is ignored), which keeps the control-to-state map exactly adjoint to the
// backward sweep.  `source`, if given, adds an unmasked theta-blended nodal
// source to both components (used by manufactured solutions).
ComplexPair solve_forward(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                          const std::vector<Z>& z1_0, const std::vector<Z>& z2_0,
                          const ComplexField* control = nullptr, double omega_lo = 0.0,
                          double omega_hi = 0.0, const ComplexPair* source = nullptr);

// Exact discrete adjoint of solve_forward: backward sweep with transposed
// (and, when `conjugate`, conjugated) coupling.  Row n of the result holds
// the adjoint step variable q^n for n = 0..nt-1 and the final datum at row
// nt.  With zero initial data and the pairing below, the duality identity
// <z(T), phi_T> = pairing(h, phi) holds to machine precision.
ComplexPair solve_adjoint(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                          const std::vector<Z>& p1_T, const std::vector<Z>& p2_T,
                          bool conjugate);

// dt dx sum_n sum_{i in omega} h^{n+1}_i * q1^n_i, with q1 conjugated when
// `conjugate` matches the adjoint solve.
Z control_pairing(const SpaceTimeGrid& grid, const ComplexField& control, double omega_lo,
                  double omega_hi, const ComplexPair& adjoint, bool conjugate);

// dx sum_i a_i conj(b_i) (sesquilinear) or plain product when conjugate=false.
Z slice_pairing(const SpaceTimeGrid& grid, const std::vector<Z>& a, const std::vector<Z>& b,
                bool conjugate);

// Scalar real implicit-Euler solve of v_t - Lap v = R v + source, used by the
// obstruction demo; the theta=1 scheme matrix is an M-matrix for dt R < 1, so
// nonnegative data and source give a nonnegative solution.
RealField solve_scalar_implicit(const SpaceTimeGrid& grid, double R,
                                const std::vector<double>& v0, const RealField* source);

// Discrete residual of the nonlinear system at (u, v, h): first component
// u_t - Lap u - g(u,v) - h 1_omega, second v_t - Lap v - R v - f(u), with the
// same theta-weighted stencil as solve_forward.  Rows 1..nt hold the residual
// of the step ending there; row 0 is zero.
template <class G, class F>
ComplexPair discrete_residual(const SpaceTimeGrid& grid, const ComplexPair& state,
                              const ComplexField* control, double omega_lo, double omega_hi,
                              G&& g, F&& f, double R) {
  grid.validate();
  const double dt = grid.dt(), dx = grid.dx();
  const double th = grid.theta;
  ComplexPair res(grid);
  auto lap = [&](const ComplexField& w, int n, int i) {
    const Z l = i > 0 ? w.at(n, i - 1) : Z{};
    const Z r = i + 1 < grid.nx ? w.at(n, i + 1) : Z{};
    return (l - 2.0 * w.at(n, i) + r) / (dx * dx);
  };
  const auto [w0, w1] = control ? grid.node_range(omega_lo, omega_hi) : std::pair<int, int>{0, 0};
  for (int n = 1; n <= grid.nt; ++n)
    for (int i = 0; i < grid.nx; ++i) {
      const Z u0 = state.first.at(n - 1, i), u1 = state.first.at(n, i);
      const Z v0 = state.second.at(n - 1, i), v1 = state.second.at(n, i);
      Z r1 = (u1 - u0) / dt - th * (lap(state.first, n, i) + g(u1, v1)) -
             (1.0 - th) * (lap(state.first, n - 1, i) + g(u0, v0));
      if (control && i >= w0 && i < w1) r1 -= control->at(n, i);
      const Z r2 = (v1 - v0) / dt - th * (lap(state.second, n, i) + R * v1 + f(u1)) -
                   (1.0 - th) * (lap(state.second, n - 1, i) + R * v0 + f(u0));
      res.first.at(n, i) = r1;
      res.second.at(n, i) = r2;
    }
  return res;
}

}  // namespace returnctrl
