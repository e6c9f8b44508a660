#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "returnctrl/errors.hpp"
#include "returnctrl/pde.hpp"
#include "returnctrl/rng.hpp"

using namespace returnctrl;

namespace {

constexpr double kPi = 3.14159265358979323846;

SpaceTimeGrid make_grid(int nx, int nt, double theta = 0.5) {
  SpaceTimeGrid g;
  g.nx = nx;
  g.nt = nt;
  g.theta = theta;
  return g;
}

CoefficientSet random_coefficients(const SpaceTimeGrid& g, Rng& rng, double scale) {
  CoefficientSet c = CoefficientSet::constants(g, Z{}, Z{}, Z{}, Z{});
  ComplexField* all[] = {&c.a11, &c.a12, &c.a21, &c.a22};
  for (auto* f : all)
    for (auto& v : f->data()) v = scale * rng.normal_complex();
  return c;
}

std::vector<Z> random_slice(const SpaceTimeGrid& g, Rng& rng) {
  std::vector<Z> v(g.nx);
  for (auto& x : v) x = rng.normal_complex();
  return v;
}

}  // namespace

TEST_CASE("forward solve: zero data stays zero, heat mode decays correctly") {
  const SpaceTimeGrid g = make_grid(100, 160);
  const CoefficientSet c = CoefficientSet::constants(g, Z{}, Z{}, Z{}, Z{});
  const std::vector<Z> zero(g.nx, Z{});

  const ComplexPair trivial = solve_forward(g, c, zero, zero);
  CHECK(trivial.max_abs() == 0.0);

  // Decoupled heat equation with data sin(pi x): exact factor exp(-pi^2 T).
  std::vector<Z> mode(g.nx);
  for (int i = 0; i < g.nx; ++i) mode[i] = std::sin(kPi * g.x(i));
  const ComplexPair sol = solve_forward(g, c, mode, zero);
  const double exact = std::exp(-kPi * kPi * g.T);
  double err = 0.0;
  for (int i = 0; i < g.nx; ++i)
    err = std::max(err, std::abs(sol.first.at(g.nt, i) - exact * mode[i]));
  // Crank-Nicolson phase error ~ (pi^2 dt)^3 nt / 12 ~ 3e-3 relative here.
  CHECK(err < 5e-3 * exact);
  CHECK(sol.second.max_abs() == 0.0);
}

TEST_CASE("forward solve: manufactured solution converges at order 2") {
  // Exact fields with time-space varying complex coefficients; the source is
  // what the continuous equations demand, so the terminal error measures the
  // scheme's truncation alone.
  auto exact1 = [](double t, double x) {
    return Z(1.0, 0.5) * std::exp(-0.3 * t) * std::sin(kPi * x);
  };
  auto exact2 = [](double t, double x) {
    return Z(0.7, -0.2) * std::cos(t) * std::sin(2.0 * kPi * x);
  };
  auto a11 = [](double t, double x) { return Z(0.5 * std::sin(t + x), 0.0); };
  auto a12 = [](double t, double x) { return Z(0.0, 0.3 * std::cos(t - x)); };
  auto a21 = [](double t, double x) { return Z(0.4 * std::cos(2.0 * t + x), 0.1); };
  auto a22 = [](double t, double x) { return Z(-0.2 * std::sin(x), 0.2 * std::sin(t)); };

  std::vector<double> errs;
  for (const auto& [nx, nt] : {std::pair{24, 20}, std::pair{48, 40}, std::pair{96, 80}}) {
    const SpaceTimeGrid g = make_grid(nx, nt);
    CoefficientSet c = CoefficientSet::constants(g, Z{}, Z{}, Z{}, Z{});
    ComplexPair src(g);
    for (int n = 0; n <= g.nt; ++n)
      for (int i = 0; i < g.nx; ++i) {
        const double t = g.t(n), x = g.x(i);
        c.a11.at(n, i) = a11(t, x);
        c.a12.at(n, i) = a12(t, x);
        c.a21.at(n, i) = a21(t, x);
        c.a22.at(n, i) = a22(t, x);
        const Z z1 = exact1(t, x), z2 = exact2(t, x);
        const Z z1_t = -0.3 * z1;
        const Z z1_xx = -kPi * kPi * z1;
        const Z z2_t = Z(0.7, -0.2) * (-std::sin(t)) * std::sin(2.0 * kPi * x);
        const Z z2_xx = -4.0 * kPi * kPi * z2;
        src.first.at(n, i) = z1_t - z1_xx - a11(t, x) * z1 - a12(t, x) * z2;
        src.second.at(n, i) = z2_t - z2_xx - a21(t, x) * z1 - a22(t, x) * z2;
      }
    std::vector<Z> z1_0(g.nx), z2_0(g.nx);
    for (int i = 0; i < g.nx; ++i) {
      z1_0[i] = exact1(0.0, g.x(i));
      z2_0[i] = exact2(0.0, g.x(i));
    }
    const ComplexPair sol = solve_forward(g, c, z1_0, z2_0, nullptr, 0.0, 0.0, &src);
    double err = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      err = std::max(err, std::abs(sol.first.at(g.nt, i) - exact1(g.T, g.x(i))));
      err = std::max(err, std::abs(sol.second.at(g.nt, i) - exact2(g.T, g.x(i))));
    }
    errs.push_back(err);
  }
  const double order1 = std::log2(errs[0] / errs[1]);
  const double order2 = std::log2(errs[1] / errs[2]);
  CHECK(order1 > 1.9);
  CHECK(order2 > 1.9);
}

TEST_CASE("adjoint duality: exact to roundoff for random pairs on all grids") {
  const double theta[3] = {0.5, 0.7, 1.0};
  int which = 0;
  for (const auto& [nx, nt] : {std::pair{12, 16}, std::pair{50, 80}, std::pair{200, 400}}) {
    Rng rng(0x9000 + std::uint64_t(nx));
    for (int pair = 0; pair < 20; ++pair) {
      const SpaceTimeGrid g = make_grid(nx, nt, theta[which++ % 3]);
      const CoefficientSet c = random_coefficients(g, rng, 0.5);
      ComplexField h(g);
      for (auto& v : h.data()) v = rng.normal_complex();
      const std::vector<Z> zero(g.nx, Z{});
      const std::vector<Z> phi1_T = random_slice(g, rng);
      const std::vector<Z> phi2_T = random_slice(g, rng);

      const ComplexPair z = solve_forward(g, c, zero, zero, &h, 0.3, 0.6);
      const ComplexPair q = solve_adjoint(g, c, phi1_T, phi2_T, true);

      std::vector<Z> zT1(g.nx), zT2(g.nx);
      for (int i = 0; i < g.nx; ++i) {
        zT1[i] = z.first.at(g.nt, i);
        zT2[i] = z.second.at(g.nt, i);
      }
      const Z lhs = slice_pairing(g, zT1, phi1_T, true) + slice_pairing(g, zT2, phi2_T, true);
      const Z rhs = control_pairing(g, h, 0.3, 0.6, q, true);
      const double rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-30);
      CAPTURE(nx);
      CAPTURE(pair);
      CHECK(rel < 1e-12);
    }
  }
}

TEST_CASE("adjoint duality: bilinear variant without conjugation") {
  const SpaceTimeGrid g = make_grid(30, 40, 0.5);
  Rng rng(7);
  const CoefficientSet c = random_coefficients(g, rng, 0.4);
  ComplexField h(g);
  for (auto& v : h.data()) v = rng.normal_complex();
  const std::vector<Z> zero(g.nx, Z{});
  const std::vector<Z> phi1 = random_slice(g, rng);
  const std::vector<Z> phi2 = random_slice(g, rng);

  const ComplexPair z = solve_forward(g, c, zero, zero, &h, 0.2, 0.8);
  const ComplexPair q = solve_adjoint(g, c, phi1, phi2, false);
  std::vector<Z> zT1(g.nx), zT2(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    zT1[i] = z.first.at(g.nt, i);
    zT2[i] = z.second.at(g.nt, i);
  }
  const Z lhs = slice_pairing(g, zT1, phi1, false) + slice_pairing(g, zT2, phi2, false);
  const Z rhs = control_pairing(g, h, 0.2, 0.8, q, false);
  CHECK(std::abs(lhs - rhs) < 1e-13 * std::abs(lhs) + 1e-16);
}

TEST_CASE("discrete residual vanishes on the solver's own output") {
  const SpaceTimeGrid g = make_grid(40, 30, 0.5);
  const Z c11(0.2, 0.1), c12(0.1, -0.05), c21(0.3, 0.0);
  const double R = 0.15;
  const CoefficientSet c = CoefficientSet::constants(g, c11, c12, c21, Z(R));
  ComplexField h(g);
  Rng rng(11);
  for (auto& v : h.data()) v = rng.normal_complex();
  std::vector<Z> z1_0(g.nx), z2_0(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    z1_0[i] = std::sin(kPi * g.x(i));
    z2_0[i] = Z(0.0, std::sin(2.0 * kPi * g.x(i)));
  }
  const ComplexPair sol = solve_forward(g, c, z1_0, z2_0, &h, 0.3, 0.7);
  const ComplexPair res = discrete_residual(
      g, sol, &h, 0.3, 0.7, [&](Z u, Z v) { return c11 * u + c12 * v; },
      [&](Z u) { return c21 * u; }, R);
  // The residual divides by dt and dx^2, so allow the matching amplification.
  const double scale = sol.max_abs() / (g.dx() * g.dx());
  CHECK(res.max_abs() < 1e-12 * scale);
}

TEST_CASE("scalar implicit solve: positivity and monotonicity") {
  const SpaceTimeGrid g = make_grid(60, 50, 1.0);
  std::vector<double> v0(g.nx);
  for (int i = 0; i < g.nx; ++i) v0[i] = std::sin(kPi * g.x(i));
  RealField src(g);
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) src.at(n, i) = 0.5 + 0.5 * std::sin(3.0 * g.t(n) + g.x(i));

  const RealField base = solve_scalar_implicit(g, 3.0, v0, nullptr);
  const RealField forced = solve_scalar_implicit(g, 3.0, v0, &src);
  double min_base = 1e300, min_gap = 1e300;
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      min_base = std::min(min_base, base.at(n, i));
      min_gap = std::min(min_gap, forced.at(n, i) - base.at(n, i));
    }
  CHECK(min_base >= 0.0);
  CHECK(min_gap >= 0.0);  // comparison principle: larger source, larger solution
  // Interior positivity at the final time despite R = 3 growth.
  CHECK(base.at(g.nt, g.nx / 2) > 0.0);

  SpaceTimeGrid bad = g;
  bad.nt = 2;  // dt = 0.5, dt * R = 1.5
  CHECK_THROWS_AS(solve_scalar_implicit(bad, 3.0, v0, nullptr), ConstructionError);
}

TEST_CASE("coefficient checks: bound and window are enforced") {
  const SpaceTimeGrid g = make_grid(20, 10);
  CoefficientSet c = CoefficientSet::constants(g, Z(0.5), Z(-0.3), Z(0.8), Z(0.1));
  c.M_bar = 2.0;
  c.window = {0.2, 0.8, 0.3, 0.7};
  CHECK_NOTHROW(c.check(false));

  // a21 = 0.8 has no imaginary part, so the complex-kind bound fails.
  CHECK_THROWS_AS(c.check(true), ConstructionError);

  CoefficientSet tight = c;
  tight.M_bar = 0.6;  // |a21| = 0.8 > M_bar
  CHECK_THROWS_AS(tight.check(false), ConstructionError);

  CoefficientSet weak = CoefficientSet::constants(g, Z(0.5), Z(-0.3), Z(0.1), Z(0.1));
  weak.M_bar = 2.0;  // needs a21 >= 0.5 in the window
  weak.window = {0.2, 0.8, 0.3, 0.7};
  CHECK_THROWS_AS(weak.check(false), ConstructionError);

  CoefficientSet cx = CoefficientSet::constants(g, Z(0.5), Z(-0.3), Z(0.0, 0.9), Z(0.1));
  cx.M_bar = 2.0;
  cx.window = {0.2, 0.8, 0.3, 0.7};
  CHECK_NOTHROW(cx.check(true));
}
