#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "returnctrl/errors.hpp"
#include "returnctrl/hum.hpp"
#include "returnctrl/linalg.hpp"
#include "returnctrl/rng.hpp"

using namespace returnctrl;

namespace {

SpaceTimeGrid make_grid(int nx, int nt, double theta = 0.5) {
  SpaceTimeGrid g;
  g.nx = nx;
  g.nt = nt;
  g.theta = theta;
  return g;
}

std::vector<Z> random_vec(int n, Rng& rng) {
  std::vector<Z> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.normal_complex();
  return v;
}

}  // namespace

TEST_CASE("carleman weights: shape and failure modes") {
  const SpaceTimeGrid g = make_grid(50, 80);
  const CarlemanWeight w = build_weights(g, 0.05, 0.45, 0.55);

  // eta is the unclamped 1/(sigma (delta - sigma)) in the bulk of the window.
  const double delta = 0.5;
  CHECK(w.eta(0.25, delta) == doctest::Approx(1.0 / (0.25 * 0.25)).epsilon(1e-14));
  // Clamped at the ends: finite and equal to the kappa-level value.
  CHECK(w.eta(0.0, delta) == doctest::Approx(w.eta(w.kappa * delta, delta)).epsilon(1e-14));

  // rho is positive, of size e^4 - e^{mu psi} in [e^4 - e^2, e^4 - 1].
  for (int i = 0; i <= 100; ++i) {
    const double x = 0.005 + 0.99 * i / 100.0;
    const double r = w.rho(x);
    CHECK(r > std::exp(4.0) - std::exp(2.0) - 1e-9);
    CHECK(r < std::exp(4.0) - 1.0 + 1e-9);
  }
  // The control weight is positive and decays toward the window ends.
  const double mid = w.control_weight(0.5, 0.25, delta);
  const double end = w.control_weight(0.5, 0.01, delta);
  CHECK(mid > 0.0);
  CHECK(end < mid);

  CHECK_THROWS_AS(build_weights(g, -1.0, 0.45, 0.55), ConfigError);
  CHECK_THROWS_AS(build_weights(g, 0.05, -0.1, 0.55), GeometryError);
  CHECK_THROWS_AS(build_weights(g, 0.05, 0.55, 0.45), GeometryError);
}

TEST_CASE("penalized control: zero data gives the zero control") {
  const SpaceTimeGrid g = make_grid(12, 16);
  const CoefficientSet c = CoefficientSet::constants(g, Z(0.1), Z(1.0), Z(0.8), Z(-0.2));
  const CarlemanWeight w = build_weights(g, 0.05, 0.4, 0.6);
  const std::vector<Z> zero(std::size_t(g.nx), Z{});
  const ControlResult r =
      solve_penalized_control(g, c, zero, zero, w, 1e-3, 0.25, 0.75, 0.3, 0.7, false);
  CHECK(r.cg_iterations == 0);
  CHECK(r.h.max_abs() == 0.0);
  CHECK(r.zeta.max_abs() == 0.0);
  CHECK(r.terminal_norm == 0.0);
}

TEST_CASE("penalized control: support and terminal-norm bookkeeping") {
  const SpaceTimeGrid g = make_grid(25, 40);
  const CoefficientSet c = CoefficientSet::constants(g, Z(0.1), Z(1.0), Z(0.8), Z(-0.2));
  const CarlemanWeight w = build_weights(g, 0.05, 0.4, 0.6);
  std::vector<Z> a1(std::size_t(g.nx)), a2(std::size_t(g.nx));
  for (int i = 0; i < g.nx; ++i) {
    a1[std::size_t(i)] = std::sin(M_PI * g.x(i));
    a2[std::size_t(i)] = 0.5 * std::sin(2.0 * M_PI * g.x(i));
  }
  const double t1 = 0.25, t2 = 0.75, olo = 0.3, ohi = 0.7;
  const ControlResult r = solve_penalized_control(g, c, a1, a2, w, 1e-9, t1, t2, olo, ohi, false);

  // The control lives on steps inside (t1, t2] and nodes inside omega only.
  const auto [w0, w1] = g.node_range(olo, ohi);
  const int n1 = int(std::lround(t1 / g.dt())), n2 = int(std::lround(t2 / g.dt()));
  bool inside_nonzero = false;
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      const double v = std::abs(r.h.at(n, i));
      if (n > n1 && n <= n2 && i >= w0 && i < w1)
        inside_nonzero = inside_nonzero || v > 0.0;
      else
        CHECK(v == 0.0);
    }
  CHECK(inside_nonzero);
  CHECK(r.terminal_norm == doctest::Approx(r.zeta.slice_norm(g.nt)).epsilon(1e-14));
  CHECK(r.sup_norm == doctest::Approx(r.h.max_abs()).epsilon(1e-14));
  // Controlled terminal norm is below the free-evolution terminal norm.
  const ControlResult free_run =
      solve_penalized_control(g, c, a1, a2, w, 1e12, t1, t2, olo, ohi, false);
  CHECK(r.terminal_norm < 0.5 * free_run.terminal_norm);
}

TEST_CASE("dual gramian: dense oracle, hermitian psd, cg agreement, gradient") {
  const SpaceTimeGrid g = make_grid(12, 16);
  Rng rng(0x1234abcdULL);
  CoefficientSet c = CoefficientSet::constants(g, Z{}, Z{}, Z{}, Z{});
  ComplexField* all[] = {&c.a11, &c.a12, &c.a21, &c.a22};
  for (auto* f : all)
    for (auto& v : f->data()) v = 0.5 * rng.normal_complex();
  const CarlemanWeight w = build_weights(g, 0.05, 0.4, 0.6);
  const double eps = 1e-3;
  const HumSystem sys(g, c, w, 0.25, 0.75, 0.3, 0.7, true);
  const int d = sys.dim();

  const std::vector<Z> A = sys.dense_matrix(eps);
  const std::vector<Z> As = sys.dense_matrix_serial(eps);
  REQUIRE(int(A.size()) == d * d);
  for (std::size_t k = 0; k < A.size(); ++k) CHECK(A[k] == As[k]);  // bitwise

  double scale = 0.0;
  for (const Z& v : A) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(std::abs(A[std::size_t(i) * d + j] - std::conj(A[std::size_t(j) * d + i])) <=
            1e-12 * scale);

  // apply() matches the dense matrix and the quadratic form is PSD.
  for (int rep = 0; rep < 10; ++rep) {
    const std::vector<Z> phi = random_vec(d, rng);
    const std::vector<Z> y = sys.apply(phi, eps);
    std::vector<Z> yd(std::size_t(d), Z{});
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) yd[std::size_t(i)] += A[std::size_t(i) * d + j] * phi[std::size_t(j)];
    double err = 0.0, nrm = 0.0;
    for (int i = 0; i < d; ++i) {
      err = std::max(err, std::abs(y[std::size_t(i)] - yd[std::size_t(i)]));
      nrm = std::max(nrm, std::abs(yd[std::size_t(i)]));
    }
    CHECK(err <= 1e-12 * std::max(nrm, 1.0));
    const Z q = sys.inner(y, phi);
    CHECK(q.real() >= -1e-12 * std::abs(sys.inner(phi, phi)));
    CHECK(std::abs(q.imag()) <= 1e-12 * std::max(std::abs(q.real()), 1.0));
  }

  // CG solves the dense system to 1e-8 relative accuracy.
  const std::vector<Z> rhs = random_vec(d, rng);
  int iters = 0;
  double res = 0.0;
  CgOptions opt;
  opt.tol = 1e-12;
  const std::vector<Z> xc = cg_solve(sys, rhs, eps, opt, &iters, &res, nullptr);
  const std::vector<Z> xd = dense_solve(A, rhs);
  double err = 0.0, nrm = 0.0;
  for (int i = 0; i < d; ++i) {
    err += std::norm(xc[std::size_t(i)] - xd[std::size_t(i)]);
    nrm += std::norm(xd[std::size_t(i)]);
  }
  CHECK(std::sqrt(err / nrm) <= 1e-8);
  CHECK(iters > 0);
  CHECK(res <= 1e-12);

  // Gradient of the dual objective against central differences.
  const std::vector<Z> phi = random_vec(d, rng);
  const std::vector<Z> b = random_vec(d, rng);
  std::vector<Z> grad = sys.apply(phi, eps);
  for (int i = 0; i < d; ++i) grad[std::size_t(i)] += b[std::size_t(i)];
  Rng rng2(0x777ULL);
  for (int rep = 0; rep < 5; ++rep) {
    const std::vector<Z> dir = random_vec(d, rng2);
    const double tau = 1e-5;
    std::vector<Z> p(phi), m(phi);
    for (int i = 0; i < d; ++i) {
      p[std::size_t(i)] += tau * dir[std::size_t(i)];
      m[std::size_t(i)] -= tau * dir[std::size_t(i)];
    }
    const double fd = (sys.objective(p, b, eps) - sys.objective(m, b, eps)) / (2.0 * tau);
    const double an = sys.inner(grad, dir).real();
    CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("cg: iteration cap raises ConvergenceError with history") {
  const SpaceTimeGrid g = make_grid(12, 16);
  const CoefficientSet c = CoefficientSet::constants(g, Z(0.1), Z(1.0), Z(0.8), Z(-0.2));
  const CarlemanWeight w = build_weights(g, 0.05, 0.4, 0.6);
  const HumSystem sys(g, c, w, 0.25, 0.75, 0.3, 0.7, false);
  Rng rng(5ULL);
  const std::vector<Z> rhs = random_vec(sys.dim(), rng);
  CgOptions opt;
  opt.tol = 1e-14;
  opt.max_iter = 2;
  try {
    cg_solve(sys, rhs, 1e-6, opt, nullptr, nullptr, nullptr);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual_history.size() >= 1);
  }
}

TEST_CASE("weights: overflow guard rejects an oversized carleman parameter") {
  const SpaceTimeGrid g = make_grid(50, 80);
  const CarlemanWeight w = build_weights(g, 5.0, 0.45, 0.55);
  const CoefficientSet c = CoefficientSet::constants(g, Z{}, Z(1.0), Z(1.0), Z{});
  CHECK_THROWS_AS(HumSystem(g, c, w, 0.25, 0.75, 0.3, 0.7, false), ConfigError);
}

TEST_CASE("observability: stable for coupled coefficients, divergent without coupling") {
  const SpaceTimeGrid g = make_grid(50, 80);
  const CoefficientSet coupled = CoefficientSet::constants(g, Z{}, Z(1.0), Z(5.0), Z{});

  const ObservabilityStats s64 = estimate_observability(g, coupled, 0.3, 0.7, 64, 42);
  const ObservabilityStats s128 = estimate_observability(g, coupled, 0.3, 0.7, 128, 42);
  CHECK(!s64.divergent);
  CHECK(!s128.divergent);
  CHECK(s64.max_ratio > 0.0);
  // Samples are a prefix sequence, so the max can only grow with more
  // samples; stability means it grows by less than 10 percent.
  CHECK(s128.max_ratio >= s64.max_ratio);
  CHECK(s128.max_ratio <= 1.1 * s64.max_ratio);

  // The parallel estimate matches the serial reference exactly.
  const ObservabilityStats ser = estimate_observability_serial(g, coupled, 0.3, 0.7, 64, 42);
  REQUIRE(ser.ratios.size() == s64.ratios.size());
  for (std::size_t i = 0; i < ser.ratios.size(); ++i) CHECK(ser.ratios[i] == s64.ratios[i]);

  // a21 = 0 decouples the second adjoint component from the observation.
  const CoefficientSet decoupled = CoefficientSet::constants(g, Z{}, Z(1.0), Z{}, Z{});
  const ObservabilityStats bad = estimate_observability(g, decoupled, 0.3, 0.7, 64, 42);
  CHECK(bad.divergent);
}
