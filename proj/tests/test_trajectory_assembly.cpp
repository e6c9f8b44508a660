#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "returnctrl/errors.hpp"
#include "returnctrl/trajectory.hpp"

using namespace returnctrl;

namespace {

BumpConfig config_for(TrajectoryKind kind) {
  BumpConfig cfg;
  cfg.kind = kind;
  return cfg;
}

}  // namespace

TEST_CASE("bump profiles: normalized jets at the matching point") {
  TrajectoryBuilder b(config_for(TrajectoryKind::CubicReal));
  const int power[4] = {0, 2, 3, 4};
  for (int i = 1; i <= 3; ++i) {
    CAPTURE(i);
    const ZJet j = b.bump_profile_jet(i, 0.5);
    for (int k = 0; k < power[i]; ++k) CHECK(std::abs(j.deriv(k)) == 0.0);
    CHECK(j.deriv(power[i]).real() == doctest::Approx(1.0).epsilon(1e-14));
  }
  // On the plateau core the profiles are exactly polynomial.
  CHECK(b.bump_profile_jet(1, 0.51).value().real() ==
        doctest::Approx(0.01 * 0.01 / 2.0).epsilon(1e-14));
  CHECK(b.bump_profile_jet(2, 0.49).value().real() ==
        doctest::Approx(-0.01 * 0.01 * 0.01 / 6.0).epsilon(1e-14));
  // Zero outside the support band [1/2 - delta/2, 1/2 + delta/2].
  CHECK(std::abs(b.bump_profile_jet(1, 0.40).value()) == 0.0);
  CHECK(std::abs(b.bump_profile_jet(3, 0.60).value()) == 0.0);
  const auto profiles = build_bump_profiles(0.05, TrajectoryKind::QuadraticComplex);
  CHECK(profiles.size() == 2);
  CHECK(std::abs(profiles[0](0.40)) == 0.0);
  CHECK(profiles[1](0.51).real() == doctest::Approx(0.01 * 0.01 * 0.01 / 6.0).epsilon(1e-12));
}

TEST_CASE("time profiles: endpoint values and first coefficients") {
  TrajectoryBuilder b(config_for(TrajectoryKind::CubicReal));
  CHECK(b.bump_epsilon() == doctest::Approx(0.5));
  CHECK(b.rho() == doctest::Approx(0.36).epsilon(1e-14));
  CHECK(b.lambda(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(b.lambda(1.0) == 0.0);
  CHECK(b.lambda(-1.0) == 0.0);
  CHECK(b.time_jet(0, 0.0).value().real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  // lambda lambda' and f0' vanish at t = 0, so f1(0) = f2(0) = 0.
  CHECK(std::abs(b.time_jet(1, 0.0).value()) == 0.0);
  CHECK(std::abs(b.time_jet(2, 0.0).value()) == 0.0);
  CHECK(b.time_jet(3, 0.0).value().real() == doctest::Approx(-0.10799916876972221).epsilon(1e-9));

  // f1 against its closed form at a generic time.
  const double t = 0.5, w = 1.0 - t * t, eps = b.bump_epsilon();
  const double lam = eps * w * w;
  const double laml = -4.0 * eps * eps * t * w * w * w;
  const double f0 = std::exp(-1.0 / w);
  const double f0d = f0 * (-2.0 * t / (w * w));
  const ZJet g0j = b.radial().jet(0.5);
  const Z want = Z(-0.5 * laml * f0) * g0j.deriv(1) + Z(lam * lam * f0d) * g0j.value();
  CHECK(std::abs(b.time_jet(1, t).value() - want) <= 1e-13);

  // Sampled views agree with the jet closures; the sampled route estimates
  // g0 derivatives at 1/2 by interpolation, so the tolerance is looser.
  const auto profiles = build_time_profiles(b.config(), b.radial().sampled());
  CHECK(profiles.size() == 5);
  CHECK(profiles[0].name() == "lambda");
  for (double tt : {-0.6, 0.0, 0.25, 0.9}) {
    CAPTURE(tt);
    CHECK(std::abs(profiles[0](tt) - Z(b.lambda(tt))) <= 1e-12);
    CHECK(std::abs(profiles[1](tt) - b.time_jet(0, tt).value()) <= 1e-12);
    for (int i = 1; i < 4; ++i)
      CHECK(std::abs(profiles[std::size_t(i + 1)](tt) - b.time_jet(i, tt).value()) <= 1e-6);
  }
}

TEST_CASE("script-V matches the closed form on the axis") {
  for (auto kind : {TrajectoryKind::CubicReal, TrajectoryKind::QuadraticComplex}) {
    CAPTURE(int(kind));
    TrajectoryBuilder b(config_for(kind));
    const double eps = b.bump_epsilon();
    for (double t : {0.0, 0.3, 0.7, -0.9}) {
      CAPTURE(t);
      const double w = 1.0 - t * t;
      const double f0 = std::exp(-1.0 / w);
      const double want = -2.0 / (eps * eps * w * w * w * w) * f0 + 2.0 * t / (w * w) * f0;
      const double lam = b.lambda(t);
      const double got = (b.calV(t, 0.0).value() / Z(lam * lam)).real();
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("script-V vanishes to the core order at the matching point") {
  // The f_i recursion exists to cancel V and its first core_power - 1
  // z-derivatives at z = 1/2, so K = (-V/lambda^2)^(1/p) stays smooth there.
  for (auto kind : {TrajectoryKind::CubicReal, TrajectoryKind::QuadraticComplex}) {
    CAPTURE(int(kind));
    TrajectoryBuilder b(config_for(kind));
    double maxV = 0.0;
    for (int it = 0; it <= 20; ++it)
      maxV = std::max(maxV, std::abs(b.calV(-0.95 + 1.9 * it / 20.0, 0.52).value()));
    REQUIRE(maxV > 1e-3);
    for (double t : {0.1, 0.5, -0.8}) {
      CAPTURE(t);
      const ZJet V = b.calV(t, 0.5);
      for (int k = 0; k < b.core_power(); ++k) CHECK(std::abs(V.deriv(k)) <= 1e-10 * maxV);
    }
    // The core-order derivative itself is genuinely nonzero.
    CHECK(std::abs(b.calV(0.1, 0.5).deriv(b.core_power())) > 1e-3);
  }
}

TEST_CASE("remainder domination fixes the default amplitude and rejects large ones") {
  TrajectoryBuilder b(config_for(TrajectoryKind::CubicReal));
  CHECK(b.bump_epsilon() == doctest::Approx(0.5));
  BumpConfig bad = config_for(TrajectoryKind::CubicReal);
  bad.bump_epsilon = 1.9;
  CHECK_THROWS_AS(TrajectoryBuilder{bad}, ConstructionError);
}

TEST_CASE("off-band amplitude dominates half the source at small epsilon") {
  for (auto kind : {TrajectoryKind::CubicReal, TrajectoryKind::QuadraticComplex}) {
    CAPTURE(int(kind));
    BumpConfig cfg = config_for(kind);
    cfg.bump_epsilon = 2e-3;
    TrajectoryBuilder b(cfg);
    double worst = 1e300;
    for (int it = 0; it <= 15; ++it) {
      const double t = -0.98 + 1.96 * it / 15.0;
      for (int iz = 1; iz < 200; ++iz) {
        const double z = iz / 200.0;
        if (std::abs(z - 0.5) < cfg.delta / 2) continue;
        const double Gv = std::abs(b.radial().source()(z));
        if (Gv == 0.0) continue;
        worst = std::min(worst, std::abs(b.A_value(t, z)) / Gv);
      }
    }
    CHECK(worst > 0.5);
  }
}

TEST_CASE("K satisfies K^p = -V/lambda^2 and has no branch jumps") {
  for (auto kind : {TrajectoryKind::CubicReal, TrajectoryKind::QuadraticComplex}) {
    CAPTURE(int(kind));
    TrajectoryBuilder b(config_for(kind));
    const int p = b.core_power();
    for (double t : {0.3, -0.3, 0.8, -0.8}) {
      CAPTURE(t);
      const double lam = b.lambda(t);
      for (double z : {0.05, 0.3, 0.49, 0.5, 0.51, 0.7, 0.95}) {
        CAPTURE(z);
        const Z K = b.K_ref(t, z * lam);
        Z Kp(1.0);
        for (int k = 0; k < p; ++k) Kp *= K;
        const Z want = -b.calV(t, z).value() / Z(lam * lam);
        CHECK(std::abs(Kp - want) <= 1e-11 * (1.0 + std::abs(want)));
        if (kind == TrajectoryKind::CubicReal) CHECK(K.imag() == 0.0);
      }
      // Continuity scan: the largest step difference must shrink with the
      // sampling step (a branch-cut jump would not).  K is only Holder-1/p
      // where V crosses zero off the band, so halving the step contracts the
      // worst difference by about 2^(-1/p), not 1/2.
      auto maxjump = [&](int n) {
        Z prev = b.K_ref(t, 0.01 * lam);
        double m = 0.0;
        for (int i = 1; i <= n; ++i) {
          const double z = 0.01 + 0.98 * double(i) / double(n);
          const Z cur = b.K_ref(t, z * lam);
          m = std::max(m, std::abs(cur - prev));
          prev = cur;
        }
        return m;
      };
      const double coarse = maxjump(2000);
      CHECK(maxjump(4000) <= 0.9 * coarse);
      CHECK(maxjump(16000) <= 0.5 * coarse);
    }
  }
}

TEST_CASE("assembled fields are supported exactly in the configured box") {
  SpaceTimeGrid grid;
  grid.nx = 160;
  grid.nt = 200;
  const Coupling g = Coupling::linear_v();
  const ReferenceTrajectory traj = assemble_trajectory(config_for(TrajectoryKind::CubicReal), grid, g);
  const SupportBox& box = traj.support;
  CHECK(box.t_lo > 0.0);
  CHECK(box.t_hi < grid.T);
  CHECK(box.x_lo > traj.config.omega_lo);
  CHECK(box.x_hi < traj.config.omega_hi);
  double inside = 0.0;
  for (int n = 0; n <= grid.nt; ++n)
    for (int i = 0; i < grid.nx; ++i) {
      const double t = grid.t(n), x = grid.x(i);
      const double a = std::abs(traj.u_bar.at(n, i)) + std::abs(traj.v_bar.at(n, i)) +
                       std::abs(traj.h_bar.at(n, i));
      if (box.contains(t, x))
        inside = std::max(inside, a);
      else
        CHECK(a == 0.0);
    }
  CHECK(inside > 1.0);
}

TEST_CASE("defect certificate: default configurations") {
  SpaceTimeGrid grid;
  grid.nx = 200;
  grid.nt = 400;
  const Coupling g = Coupling::linear_v();
  for (auto kind : {TrajectoryKind::CubicReal, TrajectoryKind::QuadraticComplex}) {
    CAPTURE(int(kind));
    const ReferenceTrajectory traj = assemble_trajectory(config_for(kind), grid, g);
    const VerifyReport rep = verify_trajectory(traj, g);
    CHECK(rep.defect_u_max == 0.0);
    CHECK(rep.defect_v_max <= 1e-6);
    CHECK(rep.defect_v_l2 <= rep.defect_v_max);
    REQUIRE(rep.refinement.size() == 2);
    CHECK(rep.order >= 2.0);
  }
}

TEST_CASE("defect certificate: reaction term and higher dimension") {
  SpaceTimeGrid grid;
  grid.nx = 200;
  grid.nt = 400;
  const Coupling g = Coupling::linear_v();
  for (int mode = 0; mode < 2; ++mode) {
    CAPTURE(mode);
    BumpConfig cfg = config_for(mode == 0 ? TrajectoryKind::CubicReal
                                          : TrajectoryKind::QuadraticComplex);
    if (mode == 0) cfg.reaction = 0.7;
    if (mode == 1) {
      cfg.dim = 2;
      cfg.reaction = -0.4;
    }
    const ReferenceTrajectory traj = assemble_trajectory(cfg, grid, g);
    const VerifyReport rep = verify_trajectory(traj, g);
    CHECK(rep.defect_u_max == 0.0);
    CHECK(rep.defect_v_max <= 1e-6);
  }
}

TEST_CASE("frozen point values of the assembled trajectory") {
  {
    TrajectoryBuilder b(config_for(TrajectoryKind::CubicReal));
    CHECK(b.v_bar(0.5, 0.5).real() == doctest::Approx(0.36787944117129806).epsilon(1e-10));
    CHECK(b.u_bar(0.5, 0.5).real() == doctest::Approx(2.8318060233748898).epsilon(1e-10));
    CHECK(b.u_bar(0.51, 0.52).real() == doctest::Approx(3.9696470306888441).epsilon(1e-10));
    CHECK(b.v_bar(0.51, 0.52).real() == doctest::Approx(0.36005867644228778).epsilon(1e-10));
    CHECK(std::abs(b.radial().g0(0.0) - Z(1.0)) <= 1e-10);  // g0 = 1 - z^2 near 0
  }
  {
    TrajectoryBuilder b(config_for(TrajectoryKind::QuadraticComplex));
    CHECK(b.u_bar(0.5, 0.5).real() == doctest::Approx(-4.7653549164483708).epsilon(1e-10));
    CHECK(b.u_bar(0.51, 0.52).real() == doctest::Approx(-7.9164942023776774).epsilon(1e-10));
    CHECK(b.v_bar(0.51, 0.52).real() == doctest::Approx(0.36005545287871155).epsilon(1e-10));
  }
}

TEST_CASE("zero amplitude gives the zero trajectory") {
  SpaceTimeGrid grid;
  grid.nx = 80;
  grid.nt = 100;
  BumpConfig cfg = config_for(TrajectoryKind::CubicReal);
  cfg.bump_epsilon = 0.0;
  const Coupling g = Coupling::linear_v();
  const ReferenceTrajectory traj = assemble_trajectory(cfg, grid, g);
  CHECK(traj.u_bar.max_abs() == 0.0);
  CHECK(traj.v_bar.max_abs() == 0.0);
  CHECK(traj.h_bar.max_abs() == 0.0);
  const VerifyReport rep = verify_trajectory(traj, g);
  CHECK(rep.defect_v_max == 0.0);
}

TEST_CASE("invalid configurations are rejected") {
  SpaceTimeGrid grid;
  grid.nx = 80;
  grid.nt = 100;
  const Coupling g = Coupling::linear_v();

  BumpConfig wide = config_for(TrajectoryKind::CubicReal);
  wide.rho_radius = 0.9;  // support box would stick out of (0, T)
  CHECK_THROWS_AS(assemble_trajectory(wide, grid, g), GeometryError);

  BumpConfig bad_delta = config_for(TrajectoryKind::CubicReal);
  bad_delta.delta = 0.2;
  CHECK_THROWS_AS(bad_delta.validate(), ConfigError);

  BumpConfig off_center = config_for(TrajectoryKind::CubicReal);
  off_center.center_x = 0.99;  // outside omega
  CHECK_THROWS_AS(off_center.validate(), ConfigError);
}
