#include "returnctrl/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "returnctrl/bumps.hpp"
#include "returnctrl/errors.hpp"
#include "returnctrl/jet_ops.hpp"

namespace returnctrl {

namespace {

using TJ = Jet<Z, 8>;
using J10 = Jet<Z, 10>;

constexpr int kBumpPower[4] = {0, 2, 3, 4};  // j_i for g_i

// Square root continuous on the complement of the nonpositive imaginary axis.
// The argument w = -lambda^-2 V stays off that ray by the sign conditions on
// G (w would touch it only where A = V/f0 meets the nonnegative imaginary
// axis, which the construction rules out).
Z sqrt_cut(Z w) {
  double th = std::atan2(w.imag(), w.real());
  if (th < -M_PI / 2) th += 2.0 * M_PI;  // branch cut along -i*[0,inf)
  const double m = std::sqrt(std::abs(w));
  return Z(m * std::cos(0.5 * th), m * std::sin(0.5 * th));
}

template <int M>
Jet<Z, M> bump_profile_jet_impl(int i, double z, double delta) {
  const int j = kBumpPower[i];
  Jet<Z, M> u;
  u.c[0] = Z(z - 0.5);
  u.c[1] = Z(1.0);
  return pow_int(u, j) *
         (Z(1.0 / detail::factorial(j)) * plateau_jet<Jet<Z, M>>(z, 0.5, delta / 4, delta / 2));
}

double bump_profile_value(int i, double z, double delta) {
  const int j = kBumpPower[i];
  double p = 1.0;
  for (int k = 0; k < j; ++k) p *= z - 0.5;
  return p / detail::factorial(j) * plateau_value(z, 0.5, delta / 4, delta / 2);
}

// Extended-precision evaluation of v_bar for the defect oracle.  The finite
// differences divide cancellation noise by h^2, so with double evaluation the
// achievable floor sits near 1e-5; long double buys three more digits.  The
// radial solution g0 is the one quadrature-backed ingredient: it enters
// through its local Taylor expansion (coefficients from the jet recursion,
// exact derivatives at the expansion point), which the stencil offsets of a
// few 1e-3 in z keep well inside the convergence range.
using LR = long double;
using LC = std::complex<long double>;

class LongEval {
 public:
  explicit LongEval(const TrajectoryBuilder& b)
      : g0_(&b.radial()),
        eps_(LR(b.bump_epsilon())),
        rho_(LR(b.rho())),
        delta_(LR(b.config().delta)),
        center_t_(LR(b.config().center_t)),
        center_x_(LR(b.config().center_x)),
        reaction_(LR(b.config().reaction)),
        n1_(LR(2.0 * double(b.config().dim - 1))),
        nb_(b.config().kind == TrajectoryKind::CubicReal ? 3 : 2) {
    const ZJet j = g0_->jet(0.5);
    for (int k = 0; k < 4; ++k)
      g0h_[std::size_t(k)] = LC(LR(j.deriv(k).real()), LR(j.deriv(k).imag()));
  }

  struct G0Local {
    LR z0 = 0;
    std::array<LC, 9> c{};
    LC eval(LR z) const {
      const LR s = z - z0;
      LC acc = c[8];
      for (int k = 7; k >= 0; --k) acc = acc * s + c[std::size_t(k)];
      return acc;
    }
  };

  G0Local local(double z0) const {
    G0Local L;
    L.z0 = LR(z0);
    const ZJet j = g0_->jet(z0);
    for (int k = 0; k <= 8; ++k)
      L.c[std::size_t(k)] = LC(LR(j.c[std::size_t(k)].real()), LR(j.c[std::size_t(k)].imag()));
    return L;
  }

  LC v_bar(LR t, LR x, const G0Local& loc) const {
    const LR dt = t - center_t_;
    const LR tau = dt / (rho_ * rho_);
    if (std::abs(tau) >= LR(1) || eps_ == LR(0)) return LC{};
    const Slice s = slice(tau);
    if (!(s.lam > LR(0))) return LC{};
    const LR z = std::abs(x - center_x_) / (rho_ * s.lam);
    if (z >= LR(1)) return LC{};
    LC v = s.f[0] * loc.eval(z);
    if (std::abs(z - LR(0.5)) < delta_ / 2)
      for (int i = 1; i <= nb_; ++i) v += s.f[std::size_t(i)] * bump(i, z);
    return std::exp(reaction_ * dt) * v;
  }

 private:
  using J8 = Jet<LC, 8>;

  struct Slice {
    LR lam = 0;
    std::array<LC, 4> f{};
  };

  Slice slice(LR tau) const {
    Slice s;
    const J8 tj = J8::variable(LC(tau));
    const J8 one_m = LC(1) - tj * tj;
    const J8 lam = LC(eps_) * one_m * one_m;
    const J8 f0 = cutoff_exp_jet<J8>(tau);
    const J8 laml = lam * jet_derivative(lam);
    const J8 lam2 = lam * lam;
    const J8 f0d = jet_derivative(f0);
    const J8 f1 = LC(-0.5L) * laml * f0 * g0h_[1] + lam2 * f0d * g0h_[0];
    const J8 f2 = -(f1 * (LC(n1_) + LC(0.5L) * laml) + LC(0.5L) * laml * f0 * g0h_[2] +
                    (laml * f0 - lam2 * f0d) * g0h_[1]);
    s.lam = lam.value().real();
    s.f[0] = f0.value();
    s.f[1] = f1.value();
    s.f[2] = f2.value();
    if (nb_ == 3)
      s.f[3] = -((LC(n1_) + LC(0.5L) * laml) * f2 + (LC(2.0L) * laml - LC(4.0L * n1_)) * f1 -
                 lam2 * jet_derivative(f1) + LC(0.5L) * laml * f0 * g0h_[3] +
                 (LC(2.0L) * laml * f0 - lam2 * f0d) * g0h_[2])
                    .value();
    return s;
  }

  LR bump(int i, LR z) const {
    const int j = kBumpPower[i];
    LR p = LR(1);
    for (int k = 0; k < j; ++k) p *= z - LR(0.5);
    return p / LR(detail::factorial(j)) * plateau_value(z, LR(0.5), delta_ / 4, delta_ / 2);
  }

  const RadialSolution* g0_;
  LR eps_, rho_, delta_, center_t_, center_x_, reaction_, n1_;
  int nb_;
  std::array<LC, 4> g0h_{};
};

// 8th-order central finite-difference stencils; f takes the integer offset.
template <class F>
LC fd_d1(F&& f, LR h) {
  return (LC(4.0L / 5) * (f(1) - f(-1)) - LC(1.0L / 5) * (f(2) - f(-2)) +
          LC(4.0L / 105) * (f(3) - f(-3)) - LC(1.0L / 280) * (f(4) - f(-4))) /
         LC(h);
}
template <class F>
LC fd_d2(F&& f, LR h) {
  return (LC(-205.0L / 72) * f(0) + LC(8.0L / 5) * (f(1) + f(-1)) -
          LC(1.0L / 5) * (f(2) + f(-2)) + LC(8.0L / 315) * (f(3) + f(-3)) -
          LC(1.0L / 560) * (f(4) + f(-4))) /
         LC(h * h);
}

}  // namespace

Coupling Coupling::linear_v() {
  Coupling c;
  c.g = [](Z, Z v) { return v; };
  c.dg_du = [](Z, Z) { return Z(0.0); };
  c.dg_dv = [](Z, Z) { return Z(1.0); };
  return c;
}

Coupling Coupling::zero() {
  Coupling c;
  c.g = [](Z, Z) { return Z(0.0); };
  c.dg_du = [](Z, Z) { return Z(0.0); };
  c.dg_dv = [](Z, Z) { return Z(0.0); };
  return c;
}

void BumpConfig::validate() const {
  if (dim < 1) throw ConfigError("trajectory: dim must be >= 1");
  if (!(delta > 0.0 && delta < 0.1))
    throw ConfigError("trajectory: delta must lie in (0, 1/10)");
  if (!(center_t > 0.0)) throw ConfigError("trajectory: center_t must be positive");
  if (!(omega_lo < center_x && center_x < omega_hi))
    throw ConfigError("trajectory: center_x must lie inside (omega_lo, omega_hi)");
  if (rho_radius > 1.0)
    throw ConfigError("trajectory: rho_radius must be <= 1 (support-box guarantee)");
  if (rho_radius == 0.0) throw ConfigError("trajectory: rho_radius must be nonzero");
  if (bump_epsilon > 0.0 && bump_epsilon > 2.0)
    throw ConfigError("trajectory: bump_epsilon out of range");
  if (z_grid_n < 65 || t_grid_n < 65) throw ConfigError("trajectory: grid resolutions too small");
}

double BumpConfig::resolved_rho() const {
  if (rho_radius > 0.0) return rho_radius;
  // The time half-width of the support box is rho^2 and the space half-width
  // is rho * bump_epsilon <= rho / 2, so this keeps the box inside
  // (0, T) x omega with a 20% margin on either constraint.
  const double dist = std::min(center_x - omega_lo, omega_hi - center_x);
  return 0.4 * std::min(std::sqrt(2.0 * center_t), 2.0 * dist);
}

TrajectoryBuilder::TrajectoryBuilder(const BumpConfig& cfg)
    : cfg_(cfg),
      G_((cfg.validate(), cfg.dim), cfg.delta, cfg.kind, cfg.z_grid_n),
      g0_(G_, cfg.z_grid_n) {
  const ZJet j = g0_.jet(0.5);
  for (int k = 0; k < 4; ++k) g0_half_[std::size_t(k)] = j.deriv(k);
  rho_ = cfg_.resolved_rho();
  cfg_.rho_radius = rho_;

  if (cfg_.bump_epsilon == 0.0) {
    eps_ = 0.0;  // zero trajectory (small-amplitude limit)
  } else if (cfg_.bump_epsilon < 0.0) {
    // Largest epsilon <= 0.5 passing the remainder-domination check, by
    // bisection on the pass/fail boundary.
    double hi = 0.5;
    if (dominates(hi)) {
      eps_ = hi;
    } else {
      double lo = hi / 2;
      while (lo > 1e-8 && !dominates(lo)) lo /= 2;
      if (lo <= 1e-8)
        throw ConstructionError("trajectory: no admissible bump_epsilon found");
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dominates(mid) ? lo : hi) = mid;
      }
      eps_ = lo;
    }
  } else {
    eps_ = cfg_.bump_epsilon;
    if (!dominates(eps_))
      throw ConstructionError(
          "trajectory: remainder domination fails at bump_epsilon=" + std::to_string(eps_) +
          "; decrease bump_epsilon");
  }
  cfg_.bump_epsilon = eps_;
}

double TrajectoryBuilder::lambda(double t) const {
  if (std::abs(t) >= 1.0) return 0.0;
  const double w = 1.0 - t * t;
  return eps_ * w * w;
}

TrajectoryBuilder::TimeSlice TrajectoryBuilder::time_slice(double t) const {
  TimeSlice s;
  if (std::abs(t) >= 1.0 || eps_ == 0.0) return s;
  const TJ tj = TJ::variable(Z(t));
  const TJ one_m = Z(1.0) - tj * tj;
  const TJ lam = Z(eps_) * one_m * one_m;
  const TJ f0 = cutoff_exp_jet<TJ>(t);
  const TJ laml = lam * jet_derivative(lam);
  const TJ lam2 = lam * lam;
  const TJ f0d = jet_derivative(f0);
  const Z g0v = g0_half_[0], g0p = g0_half_[1], g0pp = g0_half_[2], g0ppp = g0_half_[3];
  const double n1 = 2.0 * double(cfg_.dim - 1);

  const TJ f1 = Z(-0.5) * laml * f0 * g0p + lam2 * f0d * g0v;
  const TJ f1d = jet_derivative(f1);
  const TJ f2 = -(f1 * (Z(n1) + Z(0.5) * laml) + Z(0.5) * laml * f0 * g0pp +
                  (laml * f0 - lam2 * f0d) * g0p);
  TJ f3{};
  if (cfg_.kind == TrajectoryKind::CubicReal)
    f3 = -((Z(n1) + Z(0.5) * laml) * f2 + (Z(2.0) * laml - Z(4.0 * n1)) * f1 - lam2 * f1d +
           Z(0.5) * laml * f0 * g0ppp + (Z(2.0) * laml * f0 - lam2 * f0d) * g0pp);

  s.lam = lam.value().real();
  s.laml = laml.value();
  s.lam2 = lam2.value();
  const TJ* fj[4] = {&f0, &f1, &f2, &f3};
  for (int i = 0; i < 4; ++i) {
    s.f[std::size_t(i)] = fj[i]->value();
    s.fdot[std::size_t(i)] = fj[i]->deriv(1);
  }
  return s;
}

Jet<Z, 8> TrajectoryBuilder::time_jet(int i, double t) const {
  if (std::abs(t) >= 1.0 || eps_ == 0.0) return TJ{};
  const TJ tj = TJ::variable(Z(t));
  const TJ one_m = Z(1.0) - tj * tj;
  const TJ lam = Z(eps_) * one_m * one_m;
  const TJ f0 = cutoff_exp_jet<TJ>(t);
  if (i == 0) return f0;
  const TJ laml = lam * jet_derivative(lam);
  const TJ lam2 = lam * lam;
  const TJ f0d = jet_derivative(f0);
  const double n1 = 2.0 * double(cfg_.dim - 1);
  const TJ f1 =
      Z(-0.5) * laml * f0 * g0_half_[1] + lam2 * f0d * g0_half_[0];
  if (i == 1) return f1;
  const TJ f2 = -(f1 * (Z(n1) + Z(0.5) * laml) + Z(0.5) * laml * f0 * g0_half_[2] +
                  (laml * f0 - lam2 * f0d) * g0_half_[1]);
  if (i == 2) return f2;
  if (cfg_.kind != TrajectoryKind::CubicReal) return TJ{};
  return -((Z(n1) + Z(0.5) * laml) * f2 + (Z(2.0) * laml - Z(4.0 * n1)) * f1 -
           lam2 * jet_derivative(f1) + Z(0.5) * laml * f0 * g0_half_[3] +
           (Z(2.0) * laml * f0 - lam2 * f0d) * g0_half_[2]);
}

ZJet TrajectoryBuilder::bump_profile_jet(int i, double z) const {
  return bump_profile_jet_impl<8>(i, z, cfg_.delta);
}

ZJet TrajectoryBuilder::calV(const TimeSlice& s, double z) const {
  if (z >= 1.0 || s.lam <= 0.0) return ZJet{};
  const ZJet zj = ZJet::variable(Z(z));
  const ZJet g0j = g0_.jet(z);
  const ZJet g0p = jet_derivative(g0j);
  // i = 0: g0'' + (N-1)/z g0' = G exactly, by the ODE.
  ZJet V = s.f[0] * G_.jet(z) + (s.laml * s.f[0]) * (zj * g0p) - (s.lam2 * s.fdot[0]) * g0j;
  const double d = cfg_.delta;
  if (std::abs(z - 0.5) < d / 2) {
    const int nb = (cfg_.kind == TrajectoryKind::CubicReal) ? 3 : 2;
    for (int i = 1; i <= nb; ++i) {
      const J10 gj = bump_profile_jet_impl<10>(i, z, d);
      const ZJet L = radial_operator_jet(gj, z, cfg_.dim);
      const ZJet g8 = jet_truncate<Z, 10, 8>(gj);
      const ZJet gp8 = jet_derivative(g8);
      V = V + s.f[std::size_t(i)] * L + (s.laml * s.f[std::size_t(i)]) * (zj * gp8) -
          (s.lam2 * s.fdot[std::size_t(i)]) * g8;
    }
  }
  return V;
}

ZJet TrajectoryBuilder::calV(double t, double z) const { return calV(time_slice(t), z); }

Z TrajectoryBuilder::A_value(double t, double z) const {
  // A = calV / f0; off the bump band this closed form holds for every t,
  // including where f0 underflows: A = G + z*a*g0' - b*g0 with
  // a = lambda lambda' / f0... = -4 eps^2 t (1-t^2)^3, b = lambda^2 f0'/f0
  // = -2 eps^2 t (1-t^2)^2.
  if (std::abs(t) >= 1.0) return G_(z);
  const double w = 1.0 - t * t;
  const double a = -4.0 * eps_ * eps_ * t * w * w * w;
  const double b = -2.0 * eps_ * eps_ * t * w * w;
  Z A = G_(z) + Z(z * a) * g0_.g0_prime(z) - Z(b) * g0_.g0(z);
  if (std::abs(z - 0.5) < cfg_.delta / 2) {
    // Inside the band, add the bump terms divided by f0 (only meaningful
    // where f0 does not underflow).
    const TimeSlice s = time_slice(t);
    const double f0 = s.f[0].real();
    if (f0 > 0.0) {
      const int nb = (cfg_.kind == TrajectoryKind::CubicReal) ? 3 : 2;
      for (int i = 1; i <= nb; ++i) {
        const J10 gj = bump_profile_jet_impl<10>(i, z, cfg_.delta);
        const ZJet L = radial_operator_jet(gj, z, cfg_.dim);
        A += (s.f[std::size_t(i)] * L.value() +
              s.laml * s.f[std::size_t(i)] * Z(z) * gj.deriv(1) -
              s.lam2 * s.fdot[std::size_t(i)] * gj.value()) /
             Z(f0);
      }
    }
  }
  return A;
}

Z TrajectoryBuilder::V_ref(double t, double r) const {
  if (std::abs(t) >= 1.0 || eps_ == 0.0) return Z{};
  const TimeSlice s = time_slice(t);
  if (s.lam <= 0.0) return Z{};
  const double z = r / s.lam;
  if (z >= 1.0) return Z{};
  Z v = s.f[0] * g0_.g0(z);
  if (std::abs(z - 0.5) < cfg_.delta / 2) {
    const int nb = (cfg_.kind == TrajectoryKind::CubicReal) ? 3 : 2;
    for (int i = 1; i <= nb; ++i)
      v += s.f[std::size_t(i)] * Z(bump_profile_value(i, z, cfg_.delta));
  }
  return v;
}

Z TrajectoryBuilder::K_from_V(double lam, Z V, double z) const {
  // K^p = V_t - Delta V = -lambda^-2 * calV.
  const Z w = -V / Z(lam * lam);
  if (cfg_.kind == TrajectoryKind::CubicReal) return Z(std::cbrt(w.real()));
  const double sigma = (z < 0.5) ? -1.0 : 1.0;
  return Z(sigma) * sqrt_cut(w);
}

Z TrajectoryBuilder::K_ref(double t, double r) const {
  if (std::abs(t) >= 1.0 || eps_ == 0.0) return Z{};
  const TimeSlice s = time_slice(t);
  if (s.lam <= 0.0) return Z{};
  const double z = r / s.lam;
  if (z >= 1.0) return Z{};
  return K_from_V(s.lam, calV(s, z).value(), z);
}

SupportBox TrajectoryBuilder::support() const {
  const double rt = rho_ * rho_;
  const double rx = rho_ * std::max(eps_, 0.0);
  if (eps_ == 0.0) return SupportBox{cfg_.center_t, cfg_.center_t, cfg_.center_x, cfg_.center_x};
  return SupportBox{cfg_.center_t - rt, cfg_.center_t + rt, cfg_.center_x - rx,
                    cfg_.center_x + rx};
}

Z TrajectoryBuilder::v_bar(double t, double x) const {
  const double dt = t - cfg_.center_t;
  const double tau = dt / (rho_ * rho_);
  const double r = std::abs(x - cfg_.center_x) / rho_;
  const Z v = V_ref(tau, r);
  if (v == Z{}) return v;
  return std::exp(cfg_.reaction * dt) * v;
}

Z TrajectoryBuilder::u_bar(double t, double x) const {
  const double dt = t - cfg_.center_t;
  const double tau = dt / (rho_ * rho_);
  const double r = std::abs(x - cfg_.center_x) / rho_;
  const Z k = K_ref(tau, r);
  if (k == Z{}) return k;
  const double p = double(core_power());
  return std::exp(cfg_.reaction * dt / p) * std::pow(rho_, -2.0 / p) * k;
}

bool TrajectoryBuilder::dominates(double eps) const {
  // Remainder-domination check on the inner plateau band [1/2 +- delta/4],
  // where the bump profiles are exactly polynomial: V_zzz >= f0 (cubic kind),
  // Re V_zz >= f0 (quadratic kind).
  TrajectoryBuilder& self = const_cast<TrajectoryBuilder&>(*this);
  const double saved = self.eps_;
  self.eps_ = eps;
  bool ok = true;
  const int nt = 41, nz = 81;
  const int ord = (cfg_.kind == TrajectoryKind::CubicReal) ? 3 : 2;
  for (int it = 0; it <= nt && ok; ++it) {
    const double t = -0.9875 + 1.975 * double(it) / double(nt);
    const TimeSlice s = time_slice(t);
    const double f0 = s.f[0].real();
    for (int iz = 0; iz <= nz; ++iz) {
      const double z = 0.5 - cfg_.delta / 4 + (cfg_.delta / 2) * double(iz) / double(nz);
      if (calV(s, z).deriv(ord).real() < f0) {
        ok = false;
        break;
      }
    }
  }
  self.eps_ = saved;
  return ok;
}

std::vector<ComplexProfile> build_bump_profiles(double delta, TrajectoryKind kind, int grid_n) {
  if (!(delta > 0.0 && delta < 0.1))
    throw ConfigError("trajectory: delta must lie in (0, 1/10)");
  const int nb = (kind == TrajectoryKind::CubicReal) ? 3 : 2;
  std::vector<ComplexProfile> out;
  for (int i = 1; i <= nb; ++i)
    out.push_back(ComplexProfile::sample(
        0.0, 1.0, std::size_t(grid_n),
        [&](double z) { return Z(bump_profile_value(i, z, delta)); }, "g" + std::to_string(i)));
  return out;
}

std::vector<ComplexProfile> build_time_profiles(const BumpConfig& cfg, const ComplexProfile& g0) {
  cfg.validate();
  const double eps = cfg.bump_epsilon > 0.0 ? cfg.bump_epsilon : 0.5;
  std::array<Z, 4> g0h{};
  const std::vector<Z> d = g0.eval(0.5, 3);
  for (int k = 0; k < 4; ++k) g0h[std::size_t(k)] = d[std::size_t(k)];
  const double n1 = 2.0 * double(cfg.dim - 1);

  auto fvals = [&](double t) {
    std::array<Z, 5> out{};  // lambda, f0..f3
    if (std::abs(t) >= 1.0) return out;
    const TJ tj = TJ::variable(Z(t));
    const TJ one_m = Z(1.0) - tj * tj;
    const TJ lam = Z(eps) * one_m * one_m;
    const TJ f0 = cutoff_exp_jet<TJ>(t);
    const TJ laml = lam * jet_derivative(lam);
    const TJ lam2 = lam * lam;
    const TJ f0d = jet_derivative(f0);
    const TJ f1 = Z(-0.5) * laml * f0 * g0h[1] + lam2 * f0d * g0h[0];
    const TJ f2 = -(f1 * (Z(n1) + Z(0.5) * laml) + Z(0.5) * laml * f0 * g0h[2] +
                    (laml * f0 - lam2 * f0d) * g0h[1]);
    out[0] = lam.value();
    out[1] = f0.value();
    out[2] = f1.value();
    out[3] = f2.value();
    if (cfg.kind == TrajectoryKind::CubicReal)
      out[4] = -((Z(n1) + Z(0.5) * laml) * f2 + (Z(2.0) * laml - Z(4.0 * n1)) * f1 -
                 lam2 * jet_derivative(f1) + Z(0.5) * laml * f0 * g0h[3] +
                 (Z(2.0) * laml * f0 - lam2 * f0d) * g0h[2])
                   .value();
    return out;
  };

  const char* names[5] = {"lambda", "f0", "f1", "f2", "f3"};
  const int np = (cfg.kind == TrajectoryKind::CubicReal) ? 5 : 4;
  std::vector<ComplexProfile> out;
  for (int p = 0; p < np; ++p)
    out.push_back(ComplexProfile::sample(
        -1.0, 1.0, std::size_t(cfg.t_grid_n),
        [&](double t) { return fvals(t)[std::size_t(p)]; }, names[p]));
  return out;
}

ReferenceTrajectory TrajectoryBuilder::assemble(const SpaceTimeGrid& grid,
                                                const Coupling& g) const {
  grid.validate();
  const SupportBox box = support();
  if (eps_ > 0.0 &&
      !(box.t_lo > 0.0 && box.t_hi < grid.T && box.x_lo > cfg_.omega_lo &&
        box.x_hi < cfg_.omega_hi && cfg_.omega_lo >= grid.x_lo && cfg_.omega_hi <= grid.x_hi))
    throw GeometryError("trajectory: support box not inside (0,T) x omega");

  ReferenceTrajectory traj;
  traj.grid = grid;
  traj.kind = cfg_.kind;
  traj.config = cfg_;
  traj.support = box;
  traj.u_bar = ComplexField(grid);
  traj.v_bar = ComplexField(grid);
  traj.h_bar = ComplexField(grid);

#pragma omp parallel for schedule(dynamic)
  for (int n = 0; n <= grid.nt; ++n) {
    const double t = grid.t(n);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i);
      if (!box.contains(t, x)) continue;
      traj.u_bar.at(n, i) = u_bar(t, x);
      traj.v_bar.at(n, i) = v_bar(t, x);
    }
  }

  // h is the discrete residual of the u-equation, masked outside the box;
  // the same stencil is what verify_trajectory re-evaluates.
  const double dt = grid.dt(), dx = grid.dx();
#pragma omp parallel for schedule(static)
  for (int n = 0; n <= grid.nt; ++n) {
    const double t = grid.t(n);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i);
      if (!box.contains(t, x)) continue;
      auto u = [&](int m, int j) -> Z {
        if (m < 0 || m > grid.nt || j < 0 || j >= grid.nx) return Z{};
        return traj.u_bar.at(m, j);
      };
      Z ut;
      if (n == 0)
        ut = (u(1, i) - u(0, i)) / Z(dt);
      else if (n == grid.nt)
        ut = (u(n, i) - u(n - 1, i)) / Z(dt);
      else
        ut = (u(n + 1, i) - u(n - 1, i)) / Z(2.0 * dt);
      const Z uxx = (u(n, i - 1) - Z(2.0) * u(n, i) + u(n, i + 1)) / Z(dx * dx);
      Z lap = uxx;
      if (cfg_.dim > 1) {
        const double rc = x - cfg_.center_x;
        if (std::abs(rc) < 1e-12 * dx) {
          lap = Z(double(cfg_.dim)) * uxx;
        } else {
          const Z ux = (u(n, i + 1) - u(n, i - 1)) / Z(2.0 * dx);
          lap += Z(double(cfg_.dim - 1) / rc) * ux;
        }
      }
      traj.h_bar.at(n, i) = ut - lap - g.g(traj.u_bar.at(n, i), traj.v_bar.at(n, i));
    }
  }
  return traj;
}

ReferenceTrajectory assemble_trajectory(const BumpConfig& cfg, const SpaceTimeGrid& grid,
                                        const Coupling& g) {
  return TrajectoryBuilder(cfg).assemble(grid, g);
}

VerifyReport verify_trajectory(const ReferenceTrajectory& traj, const Coupling& g,
                               const DefectOracleOptions& opt) {
  VerifyReport rep;
  const SpaceTimeGrid& grid = traj.grid;
  const BumpConfig& cfg = traj.config;
  if (cfg.bump_epsilon == 0.0) {
    rep.refinement = {{1.0, 0.0}, {0.5, 0.0}};
    return rep;
  }
  TrajectoryBuilder builder(cfg);

  // u-equation: recompute the defining stencil and compare with stored h.
  {
    const ReferenceTrajectory again = builder.assemble(grid, g);
    for (int n = 0; n <= grid.nt; ++n)
      for (int i = 0; i < grid.nx; ++i)
        rep.defect_u_max = std::max(
            rep.defect_u_max, std::abs(again.h_bar.at(n, i) - traj.h_bar.at(n, i)));
  }

  // v-equation: independent finite-difference oracle at two step levels.
  const double rho = builder.rho();
  const double p = double(builder.core_power());
  const double R = cfg.reaction;
  const int N = cfg.dim;
  const SupportBox& box = traj.support;

  const LongEval ev(builder);
  auto defect_at = [&](double t, double x, double scale) -> double {
    const double tau = (t - cfg.center_t) / (rho * rho);
    const double lam = builder.lambda(tau);
    if (lam <= 0.0) return 0.0;
    const double z0 = std::abs(x - cfg.center_x) / (rho * lam);
    const LongEval::G0Local loc = ev.local(std::min(z0, 1.0));
    const LR ht = LR(scale * opt.ct * rho * rho * std::max(1.0 - tau * tau, 0.05));
    const LR hx = LR(scale * opt.cx * rho * lam);
    auto vt = [&](int k) { return ev.v_bar(LR(t) + LR(k) * ht, LR(x), loc); };
    auto vx = [&](int k) { return ev.v_bar(LR(t), LR(x) + LR(k) * hx, loc); };
    const LC dvt = fd_d1(vt, ht);
    const LC dvxx = fd_d2(vx, hx);
    LC lap = dvxx;
    if (N > 1) {
      const double rc = x - cfg.center_x;
      if (std::abs(rc) < 1e-12)
        lap = LC(LR(N)) * dvxx;
      else
        lap += LC(LR(N - 1) / LR(rc)) * fd_d1(vx, hx);
    }
    const Z u = builder.u_bar(t, x);
    LC up = LC(1);
    for (int k = 0; k < int(p); ++k) up *= LC(LR(u.real()), LR(u.imag()));
    return double(std::abs(dvt - lap - LC(LR(R)) * vt(0) - up));
  };

  // Sample grid nodes inside the support box, strided to the requested count.
  std::vector<double> ts, xs;
  for (int n = 0; n <= grid.nt; ++n)
    if (grid.t(n) > box.t_lo && grid.t(n) < box.t_hi) ts.push_back(grid.t(n));
  for (int i = 0; i < grid.nx; ++i)
    if (grid.x(i) > box.x_lo && grid.x(i) < box.x_hi) xs.push_back(grid.x(i));
  auto stride = [](std::vector<double>& v, int target) {
    if (int(v.size()) <= target) return;
    std::vector<double> out;
    for (int k = 0; k < target; ++k)
      out.push_back(v[std::size_t(k) * (v.size() - 1) / std::size_t(target - 1)]);
    v = std::move(out);
  };
  stride(ts, opt.samples_t);
  stride(xs, opt.samples_x);

  for (double scale : {2.0, 1.0}) {
    double dmax = 0.0, dsum = 0.0;
    std::size_t count = 0;
#pragma omp parallel for schedule(dynamic) reduction(max : dmax) reduction(+ : dsum, count)
    for (std::size_t a = 0; a < ts.size(); ++a)
      for (std::size_t b = 0; b < xs.size(); ++b) {
        const double d = defect_at(ts[a], xs[b], scale);
        dmax = std::max(dmax, d);
        dsum += d * d;
        ++count;
      }
    rep.refinement.emplace_back(scale, dmax);
    if (scale == 1.0) {
      rep.defect_v_max = dmax;
      rep.defect_v_l2 = count ? std::sqrt(dsum / double(count)) : 0.0;
    }
  }
  if (rep.refinement.size() == 2 && rep.refinement[1].second > 0.0)
    rep.order = std::log2(rep.refinement[0].second / rep.refinement[1].second);
  return rep;
}

}  // namespace returnctrl
