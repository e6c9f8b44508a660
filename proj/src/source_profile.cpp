#include "returnctrl/source_profile.hpp"

#include <array>
#include <cmath>
#include <string>

#include "returnctrl/bumps.hpp"
#include "returnctrl/errors.hpp"
#include "returnctrl/jet_ops.hpp"
#include "returnctrl/linalg.hpp"
#include "returnctrl/quadrature.hpp"

namespace returnctrl {

namespace {

using J10 = Jet<Z, 10>;
using detail::binom;
using detail::factorial;

// (z-a)^5 (b-z)^5 scaled to unit maximum.
ZJet poly_template_jet(double z, double a, double b) {
  if (z <= a || z >= b) return ZJet{};
  ZJet u, v;
  u.c[0] = Z(z - a);
  u.c[1] = Z(1.0);
  v.c[0] = Z(b - z);
  v.c[1] = Z(-1.0);
  const double scale = std::pow(0.5 * (b - a), 10);
  return Z(1.0 / scale) * (pow_int(u, 5) * pow_int(v, 5));
}

ZJet poly_eval_jet(const std::vector<Z>& coeff, double x) {
  // coeff[k] multiplies x^k; returns jet in the original variable.
  ZJet xj;
  xj.c[0] = Z(x);
  xj.c[1] = Z(1.0);
  ZJet r;
  for (std::size_t k = coeff.size(); k-- > 0;) r = r * xj + Z(coeff[k]);
  return r;
}

// Moment weights: w1 = s^(dim-1); w2 = s (dim != 2) or s*log(s) (dim == 2).
double weight1(double s, int dim) { return std::pow(s, dim - 1); }
double weight2(double s, int dim) { return dim == 2 ? s * std::log(s) : s; }

}  // namespace

ZJet SourceProfile::piece_jet(double z) const {
  const double d = delta_;
  if (z >= 1.0) return ZJet{};
  if (z < d) return ZJet::constant(Z(-2.0 * dim_));
  if (z < 0.5 - d) return segment_jet(left_, z);
  if (z < 0.5 + d) {
    ZJet u;
    u.c[0] = Z(z - 0.5);
    u.c[1] = Z(1.0);
    return pow_int(u, core_power());
  }
  if (z < 1.0 - d) return segment_jet(right_, z);
  return radial_operator_jet(cutoff_exp_jet<J10>(z), z, dim_);
}

ZJet SourceProfile::segment_jet(const FreeSegment& s, double z) const {
  const ZJet pa = poly_eval_jet(s.taylor_a, z - s.a);
  const ZJet pb = poly_eval_jet(s.taylor_b, z - s.b);
  const ZJet step = smoothstep_jet<ZJet>((z - s.blend_lo) / s.blend_w, 1.0 / s.blend_w);
  ZJet r = pa + step * (pb - pa);
  ZJet plateau;
  for (int j = 0; j < 6; ++j)
    plateau = plateau + bump_jet<ZJet>(z, s.bump_center(j), s.bump_halfwidth);
  return r + s.bump_amp * plateau + s.template_amp * poly_template_jet(z, s.a, s.b);
}

ZJet SourceProfile::jet(double z) const { return piece_jet(z); }

namespace {

double template_value(double z, double a, double b) {
  if (z <= a || z >= b) return 0.0;
  const double u = (z - a) * (b - z);
  return std::pow(u, 5) / std::pow(0.5 * (b - a), 10);
}

}  // namespace

// Scalar evaluation; avoids jet arithmetic in quadrature-heavy loops.
Z SourceProfile::operator()(double z) const {
  const double d = delta_;
  if (z >= 1.0) return Z{};
  if (z < d) return Z(-2.0 * dim_);
  if (z >= 0.5 - d && z < 0.5 + d) {
    const double u = z - 0.5;
    return Z(core_power() == 3 ? u * u * u : u * u);
  }
  if (z >= 1.0 - d) {
    const double w = 1.0 - z * z;
    if (w < 1e-12) return Z{};
    const double f = std::exp(-1.0 / w);
    const double fp = f * (-2.0 * z / (w * w));
    const double fpp = f * (4.0 * z * z / (w * w * w * w) - 2.0 / (w * w) -
                            8.0 * z * z / (w * w * w));
    double g = fpp;
    if (dim_ > 1) g += double(dim_ - 1) / z * fp;
    return Z(g);
  }
  const FreeSegment& s = (z < 0.5) ? left_ : right_;
  Z pa{}, pb{};
  double xa = 1.0, xb = 1.0;
  for (std::size_t k = 0; k < s.taylor_a.size(); ++k) {
    pa += s.taylor_a[k] * Z(xa);
    pb += s.taylor_b[k] * Z(xb);
    xa *= z - s.a;
    xb *= z - s.b;
  }
  const double step = smoothstep_value((z - s.blend_lo) / s.blend_w);
  Z r = pa + Z(step) * (pb - pa);
  double plateau = 0.0;
  for (int j = 0; j < 6; ++j) plateau += bump_value(z, s.bump_center(j), s.bump_halfwidth);
  return r + s.bump_amp * Z(plateau) + s.template_amp * Z(template_value(z, s.a, s.b));
}

void SourceProfile::build_bases() {
  left_.a = delta_;
  left_.b = 0.5 - delta_;
  right_.a = 0.5 + delta_;
  right_.b = 1.0 - delta_;

  auto taylor4 = [](const ZJet& j) {
    std::vector<Z> c(5);
    for (int k = 0; k <= 4; ++k) c[std::size_t(k)] = j.c[std::size_t(k)];
    return c;
  };
  auto core_at = [&](double z) {
    ZJet u;
    u.c[0] = Z(z - 0.5);
    u.c[1] = Z(1.0);
    return pow_int(u, core_power());
  };

  left_.taylor_a = taylor4(ZJet::constant(Z(-2.0 * dim_)));
  left_.taylor_b = taylor4(core_at(left_.b));
  left_.blend_lo = left_.a;
  left_.blend_w = left_.b - left_.a;

  right_.taylor_a = taylor4(core_at(right_.a));
  right_.taylor_b =
      taylor4(radial_operator_jet(cutoff_exp_jet<J10>(1.0 - delta_), 1.0 - delta_, dim_));
  // The tail's high derivatives are enormous (scale exp(-1/(2 delta)) times
  // delta^(-2k)), so its Taylor polynomial is trusted only on a narrow strip.
  right_.blend_w = delta_ / 5.0;
  right_.blend_lo = right_.b - right_.blend_w;

  for (auto* s : {&left_, &right_}) {
    s->bump_halfwidth = 0.95 * (s->b - s->a) / 7.0;
    s->bump_amp = Z{};
    s->template_amp = Z{};
  }
}

Z SourceProfile::moment_radial(int panels) const {
  // Head piece analytically: -2N * delta^N / N.
  Z m = Z(-2.0 * std::pow(delta_, dim_));
  auto f = [&](double s) { return Z(weight1(s, dim_)) * (*this)(s); };
  m += gauss_legendre_composite(f, left_.a, left_.b, panels);
  m += gauss_legendre_composite(f, 0.5 - delta_, 0.5 + delta_, panels);
  m += gauss_legendre_composite(f, right_.a, right_.b, panels);
  m += gauss_legendre_composite(f, 1.0 - delta_, 1.0, panels);
  return m;
}

Z SourceProfile::moment_normalization(int panels) const {
  Z m;
  if (dim_ == 2)
    m = Z(-2.0 * dim_ * (0.5 * delta_ * delta_ * std::log(delta_) - 0.25 * delta_ * delta_));
  else
    m = Z(-double(dim_) * delta_ * delta_);
  auto f = [&](double s) { return Z(weight2(s, dim_)) * (*this)(s); };
  m += gauss_legendre_composite(f, left_.a, left_.b, panels);
  m += gauss_legendre_composite(f, 0.5 - delta_, 0.5 + delta_, panels);
  m += gauss_legendre_composite(f, right_.a, right_.b, panels);
  m += gauss_legendre_composite(f, 1.0 - delta_, 1.0, panels);
  return m;
}

Z SourceProfile::normalization_target() const {
  return dim_ == 2 ? Z(1.0) : Z(2.0 - dim_);
}

void SourceProfile::solve_constraints(double tau, double tau_im) {
  // Shape moments: per segment, the quintic template T and the bump plateau W.
  // m[k][0..3] = moments of {T_L, W_L, T_R, W_R} with weight k+1.
  double m[2][4];
  int col = 0;
  for (auto* s : {&left_, &right_}) {
    auto tmpl = [&](double z) { return poly_template_jet(z, s->a, s->b).value().real(); };
    auto plat = [&](double z) {
      double v = 0;
      for (int j = 0; j < 6; ++j) v += bump_value(z, s->bump_center(j), s->bump_halfwidth);
      return v;
    };
    for (int k = 0; k < 2; ++k) {
      auto w = [&](double z) { return k == 0 ? weight1(z, dim_) : weight2(z, dim_); };
      m[k][col] = gauss_legendre_composite([&](double z) { return w(z) * tmpl(z); },
                                           s->a, s->b, 64);
      m[k][col + 1] = gauss_legendre_composite([&](double z) { return w(z) * plat(z); },
                                               s->a, s->b, 64);
    }
    col += 2;
  }

  // Real template amplitudes push the free segments toward their admissible
  // signs: negative on the left (real kind only), positive on the right.
  double tmpl_re_l = (kind_ == TrajectoryKind::CubicReal) ? -tau : 0.0;
  double tmpl_re_r = tau;

  // Complex kind: Im G = tau_im * (-T_L + b1 T_R), strictly signed on each
  // open segment.  Opposite-signed masses on the two segments cannot zero
  // both weighted moments at once (their moment-ratio centroids are strictly
  // separated), so the first moment is balanced exactly and the amplitude is
  // chosen small enough that the second-moment residual stays below 2e-10.
  double im_tmpl_l = 0.0, im_tmpl_r = 0.0;
  if (kind_ == TrajectoryKind::QuadraticComplex) {
    const double b1 = m[0][0] / m[0][2];
    const double unit_resid = std::abs(-m[1][0] + b1 * m[1][2]);
    const double amp = std::min(tau_im, 2e-10 / std::max(unit_resid, 1e-300));
    im_tmpl_l = -amp;
    im_tmpl_r = amp * b1;
  }

  left_.template_amp = Z(tmpl_re_l, im_tmpl_l);
  right_.template_amp = Z(tmpl_re_r, im_tmpl_r);
  left_.bump_amp = Z{};
  right_.bump_amp = Z{};

  // Real residual moments, corrected exactly by one common real amplitude per
  // bump plateau.  The 2x2 system places mass of the admissible sign on each
  // segment (the normalization moment weights the right segment more); the
  // node check below confirms the signs.
  const Z r1 = -moment_radial();
  const Z r2 = normalization_target() - moment_normalization();
  const double det = m[0][1] * m[1][3] - m[0][3] * m[1][1];
  if (std::abs(det) < 1e-12)
    throw ConstructionError("source profile: degenerate moment constraints");
  const double alpha = (m[1][3] * r1.real() - m[0][3] * r2.real()) / det;
  const double beta = (m[0][1] * r2.real() - m[1][1] * r1.real()) / det;
  left_.bump_amp += Z(alpha);
  right_.bump_amp += Z(beta);
}

bool SourceProfile::signs_ok(std::string* violated) const {
  const int n = grid_n_;
  for (int i = 1; i < n - 1; ++i) {
    const double z = double(i) / double(n - 1);
    if (z <= 0.0 || z >= 1.0) continue;
    const Z g = (*this)(z);
    if (kind_ == TrajectoryKind::CubicReal) {
      if (std::abs(z - 0.5) < 1e-14) continue;
      // e^{-1/(1-z^2)} underflows for z very close to 1; the tail expression
      // is analytically positive there, so an exact zero is accepted.
      if (z >= 1.0 - delta_ && g.real() == 0.0) continue;
      if (!((z - 0.5) * g.real() > 0.0)) {
        if (violated) *violated = "sign condition (z-1/2)G(z)>0 violated at z=" + std::to_string(z);
        return false;
      }
    } else {
      if (z > delta_ + 1e-12 && z < 0.5 - delta_ - 1e-12 && !(g.imag() < 0.0)) {
        if (violated) *violated = "Im G < 0 violated at z=" + std::to_string(z);
        return false;
      }
      if (z > 0.5 + delta_ + 1e-12 && z < 1.0 - delta_ - 1e-12) {
        if (!(g.imag() > 0.0)) {
          if (violated) *violated = "Im G > 0 violated at z=" + std::to_string(z);
          return false;
        }
        if (!(g.real() > g.imag())) {
          if (violated) *violated = "Re G > Im G violated at z=" + std::to_string(z);
          return false;
        }
      }
    }
  }
  return true;
}

SourceProfile::SourceProfile(int dim, double delta, TrajectoryKind kind, int grid_n)
    : dim_(dim), delta_(delta), kind_(kind), grid_n_(grid_n) {
  if (dim < 1) throw ConfigError("source profile: dim must be >= 1");
  if (!(delta > 0.0 && delta < 0.1))
    throw ConfigError("source profile: delta must lie in (0, 1/10)");
  build_bases();

  double tau = 0.0;
  const double tau_im = (kind == TrajectoryKind::QuadraticComplex) ? 1e-9 : 0.0;
  std::string violated;
  for (int attempt = 0; attempt < 48; ++attempt) {
    solve_constraints(tau, tau_im);
    if (signs_ok(&violated)) return;
    tau = (tau == 0.0) ? 0.5 : 2.0 * tau;
  }
  throw ConstructionError("source profile: constraint solve infeasible: " + violated);
}

ComplexProfile SourceProfile::sampled() const {
  return ComplexProfile::sample(0.0, 1.0, std::size_t(grid_n_),
                                [&](double z) { return (*this)(z); }, "G");
}

ComplexProfile construct_source_profile(int dim, double delta, TrajectoryKind kind) {
  return SourceProfile(dim, delta, kind).sampled();
}

}  // namespace returnctrl
