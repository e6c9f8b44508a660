#include "returnctrl/radial_ode.hpp"

#include <cmath>

#include "returnctrl/errors.hpp"
#include "returnctrl/quadrature.hpp"

namespace returnctrl {

namespace {

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

// Prefix tables of int_0^z s^(dim-1) G and of g0 at the n uniform nodes of
// [0,1].  The integrand of the moment is smooth on each node interval, so one
// 16-point panel per interval is exact to roundoff.
template <class F>
void build_tables(F&& G, int dim, int n, std::vector<Z>& moment, std::vector<Z>& g0) {
  const double h = 1.0 / double(n - 1);
  moment.assign(std::size_t(n), Z{});
  for (int i = 1; i < n; ++i) {
    const double a = double(i - 1) * h;
    const double b = double(i) * h;
    moment[std::size_t(i)] =
        moment[std::size_t(i - 1)] +
        gauss_legendre([&](double s) { return Z(std::pow(s, dim - 1)) * G(s); }, a, b);
  }
  if (std::abs(moment[std::size_t(n - 1)]) > 1e-8)
    throw ConstructionError(
        "radial solve: source has nonzero radial moment; the derivative would "
        "be singular at the origin");

  auto g0p = [&](double y) -> Z {
    if (y <= 0.0) return Z{};
    const int i = std::min(int(y / h), n - 1);
    const Z m = moment[std::size_t(i)] +
                gauss_legendre([&](double s) { return Z(std::pow(s, dim - 1)) * G(s); },
                               double(i) * h, y);
    return m / Z(std::pow(y, dim - 1));
  };

  g0.assign(std::size_t(n), Z{});
  for (int i = n - 2; i >= 0; --i)
    g0[std::size_t(i)] = g0[std::size_t(i + 1)] -
                         gauss_legendre(g0p, double(i) * h, double(i + 1) * h);
}

}  // namespace

RadialSolution::RadialSolution(SourceProfile G, int n)
    : G_(std::move(G)), n_(n), h_(1.0 / double(n - 1)) {
  build_tables([&](double s) { return G_(s); }, G_.dim(), n_, moment_, g0_);
}

Z RadialSolution::prefix_moment(double z) const {
  if (z >= 1.0) return moment_[std::size_t(n_ - 1)];
  const int i = std::min(int(z / h_), n_ - 1);
  return moment_[std::size_t(i)] +
         gauss_legendre([&](double s) { return Z(std::pow(s, dim() - 1)) * G_(s); },
                        double(i) * h_, z);
}

Z RadialSolution::g0_prime(double z) const {
  if (z <= 0.0 || z >= 1.0) return Z{};
  return prefix_moment(z) / Z(std::pow(z, dim() - 1));
}

Z RadialSolution::g0(double z) const {
  if (z >= 1.0) return Z{};
  if (z <= 0.0) return g0_[0];
  const int i = std::min(int(z / h_), n_ - 1);
  return g0_[std::size_t(i)] +
         gauss_legendre([&](double y) { return g0_prime(y); }, double(i) * h_, z);
}

ZJet RadialSolution::jet(double z) const {
  ZJet out;
  if (z >= 1.0) return out;
  std::array<Z, ZJet::order + 1> d{};  // plain derivatives
  d[0] = g0(z);
  d[1] = g0_prime(z);
  if (z < G_.delta()) {
    // On (0, delta) the ODE reduces to g0'' = -2 (the forced head piece);
    // the Leibniz 1/z powers below would be ill-conditioned there.
    out.c[0] = d[0];
    out.c[1] = d[1];
    out.c[2] = Z(-1.0);
    return out;
  }
  const ZJet Gj = G_.jet(z);
  const int N = dim();
  for (int k = 0; k + 2 <= ZJet::order; ++k) {
    Z val = Gj.deriv(k);
    if (N > 1) {
      // d^k/dz^k (g0'/z) by Leibniz.
      Z s{};
      double zp = z;
      for (int j = k; j >= 0; --j) {
        const double sign = ((k - j) % 2 == 0) ? 1.0 : -1.0;
        s += Z(binom(k, j) * sign * factorial(k - j) / zp) * d[std::size_t(j + 1)];
        zp *= z;
      }
      val -= Z(double(N - 1)) * s;
    }
    d[std::size_t(k + 2)] = val;
  }
  for (int k = 0; k <= ZJet::order; ++k) out.c[std::size_t(k)] = d[std::size_t(k)] / Z(factorial(k));
  return out;
}

ComplexProfile RadialSolution::sampled() const {
  return ComplexProfile(0.0, 1.0, g0_, "g0");
}

ComplexProfile solve_radial_ode(const ComplexProfile& G, int dim) {
  std::vector<Z> moment, g0;
  const int n = int(G.size());
  build_tables([&](double s) { return G(s); }, dim, n, moment, g0);
  return ComplexProfile(0.0, 1.0, std::move(g0), "g0");
}

}  // namespace returnctrl
