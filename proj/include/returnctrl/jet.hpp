#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace returnctrl {

// Truncated Taylor series in one variable, coefficients normalized
// (c[k] = f^(k)/k!).  Used to evaluate the profile closures together with
// their derivatives without finite differencing.
template <class S, int Order = 8>
struct Jet {
  static constexpr int order = Order;
  std::array<S, Order + 1> c{};

  static Jet constant(S v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet variable(S v) {
    Jet j;
    j.c[0] = v;
    j.c[1] = S(1);
    return j;
  }

  S value() const { return c[0]; }
  // k-th derivative (un-normalizes the Taylor coefficient).
  S deriv(int k) const {
    S f = c[k];
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return f * fact;
  }

  Jet operator-() const {
    Jet r;
    for (int k = 0; k <= Order; ++k) r.c[k] = -c[k];
    return r;
  }
  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k <= Order; ++k) r.c[k] = a.c[k] + b.c[k];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k <= Order; ++k) r.c[k] = a.c[k] - b.c[k];
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k <= Order; ++k) {
      S s{};
      for (int j = 0; j <= k; ++j) s += a.c[j] * b.c[k - j];
      r.c[k] = s;
    }
    return r;
  }
  friend Jet operator+(const Jet& a, S s) { return a + constant(s); }
  friend Jet operator+(S s, const Jet& a) { return a + constant(s); }
  friend Jet operator-(const Jet& a, S s) { return a - constant(s); }
  friend Jet operator-(S s, const Jet& a) { return constant(s) - a; }
  friend Jet operator*(const Jet& a, S s) {
    Jet r;
    for (int k = 0; k <= Order; ++k) r.c[k] = a.c[k] * s;
    return r;
  }
  friend Jet operator*(S s, const Jet& a) { return a * s; }
};

template <class S, int N>
Jet<S, N> recip(const Jet<S, N>& f) {
  Jet<S, N> g;
  g.c[0] = S(1) / f.c[0];
  for (int k = 1; k <= N; ++k) {
    S s{};
    for (int j = 1; j <= k; ++j) s += f.c[j] * g.c[k - j];
    g.c[k] = -g.c[0] * s;
  }
  return g;
}

template <class S, int N>
Jet<S, N> operator/(const Jet<S, N>& a, const Jet<S, N>& b) {
  return a * recip(b);
}

template <class S, int N>
Jet<S, N> exp(const Jet<S, N>& f) {
  Jet<S, N> e;
  using std::exp;
  e.c[0] = exp(f.c[0]);
  // (exp f)' = f' exp f  =>  k e_k = sum_{j=1..k} j f_j e_{k-j}
  for (int k = 1; k <= N; ++k) {
    S s{};
    for (int j = 1; j <= k; ++j) s += S(double(j)) * f.c[j] * e.c[k - j];
    e.c[k] = s * S(1.0 / k);
  }
  return e;
}

template <class S, int N>
Jet<S, N> pow_int(const Jet<S, N>& f, int p) {
  Jet<S, N> r = Jet<S, N>::constant(S(1));
  for (int i = 0; i < p; ++i) r = r * f;
  return r;
}

using DJet = Jet<double, 8>;
using ZJet = Jet<std::complex<double>, 8>;

}  // namespace returnctrl
