#pragma once

#include <cmath>
#include <complex>

#include "returnctrl/jet.hpp"

namespace returnctrl {

namespace detail {

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

}  // namespace detail

// The position arguments are a real template type so the same closures can be
// evaluated in extended precision (the defect oracle does its finite
// differences in long double to keep cancellation noise below the target).

// Jet of exp(-1/(1-u^2)) for |u| < 1, zero jet outside.
template <class JetT, class R>
JetT cutoff_exp_jet(R u) {
  using S = decltype(JetT{}.value());
  if (std::abs(u) >= R(1) - R(1e-12)) return JetT{};
  const JetT uj = JetT::variable(S(u));
  return exp(S(-1.0) * recip(S(1.0) - uj * uj));
}

// Smooth bump exp(1 - 1/(1-q^2)) on |q| < 1, q = (z - center)/halfwidth.
template <class JetT, class R>
JetT bump_jet(R z, R center, R halfwidth) {
  using S = decltype(JetT{}.value());
  const R q0 = (z - center) / halfwidth;
  if (std::abs(q0) >= R(1) - R(1e-12)) return JetT{};
  JetT q;
  q.c[0] = S(q0);
  q.c[1] = S(R(1) / halfwidth);
  return exp(S(1.0) - recip(S(1.0) - q * q));
}

// C-infinity step: 0 for u <= 0, 1 for u >= 1, flat at both ends.
// du is the derivative of u with respect to the jet variable.
template <class JetT, class R>
JetT smoothstep_jet(R u0, R du) {
  using S = decltype(JetT{}.value());
  if (u0 <= R(1e-9)) return JetT{};
  if (u0 >= R(1) - R(1e-9)) return JetT::constant(S(1.0));
  JetT u;
  u.c[0] = S(u0);
  u.c[1] = S(du);
  const JetT lo = exp(-recip(u));
  const JetT hi = exp(-recip(S(1.0) - u));
  return lo * recip(lo + hi);
}

template <class R>
R smoothstep_value(R u) {
  if (u <= R(1e-9)) return R(0);
  if (u >= R(1) - R(1e-9)) return R(1);
  const R lo = std::exp(R(-1) / u);
  const R hi = std::exp(R(-1) / (R(1) - u));
  return lo / (lo + hi);
}

template <class R>
R bump_value(R z, R center, R halfwidth) {
  const R q = (z - center) / halfwidth;
  if (std::abs(q) >= R(1) - R(1e-12)) return R(0);
  return std::exp(R(1) - R(1) / (R(1) - q * q));
}

// Plateau equal to 1 on [c-inner, c+inner], supported in [c-outer, c+outer].
template <class JetT, class R>
JetT plateau_jet(R z, R c, R inner, R outer) {
  const R w = outer - inner;
  const JetT up = smoothstep_jet<JetT>((z - (c - outer)) / w, R(1) / w);
  const JetT down = smoothstep_jet<JetT>(((c + outer) - z) / w, R(-1) / w);
  return up * down;
}

template <class R>
R plateau_value(R z, R c, R inner, R outer) {
  const R w = outer - inner;
  return smoothstep_value((z - (c - outer)) / w) * smoothstep_value(((c + outer) - z) / w);
}

}  // namespace returnctrl
