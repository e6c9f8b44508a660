#pragma once

#include <array>
#include <cstddef>

namespace returnctrl {

// 16-point Gauss-Legendre rule on [-1,1].
inline constexpr std::array<double, 8> kGL16Nodes = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
inline constexpr std::array<double, 8> kGL16Weights = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

// Integrates f over [a,b] with a single 16-point Gauss-Legendre panel.
template <class F>
auto gauss_legendre(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  using R = decltype(f(mid));
  R sum{};
  for (std::size_t i = 0; i < 8; ++i) {
    const double dx = half * kGL16Nodes[i];
    sum += R(kGL16Weights[i]) * (f(mid + dx) + f(mid - dx));
  }
  return R(half) * sum;
}

// Composite rule with n panels.
template <class F>
auto gauss_legendre_composite(F&& f, double a, double b, int n) {
  using R = decltype(f(a));
  R sum{};
  const double h = (b - a) / n;
  for (int i = 0; i < n; ++i) sum += gauss_legendre(f, a + i * h, a + (i + 1) * h);
  return sum;
}

}  // namespace returnctrl
