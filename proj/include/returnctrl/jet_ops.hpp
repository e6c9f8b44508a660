#pragma once

#include "returnctrl/bumps.hpp"
#include "returnctrl/jet.hpp"

#include <array>
#include <complex>
#include <cstddef>

namespace returnctrl {

// Jet of f' in the same variable; the top coefficient is lost.
template <class S, int N>
Jet<S, N> jet_derivative(const Jet<S, N>& f) {
  Jet<S, N> r;
  for (int k = 0; k < N; ++k) r.c[std::size_t(k)] = S(double(k + 1)) * f.c[std::size_t(k + 1)];
  r.c[N] = S{};
  return r;
}

template <class S, int M, int N>
Jet<S, N> jet_truncate(const Jet<S, M>& f) {
  static_assert(M >= N);
  Jet<S, N> r;
  for (int k = 0; k <= N; ++k) r.c[std::size_t(k)] = f.c[std::size_t(k)];
  return r;
}

// Applies the radial operator f'' + (dim-1)/z f' to a jet of f, returning the
// derivatives of the result up to the order of ZJet.  Needs z != 0 when
// dim > 1 (the 1/z Leibniz powers).
template <int M>
ZJet radial_operator_jet(const Jet<std::complex<double>, M>& f, double z, int dim) {
  using Z = std::complex<double>;
  static_assert(M >= ZJet::order + 2);
  std::array<Z, M + 1> fd{};  // plain derivatives of f
  for (int k = 0; k <= M; ++k)
    fd[std::size_t(k)] = f.c[std::size_t(k)] * Z(detail::factorial(k));
  ZJet out;
  for (int k = 0; k <= ZJet::order; ++k) {
    Z val = fd[std::size_t(k + 2)];
    if (dim > 1) {
      // d^k/dz^k (f'/z) by Leibniz.
      Z s{};
      double zp = z;  // z^(k-j+1)
      for (int j = k; j >= 0; --j) {
        const double sign = ((k - j) % 2 == 0) ? 1.0 : -1.0;
        s += Z(detail::binom(k, j) * sign * detail::factorial(k - j) / zp) * fd[std::size_t(j + 1)];
        zp *= z;
      }
      val += Z(double(dim - 1)) * s;
    }
    out.c[std::size_t(k)] = val / Z(detail::factorial(k));
  }
  return out;
}

}  // namespace returnctrl
