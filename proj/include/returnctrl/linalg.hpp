#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "returnctrl/errors.hpp"

namespace returnctrl {

template <class S>
double abs_of(const S& v) {
  using std::abs;
  return double(abs(v));
}

// Dense LU solve with partial pivoting, in place.  a is row-major n x n.
template <class S>
std::vector<S> dense_solve(std::vector<S> a, std::vector<S> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = abs_of(a[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = abs_of(a[i * n + k]);
      if (m > best) {
        best = m;
        p = i;
      }
    }
    if (best == 0.0) throw ConstructionError("dense_solve: singular matrix");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const S f = a[i * n + k] / a[k * n + k];
      a[i * n + k] = S{};
      for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<S> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    S s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= a[ii * n + j] * x[j];
    x[ii] = s / a[ii * n + ii];
  }
  return x;
}

// 2x2 block, row-major.
template <class S>
struct Mat2 {
  S a{}, b{}, c{}, d{};  // [a b; c d]

  static Mat2 identity() { return {S(1), S{}, S{}, S(1)}; }
  Mat2 transposed() const { return {a, c, b, d}; }

  friend Mat2 operator+(const Mat2& x, const Mat2& y) {
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
  }
  friend Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
  }
  friend Mat2 operator*(S s, const Mat2& x) {
    return {s * x.a, s * x.b, s * x.c, s * x.d};
  }
  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  }

  Mat2 inverse() const {
    const S det = a * d - b * c;
    if (abs_of(det) == 0.0) throw ConstructionError("Mat2: singular block");
    const S inv = S(1) / det;
    return {d * inv, -b * inv, -c * inv, a * inv};
  }
};

template <class S>
struct Vec2 {
  S x{}, y{};
  friend Vec2 operator+(const Vec2& u, const Vec2& v) { return {u.x + v.x, u.y + v.y}; }
  friend Vec2 operator-(const Vec2& u, const Vec2& v) { return {u.x - v.x, u.y - v.y}; }
  friend Vec2 operator*(S s, const Vec2& u) { return {s * u.x, s * u.y}; }
};

template <class S>
Vec2<S> operator*(const Mat2<S>& m, const Vec2<S>& v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}

}  // namespace returnctrl
