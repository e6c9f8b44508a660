#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "returnctrl/errors.hpp"

namespace returnctrl {

template <class T>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  using real_type = double;
  static constexpr bool is_complex = false;
  static double conj(double v) { return v; }
  static double real(double v) { return v; }
};

template <>
struct scalar_traits<std::complex<double>> {
  using real_type = double;
  static constexpr bool is_complex = true;
  static std::complex<double> conj(std::complex<double> v) { return std::conj(v); }
  static double real(std::complex<double> v) { return v.real(); }
};

// Uniform space-time grid on (x_lo, x_hi) x (0, T) with homogeneous
// Dirichlet conditions; nx interior nodes, nt time steps, theta in [1/2, 1].
struct SpaceTimeGrid {
  double x_lo = 0.0;
  double x_hi = 1.0;
  int nx = 50;
  double T = 1.0;
  int nt = 80;
  double theta = 0.5;

  void validate() const {
    if (nx < 3) throw ConfigError("grid: nx must be >= 3");
    if (nt < 2) throw ConfigError("grid: nt must be >= 2");
    if (!(T > 0.0)) throw ConfigError("grid: T must be positive");
    if (!(x_lo < x_hi)) throw ConfigError("grid: x_lo must be < x_hi");
    if (!(theta >= 0.5 && theta <= 1.0)) throw ConfigError("grid: theta must be in [1/2, 1]");
  }

  double dx() const { return (x_hi - x_lo) / double(nx + 1); }
  double dt() const { return T / double(nt); }
  double x(int i) const { return x_lo + double(i + 1) * dx(); }
  double t(int n) const { return double(n) * dt(); }

  // Node index range [i0, i1) covering the closed interval [a, b].
  std::pair<int, int> node_range(double a, double b) const {
    int i0 = int(std::ceil((a - x_lo) / dx() - 1.0 - 1e-12));
    int i1 = int(std::floor((b - x_lo) / dx() - 1.0 + 1e-12)) + 1;
    if (i0 < 0) i0 = 0;
    if (i1 > nx) i1 = nx;
    if (i0 >= i1) throw GeometryError("grid: interval contains no interior nodes");
    return {i0, i1};
  }

  friend bool operator==(const SpaceTimeGrid&, const SpaceTimeGrid&) = default;
};

// A scalar space-time grid function: (nt+1) x nx samples at interior nodes,
// boundary values implicitly zero.
template <class S>
class Field {
 public:
  Field() = default;
  explicit Field(const SpaceTimeGrid& g) : grid_(g), v_(std::size_t(g.nt + 1) * std::size_t(g.nx), S{}) {}

  const SpaceTimeGrid& grid() const { return grid_; }
  S& at(int n, int i) { return v_[std::size_t(n) * std::size_t(grid_.nx) + std::size_t(i)]; }
  const S& at(int n, int i) const { return v_[std::size_t(n) * std::size_t(grid_.nx) + std::size_t(i)]; }
  std::vector<S>& data() { return v_; }
  const std::vector<S>& data() const { return v_; }

  // L2(Omega) norm of the time slice n.
  double slice_norm(int n) const {
    double s = 0.0;
    for (int i = 0; i < grid_.nx; ++i) s += std::norm(std::complex<double>(at(n, i)));
    return std::sqrt(s * grid_.dx());
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : v_) m = std::max(m, std::abs(std::complex<double>(x)));
    return m;
  }

 private:
  SpaceTimeGrid grid_;
  std::vector<S> v_;
};

template <class S>
struct FieldPair {
  Field<S> first;
  Field<S> second;

  FieldPair() = default;
  explicit FieldPair(const SpaceTimeGrid& g) : first(g), second(g) {}

  double max_abs() const { return std::max(first.max_abs(), second.max_abs()); }
  double slice_norm(int n) const {
    const double a = first.slice_norm(n);
    const double b = second.slice_norm(n);
    return std::sqrt(a * a + b * b);
  }
};

using RealField = Field<double>;
using ComplexField = Field<std::complex<double>>;

}  // namespace returnctrl
