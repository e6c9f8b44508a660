#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "returnctrl/errors.hpp"

namespace returnctrl {

// Fornberg's algorithm: weights of the interpolating polynomial through the
// nodes xs for derivatives 0..m at the point z.  w[k][j] is the weight of
// sample j in the k-th derivative.
std::vector<std::vector<double>> fornberg_weights(double z,
                                                  const std::vector<double>& xs,
                                                  int m);

// A function of one variable sampled on a uniform grid.  Evaluation
// interpolates locally with a degree-7 polynomial, which reproduces the
// samples at the nodes and provides derivatives up to order 5.
template <class S>
class SampledProfile {
 public:
  SampledProfile() = default;
  SampledProfile(double lo, double hi, std::vector<S> values, std::string name = {})
      : lo_(lo), hi_(hi), values_(std::move(values)), name_(std::move(name)) {
    if (values_.size() < 8) throw ConfigError("profile needs at least 8 samples");
    dx_ = (hi_ - lo_) / double(values_.size() - 1);
  }

  template <class F>
  static SampledProfile sample(double lo, double hi, std::size_t n, F&& f,
                               std::string name = {}) {
    std::vector<S> v(n);
    const double dx = (hi - lo) / double(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(lo + double(i) * dx);
    return SampledProfile(lo, hi, std::move(v), std::move(name));
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double spacing() const { return dx_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<S>& values() const { return values_; }
  const std::string& name() const { return name_; }
  double node(std::size_t i) const { return lo_ + double(i) * dx_; }

  S operator()(double z) const { return eval(z, 0)[0]; }

  // Value and derivatives 0..m at z (m <= 5).
  std::vector<S> eval(double z, int m) const {
    const int n = int(values_.size());
    const int stencil = 8;
    int i0 = int(std::floor((z - lo_) / dx_)) - stencil / 2 + 1;
    i0 = std::clamp(i0, 0, n - stencil);
    // Exact at nodes.
    const double zi = (z - lo_) / dx_;
    const double zr = std::round(zi);
    const bool on_node = std::abs(zi - zr) < 1e-12 && zr >= 0 && zr < n;

    std::vector<double> xs(stencil);
    for (int j = 0; j < stencil; ++j) xs[j] = node(std::size_t(i0 + j));
    auto w = fornberg_weights(z, xs, m);
    std::vector<S> out(std::size_t(m) + 1, S{});
    for (int k = 0; k <= m; ++k)
      for (int j = 0; j < stencil; ++j)
        out[std::size_t(k)] += S(w[std::size_t(k)][std::size_t(j)]) *
                               values_[std::size_t(i0 + j)];
    if (on_node) out[0] = values_[std::size_t(zr)];
    return out;
  }

 private:
  double lo_ = 0.0, hi_ = 1.0, dx_ = 1.0;
  std::vector<S> values_;
  std::string name_;
};

using RealProfile = SampledProfile<double>;
using ComplexProfile = SampledProfile<std::complex<double>>;

}  // namespace returnctrl
