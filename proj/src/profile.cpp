#include "returnctrl/profile.hpp"

namespace returnctrl {

// B. Fornberg, "Generation of finite difference formulas on arbitrarily
// spaced grids", Math. Comp. 51 (1988).
std::vector<std::vector<double>> fornberg_weights(double z,
                                                  const std::vector<double>& xs,
                                                  int m) {
  const int n = int(xs.size()) - 1;
  std::vector<std::vector<double>> c(std::size_t(m) + 1,
                                     std::vector<double>(xs.size(), 0.0));
  double c1 = 1.0;
  double c4 = xs[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[std::size_t(i)] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[std::size_t(i)] - xs[std::size_t(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[std::size_t(k)][std::size_t(i)] =
              c1 *
              (k * c[std::size_t(k - 1)][std::size_t(i - 1)] -
               c5 * c[std::size_t(k)][std::size_t(i - 1)]) /
              c2;
        c[0][std::size_t(i)] = -c1 * c5 * c[0][std::size_t(i - 1)] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[std::size_t(k)][std::size_t(j)] =
            (c4 * c[std::size_t(k)][std::size_t(j)] -
             k * c[std::size_t(k - 1)][std::size_t(j)]) /
            c3;
      c[0][std::size_t(j)] = c4 * c[0][std::size_t(j)] / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace returnctrl
