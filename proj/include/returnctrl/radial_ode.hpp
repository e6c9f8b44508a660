#pragma once

#include <vector>

#include "returnctrl/profile.hpp"
#include "returnctrl/source_profile.hpp"

namespace returnctrl {

// Solution g0 of g0'' + (dim-1)/z g0' = G with g0(1) = g0'(1) = 0, computed by
// the nested prefix quadratures
//   g0'(z) = z^(1-dim) * int_0^z s^(dim-1) G(s) ds,
//   g0(z)  = -int_z^1 g0'(y) dy,
// and extended by 0 for z >= 1.  Derivatives beyond the first come from the
// ODE itself (recursion on the jet), not from finite differences.
class RadialSolution {
 public:
  explicit RadialSolution(SourceProfile G, int n = 2049);

  const SourceProfile& source() const { return G_; }
  int dim() const { return G_.dim(); }

  Z g0(double z) const;
  Z g0_prime(double z) const;
  ZJet jet(double z) const;  // g0 and derivatives up to order 8

  ComplexProfile sampled() const;

 private:
  Z prefix_moment(double z) const;  // int_0^z s^(dim-1) G ds

  SourceProfile G_;
  int n_;
  double h_;
  std::vector<Z> moment_;  // prefix moment at nodes
  std::vector<Z> g0_;      // g0 at nodes
};

// Spec-level entry point on a sampled G.
ComplexProfile solve_radial_ode(const ComplexProfile& G, int dim);

}  // namespace returnctrl
