#pragma once

#include <complex>
#include <vector>

#include "returnctrl/jet.hpp"
#include "returnctrl/profile.hpp"

namespace returnctrl {

enum class TrajectoryKind { CubicReal, QuadraticComplex };

using Z = std::complex<double>;

// Source term G of the radial ODE g0'' + (N-1)/z g0' = G.  Piecewise:
// the constant -2N head, the (z-1/2)^p core (p = 3 or 2 by kind), the
// exponential tail, zero beyond 1, and two free segments solved so that the
// moment constraints hold and the sign conditions are met at every node.
// Stored with complex coefficients; the cubic-real kind has zero imaginary
// parts throughout.
class SourceProfile {
 public:
  SourceProfile(int dim, double delta, TrajectoryKind kind, int grid_n = 2049);

  int dim() const { return dim_; }
  double delta() const { return delta_; }
  TrajectoryKind kind() const { return kind_; }
  int core_power() const { return kind_ == TrajectoryKind::CubicReal ? 3 : 2; }

  Z operator()(double z) const;  // scalar fast path
  ZJet jet(double z) const;

  // Residuals of the two moment constraints, evaluated by quadrature with
  // `panels` panels per piece (doubled resolution serves as the oracle).
  Z moment_radial(int panels = 192) const;    // int_0^1 s^(N-1) G ds
  Z moment_normalization(int panels = 192) const;
  Z normalization_target() const;

  // Sampled view on [0, 1].
  ComplexProfile sampled() const;

 private:
  struct FreeSegment {
    double a = 0.0, b = 0.0;
    // Base: Taylor polynomials of the adjacent pieces about a and b, joined
    // by a C-infinity smoothstep over [blend_lo, blend_lo + blend_w].
    std::vector<Z> taylor_a, taylor_b;
    double blend_lo = 0.0, blend_w = 1.0;
    Z bump_amp{};      // common amplitude of the 6-bump interior plateau
    Z template_amp{};  // amplitude of the (z-a)^5 (b-z)^5 template
    double bump_halfwidth = 0.0;
    double bump_center(int j) const { return a + (b - a) * double(j + 1) / 7.0; }
  };

  ZJet piece_jet(double z) const;
  ZJet segment_jet(const FreeSegment& s, double z) const;
  void build_bases();
  void solve_constraints(double tau, double tau_im);
  bool signs_ok(std::string* violated) const;

  int dim_;
  double delta_;
  TrajectoryKind kind_;
  int grid_n_;
  FreeSegment left_, right_;
};

// Spec-level entry point: constructs G and returns the sampled profile.
ComplexProfile construct_source_profile(int dim, double delta, TrajectoryKind kind);

}  // namespace returnctrl
