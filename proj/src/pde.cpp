#include "returnctrl/pde.hpp"

#include <cmath>
#include <string>
#include <tuple>

#include "returnctrl/errors.hpp"
#include "returnctrl/linalg.hpp"

namespace returnctrl {

namespace {

using M2 = Mat2<Z>;
using V2 = Vec2<Z>;

// One theta-step of the coupled system: solves the block-tridiagonal system
//   -s x_{i-1} + D_i x_i - s x_{i+1} = r_i,  s = theta dt / dx^2 (times I),
// with D_i = (1 + 2s) I - theta dt C_i, by block Thomas elimination.
void block_step(const std::vector<M2>& C, double theta_dt, double s, std::vector<V2>& r) {
  const int nx = int(r.size());
  std::vector<M2> dinv(nx);
  const M2 eye = M2::identity();
  M2 d = (Z(1.0 + 2.0 * s) * eye) - Z(theta_dt) * C[0];
  dinv[0] = d.inverse();
  for (int i = 1; i < nx; ++i) {
    d = (Z(1.0 + 2.0 * s) * eye) - Z(theta_dt) * C[i] - Z(s * s) * dinv[i - 1];
    dinv[i] = d.inverse();
    r[i] = r[i] + Z(s) * (dinv[i - 1] * r[i - 1]);
  }
  r[nx - 1] = dinv[nx - 1] * r[nx - 1];
  for (int i = nx - 2; i >= 0; --i) r[i] = dinv[i] * (r[i] + Z(s) * r[i + 1]);
}

// theta-blended coupling block for the step n -> n+1.
M2 blend_block(const CoefficientSet& c, double theta, int n, int i) {
  auto at = [&](const ComplexField& f) {
    return theta * f.at(n + 1, i) + (1.0 - theta) * f.at(n, i);
  };
  return {at(c.a11), at(c.a12), at(c.a21), at(c.a22)};
}

M2 adjoint_block(const M2& m, bool conjugate) {
  M2 t = m.transposed();
  if (conjugate) {
    t.a = std::conj(t.a);
    t.b = std::conj(t.b);
    t.c = std::conj(t.c);
    t.d = std::conj(t.d);
  }
  return t;
}

}  // namespace

CoefficientSet CoefficientSet::constants(const SpaceTimeGrid& g, Z c11, Z c12, Z c21, Z c22) {
  CoefficientSet c;
  c.a11 = ComplexField(g);
  c.a12 = ComplexField(g);
  c.a21 = ComplexField(g);
  c.a22 = ComplexField(g);
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      c.a11.at(n, i) = c11;
      c.a12.at(n, i) = c12;
      c.a21.at(n, i) = c21;
      c.a22.at(n, i) = c22;
    }
  c.M_bar = std::max({std::abs(c11), std::abs(c12), std::abs(c21), std::abs(c22), 1.0});
  return c;
}

void CoefficientSet::check(bool complex_kind) const {
  if (!(M_bar > 0.0)) throw ConstructionError("coefficients: M_bar must be positive");
  const SpaceTimeGrid& g = a11.grid();
  const double tol = 1e-12 * M_bar;
  const ComplexField* all[] = {&a11, &a12, &a21, &a22};
  const char* names[] = {"a11", "a12", "a21", "a22"};
  for (int k = 0; k < 4; ++k)
    for (int n = 0; n <= g.nt; ++n)
      for (int i = 0; i < g.nx; ++i)
        if (std::abs(all[k]->at(n, i)) > M_bar + tol)
          throw ConstructionError(std::string("coefficients: |") + names[k] +
                                  "| exceeds M_bar at t=" + std::to_string(g.t(n)) +
                                  ", x=" + std::to_string(g.x(i)));
  const double lower = 1.0 / M_bar;
  int i0, i1;
  try {
    std::tie(i0, i1) = g.node_range(window.x_lo, window.x_hi);
  } catch (const GeometryError&) {
    throw ConstructionError("coefficients: window contains no grid nodes");
  }
  bool any = false;
  for (int n = 0; n <= g.nt; ++n) {
    const double t = g.t(n);
    if (t < window.t1 - 1e-12 || t > window.t2 + 1e-12) continue;
    for (int i = i0; i < i1; ++i) {
      any = true;
      const Z a = a21.at(n, i);
      const double v = complex_kind ? std::abs(a.imag()) : a.real();
      if (v < lower - tol)
        throw ConstructionError(std::string("coefficients: window bound on ") +
                                (complex_kind ? "|Im a21|" : "a21") +
                                " fails at t=" + std::to_string(t) +
                                ", x=" + std::to_string(g.x(i)));
    }
  }
  if (!any) throw ConstructionError("coefficients: window contains no grid nodes");
}

SpaceTimeGrid time_subgrid(const SpaceTimeGrid& grid, int n0, int n1) {
  if (n0 < 0 || n1 > grid.nt || n1 - n0 < 2)
    throw ConfigError("time_subgrid: window must cover at least two steps");
  SpaceTimeGrid g = grid;
  g.nt = n1 - n0;
  g.T = double(n1 - n0) * grid.dt();
  return g;
}

CoefficientSet slice_time(const CoefficientSet& coeffs, int n0, int n1) {
  const SpaceTimeGrid& g = coeffs.a11.grid();
  const SpaceTimeGrid sub = time_subgrid(g, n0, n1);
  CoefficientSet out;
  out.M_bar = coeffs.M_bar;
  out.window = coeffs.window;
  const ComplexField* src[] = {&coeffs.a11, &coeffs.a12, &coeffs.a21, &coeffs.a22};
  ComplexField* dst[] = {&out.a11, &out.a12, &out.a21, &out.a22};
  for (int k = 0; k < 4; ++k) {
    *dst[k] = ComplexField(sub);
    for (int n = 0; n <= sub.nt; ++n)
      for (int i = 0; i < g.nx; ++i) dst[k]->at(n, i) = src[k]->at(n0 + n, i);
  }
  return out;
}

ComplexPair solve_forward(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                          const std::vector<Z>& z1_0, const std::vector<Z>& z2_0,
                          const ComplexField* control, double omega_lo, double omega_hi,
                          const ComplexPair* source) {
  grid.validate();
  if (int(z1_0.size()) != grid.nx || int(z2_0.size()) != grid.nx)
    throw ConfigError("solve_forward: initial data size mismatch");
  const double dt = grid.dt(), dx = grid.dx(), th = grid.theta;
  const double alpha = dt / (dx * dx);
  int w0 = 0, w1 = 0;
  if (control) std::tie(w0, w1) = grid.node_range(omega_lo, omega_hi);

  ComplexPair out(grid);
  for (int i = 0; i < grid.nx; ++i) {
    out.first.at(0, i) = z1_0[i];
    out.second.at(0, i) = z2_0[i];
  }

  std::vector<M2> C(grid.nx);
  std::vector<V2> r(grid.nx);
  for (int n = 0; n < grid.nt; ++n) {
    for (int i = 0; i < grid.nx; ++i) C[i] = blend_block(coeffs, th, n, i);
    for (int i = 0; i < grid.nx; ++i) {
      const V2 z{out.first.at(n, i), out.second.at(n, i)};
      const V2 zl = i > 0 ? V2{out.first.at(n, i - 1), out.second.at(n, i - 1)} : V2{};
      const V2 zr = i + 1 < grid.nx ? V2{out.first.at(n, i + 1), out.second.at(n, i + 1)} : V2{};
      V2 rhs = z + Z((1.0 - th) * alpha) * (zl - Z(2.0) * z + zr) +
               Z((1.0 - th) * dt) * (C[i] * z);
      if (control && i >= w0 && i < w1) rhs.x += dt * control->at(n + 1, i);
      if (source) {
        rhs.x += dt * (th * source->first.at(n + 1, i) + (1.0 - th) * source->first.at(n, i));
        rhs.y += dt * (th * source->second.at(n + 1, i) + (1.0 - th) * source->second.at(n, i));
      }
      r[i] = rhs;
    }
    block_step(C, th * dt, th * alpha, r);
    for (int i = 0; i < grid.nx; ++i) {
      out.first.at(n + 1, i) = r[i].x;
      out.second.at(n + 1, i) = r[i].y;
    }
  }
  return out;
}

ComplexPair solve_adjoint(const SpaceTimeGrid& grid, const CoefficientSet& coeffs,
                          const std::vector<Z>& p1_T, const std::vector<Z>& p2_T,
                          bool conjugate) {
  grid.validate();
  if (int(p1_T.size()) != grid.nx || int(p2_T.size()) != grid.nx)
    throw ConfigError("solve_adjoint: final data size mismatch");
  const double dt = grid.dt(), dx = grid.dx(), th = grid.theta;
  const double alpha = dt / (dx * dx);

  ComplexPair out(grid);
  for (int i = 0; i < grid.nx; ++i) {
    out.first.at(grid.nt, i) = p1_T[i];
    out.second.at(grid.nt, i) = p2_T[i];
  }

  std::vector<M2> C(grid.nx);
  std::vector<V2> r(grid.nx);
  for (int n = grid.nt - 1; n >= 0; --n) {
    if (n == grid.nt - 1) {
      // q^{nt-1} solves the adjoint of the last implicit operator applied to
      // the final datum; later steps propagate through the adjoint of the
      // explicit operator of the step above.
      for (int i = 0; i < grid.nx; ++i)
        r[i] = V2{out.first.at(grid.nt, i), out.second.at(grid.nt, i)};
    } else {
      std::vector<M2> Cn(grid.nx);
      for (int i = 0; i < grid.nx; ++i)
        Cn[i] = adjoint_block(blend_block(coeffs, th, n + 1, i), conjugate);
      for (int i = 0; i < grid.nx; ++i) {
        const V2 q{out.first.at(n + 1, i), out.second.at(n + 1, i)};
        const V2 ql = i > 0 ? V2{out.first.at(n + 1, i - 1), out.second.at(n + 1, i - 1)} : V2{};
        const V2 qr = i + 1 < grid.nx
                          ? V2{out.first.at(n + 1, i + 1), out.second.at(n + 1, i + 1)}
                          : V2{};
        r[i] = q + Z((1.0 - th) * alpha) * (ql - Z(2.0) * q + qr) +
               Z((1.0 - th) * dt) * (Cn[i] * q);
      }
    }
    for (int i = 0; i < grid.nx; ++i)
      C[i] = adjoint_block(blend_block(coeffs, th, n, i), conjugate);
    block_step(C, th * dt, th * alpha, r);
    for (int i = 0; i < grid.nx; ++i) {
      out.first.at(n, i) = r[i].x;
      out.second.at(n, i) = r[i].y;
    }
  }
  return out;
}

Z control_pairing(const SpaceTimeGrid& grid, const ComplexField& control, double omega_lo,
                  double omega_hi, const ComplexPair& adjoint, bool conjugate) {
  const double dt = grid.dt(), dx = grid.dx();
  auto [w0, w1] = grid.node_range(omega_lo, omega_hi);
  Z acc{};
  for (int n = 0; n < grid.nt; ++n)
    for (int i = w0; i < w1; ++i) {
      const Z h = control.at(n + 1, i);
      const Z q = adjoint.first.at(n, i);
      acc += h * (conjugate ? std::conj(q) : q);
    }
  return dt * dx * acc;
}

Z slice_pairing(const SpaceTimeGrid& grid, const std::vector<Z>& a, const std::vector<Z>& b,
                bool conjugate) {
  Z acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * (conjugate ? std::conj(b[i]) : b[i]);
  return grid.dx() * acc;
}

RealField solve_scalar_implicit(const SpaceTimeGrid& grid, double R,
                                const std::vector<double>& v0, const RealField* source) {
  grid.validate();
  if (int(v0.size()) != grid.nx) throw ConfigError("solve_scalar_implicit: data size mismatch");
  const double dt = grid.dt(), dx = grid.dx();
  const double alpha = dt / (dx * dx);
  if (dt * R >= 1.0)
    throw ConstructionError("solve_scalar_implicit: dt * R >= 1 breaks the M-matrix property");

  RealField out(grid);
  for (int i = 0; i < grid.nx; ++i) out.at(0, i) = v0[i];

  // Scalar Thomas factors are time-independent: diag 1 + 2 alpha - dt R,
  // off-diagonals -alpha.
  const double diag = 1.0 + 2.0 * alpha - dt * R;
  std::vector<double> dinv(grid.nx), r(grid.nx);
  dinv[0] = 1.0 / diag;
  for (int i = 1; i < grid.nx; ++i) dinv[i] = 1.0 / (diag - alpha * alpha * dinv[i - 1]);

  for (int n = 0; n < grid.nt; ++n) {
    for (int i = 0; i < grid.nx; ++i)
      r[i] = out.at(n, i) + (source ? dt * source->at(n + 1, i) : 0.0);
    for (int i = 1; i < grid.nx; ++i) r[i] += alpha * dinv[i - 1] * r[i - 1];
    r[grid.nx - 1] *= dinv[grid.nx - 1];
    for (int i = grid.nx - 2; i >= 0; --i) r[i] = dinv[i] * (r[i] + alpha * r[i + 1]);
    for (int i = 0; i < grid.nx; ++i) out.at(n + 1, i) = r[i];
  }
  return out;
}

}  // namespace returnctrl
