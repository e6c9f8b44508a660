// Benchmark of the OpenMP-parallel kernels against their serial reference
// implementations: dense Gramian assembly and the observability sampler.
// Verifies bitwise agreement before reporting timings.
#include <chrono>
#include <cstdio>
#include <vector>

#include "returnctrl/hum.hpp"
#include "returnctrl/nonlinear.hpp"
#include "returnctrl/threads.hpp"
#include "returnctrl/trajectory.hpp"

using namespace returnctrl;

namespace {

double seconds(std::chrono::steady_clock::time_point a,
               std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace

int main() {
  SpaceTimeGrid grid;
  grid.nx = 60;
  grid.nt = 120;
  grid.theta = 0.5;

  BumpConfig bcfg;
  NonlinearProblem p;
  p.g = Coupling::linear_v();
  p.traj = assemble_trajectory(bcfg, grid, p.g);
  p.u0.assign(std::size_t(grid.nx), Z{});
  p.v0.assign(std::size_t(grid.nx), Z{});
  const CoefficientSet coeffs = freeze_coefficients(p, ComplexPair(grid));
  const ControlWindow win = default_control_window(p.traj.config, p.traj.kind);
  const CarlemanWeight weight = build_weights(grid, 2e-4, win.omega1_lo, win.omega1_hi);
  const HumSystem sys(grid, coeffs, weight, win.t1, win.t2, win.omega_lo, win.omega_hi, false);

  std::printf("workers: %d\n", worker_count());

  auto t0 = std::chrono::steady_clock::now();
  const std::vector<Z> par = sys.dense_matrix(1e-6);
  auto t1 = std::chrono::steady_clock::now();
  const std::vector<Z> ser = sys.dense_matrix_serial(1e-6);
  auto t2 = std::chrono::steady_clock::now();
  bool same_dense = par.size() == ser.size();
  for (std::size_t i = 0; same_dense && i < par.size(); ++i) same_dense = par[i] == ser[i];
  std::printf("dense Gramian %dx%d: parallel %.3fs, serial %.3fs, speedup %.2fx, %s\n",
              sys.dim(), sys.dim(), seconds(t0, t1), seconds(t1, t2),
              seconds(t1, t2) / seconds(t0, t1), same_dense ? "bitwise identical" : "MISMATCH");

  t0 = std::chrono::steady_clock::now();
  const ObservabilityStats sp =
      estimate_observability(grid, coeffs, win.omega_lo, win.omega_hi, 64, 7, false);
  t1 = std::chrono::steady_clock::now();
  const ObservabilityStats ss =
      estimate_observability_serial(grid, coeffs, win.omega_lo, win.omega_hi, 64, 7, false);
  t2 = std::chrono::steady_clock::now();
  bool same = sp.ratios == ss.ratios && sp.max_ratio == ss.max_ratio;
  std::printf("observability (64 samples): parallel %.3fs, serial %.3fs, speedup %.2fx, %s\n",
              seconds(t0, t1), seconds(t1, t2), seconds(t1, t2) / seconds(t0, t1),
              same ? "bitwise identical" : "MISMATCH");
  return (same_dense && same) ? 0 : 1;
}
