#pragma once

#include <cstdint>
#include <string>

#include "returnctrl/io.hpp"
#include "returnctrl/nonlinear.hpp"
#include "returnctrl/trajectory.hpp"

namespace returnctrl {

// One file (plus flag overrides) fully determines a run.  Unknown keys are
// rejected so typos fail loudly instead of silently running defaults.
struct RunConfig {
  BumpConfig bump;
  SpaceTimeGrid grid{0.0, 1.0, 200, 1.0, 400, 0.5};

  // solve-control / run-nonlinear
  double s = 2e-4;
  double kappa = 0.05;
  double penalty_epsilon = 1e-8;
  double data_amplitude = 1.0;  // solve-control initial-data scale
  bool sweep = true;            // solve-control: also run the penalty sweep
  double picard_tol = 1e-10;
  int picard_max_iter = 15;
  double data_scale = 0.99;  // run-nonlinear data size, fraction of delta

  // demo-obstruction
  int n_controls = 32;
  double amplitude = 1.0;
  double obs_omega_lo = 0.3;
  double obs_omega_hi = 0.7;

  // observability
  int n_samples = 64;

  std::string out_dir = "out";
  bool binary = false;  // also write binary field dumps
  std::uint64_t seed = 1;

  static RunConfig from_toml(const TomlTable& t);
  void validate() const;
};

// Command implementations.  Each writes its artifacts under out_dir: a
// deterministic summary.json (bit-identical for identical config + seed),
// field/table dumps, gnuplot scripts, and a meta.json holding the only
// nondeterministic bits (timestamp).  Errors propagate as the library
// exception types.
void cmd_build_trajectory(const RunConfig& cfg);
void cmd_solve_control(const RunConfig& cfg);
void cmd_run_nonlinear(const RunConfig& cfg);
void cmd_demo_obstruction(const RunConfig& cfg);
void cmd_observability(const RunConfig& cfg);

// Runs the named command, mapping exceptions to the exit-code contract
// (0 success, 2 config, 3 construction, 4 convergence) and recording failures
// in out_dir/error.json.
int dispatch(const std::string& command, const RunConfig& cfg);

}  // namespace returnctrl
