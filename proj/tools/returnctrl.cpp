#include <CLI11.hpp>

#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "returnctrl/commands.hpp"
#include "returnctrl/errors.hpp"
#include "returnctrl/threads.hpp"

namespace {

using returnctrl::RunConfig;

struct Overrides {
  std::string config_path, out_dir, grid, kind;
  unsigned long long seed = 0;
  double penalty_epsilon = 0.0, s = 0.0;
  bool has_seed = false, has_eps = false, has_s = false;
};

void add_common_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "TOML config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", ov.out_dir, "output directory");
  cmd->add_option("--seed", ov.seed, "RNG seed")->each([&](const std::string&) { ov.has_seed = true; });
  cmd->add_option("--penalty-epsilon", ov.penalty_epsilon, "HUM penalty parameter")
      ->each([&](const std::string&) { ov.has_eps = true; });
  cmd->add_option("--s", ov.s, "Carleman weight parameter")
      ->each([&](const std::string&) { ov.has_s = true; });
  cmd->add_option("--grid", ov.grid, "grid as NX,NT");
  cmd->add_option("--kind", ov.kind, "trajectory kind")
      ->check(CLI::IsMember({"cubic", "quadratic-complex"}));
}

RunConfig make_config(const Overrides& ov) {
  RunConfig cfg;
  if (!ov.config_path.empty())
    cfg = RunConfig::from_toml(returnctrl::TomlTable::parse_file(ov.config_path));
  if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
  if (ov.has_seed) cfg.seed = ov.seed;
  if (ov.has_eps) cfg.penalty_epsilon = ov.penalty_epsilon;
  if (ov.has_s) cfg.s = ov.s;
  if (!ov.grid.empty()) {
    int nx = 0, nt = 0;
    if (std::sscanf(ov.grid.c_str(), "%d,%d", &nx, &nt) != 2)
      throw returnctrl::ConfigError("--grid expects NX,NT, got '" + ov.grid + "'");
    cfg.grid.nx = nx;
    cfg.grid.nt = nt;
  }
  if (ov.kind == "cubic") cfg.bump.kind = returnctrl::TrajectoryKind::CubicReal;
  if (ov.kind == "quadratic-complex")
    cfg.bump.kind = returnctrl::TrajectoryKind::QuadraticComplex;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
  omp_set_num_threads(returnctrl::worker_count());
#endif

  CLI::App app{"returnctrl: return-method null-controllability workbench"};
  app.require_subcommand(1);
  Overrides ov;
  const char* names[] = {"build-trajectory", "solve-control", "run-nonlinear",
                         "demo-obstruction", "observability"};
  const char* blurbs[] = {
      "build and verify the reference trajectory",
      "solve one penalized control problem and the penalty sweep",
      "run the Picard iteration to a null control of the nonlinear system",
      "show the sign obstruction of the u^2-coupled system",
      "estimate the empirical observability ratio",
  };
  for (int i = 0; i < 5; ++i) add_common_flags(app.add_subcommand(names[i], blurbs[i]), ov);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = make_config(ov);
    return returnctrl::dispatch(app.get_subcommands().front()->get_name(), cfg);
  } catch (const returnctrl::ConfigError& e) {
    std::fprintf(stderr, "error (config): %s\n", e.what());
    return 2;
  }
}
