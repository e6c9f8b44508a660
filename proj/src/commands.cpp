#include "returnctrl/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include <json.hpp>

#include "returnctrl/errors.hpp"
#include "returnctrl/hum.hpp"

namespace returnctrl {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

TrajectoryKind parse_kind(const std::string& s) {
  if (s == "cubic") return TrajectoryKind::CubicReal;
  if (s == "quadratic-complex") return TrajectoryKind::QuadraticComplex;
  throw ConfigError("config: kind must be 'cubic' or 'quadratic-complex', got '" + s + "'");
}

const char* kind_name(TrajectoryKind k) {
  return k == TrajectoryKind::CubicReal ? "cubic" : "quadratic-complex";
}

json config_json(const RunConfig& c) {
  return json{
      {"grid",
       {{"nx", c.grid.nx},
        {"nt", c.grid.nt},
        {"x_lo", c.grid.x_lo},
        {"x_hi", c.grid.x_hi},
        {"T", c.grid.T},
        {"theta", c.grid.theta}}},
      {"trajectory",
       {{"kind", kind_name(c.bump.kind)},
        {"bump_epsilon", c.bump.bump_epsilon},
        {"delta", c.bump.delta},
        {"reaction", c.bump.reaction},
        {"rho_radius", c.bump.rho_radius},
        {"center_t", c.bump.center_t},
        {"center_x", c.bump.center_x},
        {"omega_lo", c.bump.omega_lo},
        {"omega_hi", c.bump.omega_hi}}},
      {"control",
       {{"s", c.s},
        {"kappa", c.kappa},
        {"penalty_epsilon", c.penalty_epsilon},
        {"data_amplitude", c.data_amplitude},
        {"sweep", c.sweep}}},
      {"picard", {{"tol", c.picard_tol}, {"max_iter", c.picard_max_iter}, {"data_scale", c.data_scale}}},
      {"obstruction",
       {{"n_controls", c.n_controls},
        {"amplitude", c.amplitude},
        {"omega_lo", c.obs_omega_lo},
        {"omega_hi", c.obs_omega_hi}}},
      {"observability", {{"n_samples", c.n_samples}}},
      {"seed", c.seed},
  };
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("io: cannot open " + path);
  out << j.dump(2) << "\n";
}

// Timestamps live here so summary.json stays bit-identical across reruns.
void write_meta(const RunConfig& cfg, const std::string& command) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  write_json(cfg.out_dir + "/meta.json", json{{"command", command}, {"timestamp", buf}});
}

void ensure_out(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("io: cannot create output directory " + cfg.out_dir);
}

void dump_field(const RunConfig& cfg, const std::string& name, const ComplexField& f) {
  write_field_csv(cfg.out_dir + "/" + name + ".csv", f);
  if (cfg.binary) write_field_binary(cfg.out_dir + "/" + name + ".bin", f);
}

NonlinearProblem default_problem(const RunConfig& cfg) {
  NonlinearProblem p;
  p.g = Coupling::linear_v();
  p.traj = assemble_trajectory(cfg.bump, cfg.grid, p.g);
  p.u0.assign(std::size_t(cfg.grid.nx), Z{});
  p.v0.assign(std::size_t(cfg.grid.nx), Z{});
  return p;
}

// Smooth low-mode initial data: concentrated bumps put most of their energy
// on weakly observable modes and stall above the null-control tolerance.
void set_smooth_data(NonlinearProblem& p, double size) {
  const SpaceTimeGrid& g = p.traj.grid;
  double sup = 0.0;
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    p.u0[std::size_t(i)] = std::sin(M_PI * x) + 0.3 * std::sin(2.0 * M_PI * x);
    p.v0[std::size_t(i)] = std::sin(M_PI * x) - 0.2 * std::sin(3.0 * M_PI * x);
    sup = std::max({sup, std::abs(p.u0[std::size_t(i)]), std::abs(p.v0[std::size_t(i)])});
  }
  for (int i = 0; i < g.nx; ++i) {
    p.u0[std::size_t(i)] *= size / sup;
    p.v0[std::size_t(i)] *= size / sup;
  }
}

}  // namespace

RunConfig RunConfig::from_toml(const TomlTable& t) {
  static const std::set<std::string> known = {
      "grid.nx",        "grid.nt",         "grid.x_lo",
      "grid.x_hi",      "grid.T",          "grid.theta",
      "trajectory.kind", "trajectory.bump_epsilon", "trajectory.delta",
      "trajectory.reaction", "trajectory.rho_radius", "trajectory.center_t",
      "trajectory.center_x", "trajectory.omega_lo", "trajectory.omega_hi",
      "trajectory.z_grid_n", "trajectory.t_grid_n",
      "control.s",      "control.kappa",   "control.penalty_epsilon",
      "control.data_amplitude", "control.sweep",
      "picard.tol",     "picard.max_iter", "picard.data_scale",
      "obstruction.n_controls", "obstruction.amplitude",
      "obstruction.omega_lo", "obstruction.omega_hi",
      "observability.n_samples",
      "output.dir",     "output.binary",   "output.seed",
  };
  for (const std::string& k : t.keys())
    if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "'");
  RunConfig c;
  c.grid.nx = int(t.get_int("grid.nx", c.grid.nx));
  c.grid.nt = int(t.get_int("grid.nt", c.grid.nt));
  c.grid.x_lo = t.get_double("grid.x_lo", c.grid.x_lo);
  c.grid.x_hi = t.get_double("grid.x_hi", c.grid.x_hi);
  c.grid.T = t.get_double("grid.T", c.grid.T);
  c.grid.theta = t.get_double("grid.theta", c.grid.theta);

  c.bump.kind = parse_kind(t.get_string("trajectory.kind", "cubic"));
  c.bump.bump_epsilon = t.get_double("trajectory.bump_epsilon", c.bump.bump_epsilon);
  c.bump.delta = t.get_double("trajectory.delta", c.bump.delta);
  c.bump.reaction = t.get_double("trajectory.reaction", c.bump.reaction);
  c.bump.rho_radius = t.get_double("trajectory.rho_radius", c.bump.rho_radius);
  c.bump.center_t = t.get_double("trajectory.center_t", c.bump.center_t);
  c.bump.center_x = t.get_double("trajectory.center_x", c.bump.center_x);
  c.bump.omega_lo = t.get_double("trajectory.omega_lo", c.bump.omega_lo);
  c.bump.omega_hi = t.get_double("trajectory.omega_hi", c.bump.omega_hi);
  c.bump.z_grid_n = int(t.get_int("trajectory.z_grid_n", c.bump.z_grid_n));
  c.bump.t_grid_n = int(t.get_int("trajectory.t_grid_n", c.bump.t_grid_n));

  c.s = t.get_double("control.s", c.s);
  c.kappa = t.get_double("control.kappa", c.kappa);
  c.penalty_epsilon = t.get_double("control.penalty_epsilon", c.penalty_epsilon);
  c.data_amplitude = t.get_double("control.data_amplitude", c.data_amplitude);
  c.sweep = t.get_bool("control.sweep", c.sweep);

  c.picard_tol = t.get_double("picard.tol", c.picard_tol);
  c.picard_max_iter = int(t.get_int("picard.max_iter", c.picard_max_iter));
  c.data_scale = t.get_double("picard.data_scale", c.data_scale);

  c.n_controls = int(t.get_int("obstruction.n_controls", c.n_controls));
  c.amplitude = t.get_double("obstruction.amplitude", c.amplitude);
  c.obs_omega_lo = t.get_double("obstruction.omega_lo", c.obs_omega_lo);
  c.obs_omega_hi = t.get_double("obstruction.omega_hi", c.obs_omega_hi);

  c.n_samples = int(t.get_int("observability.n_samples", c.n_samples));

  c.out_dir = t.get_string("output.dir", c.out_dir);
  c.binary = t.get_bool("output.binary", c.binary);
  c.seed = std::uint64_t(t.get_int("output.seed", (long long)c.seed));
  return c;
}

void RunConfig::validate() const {
  grid.validate();
  bump.validate();
  if (!(s > 0.0)) throw ConfigError("config: control.s must be positive");
  if (!(penalty_epsilon > 0.0)) throw ConfigError("config: control.penalty_epsilon must be positive");
  if (!(picard_tol > 0.0)) throw ConfigError("config: picard.tol must be positive");
  if (picard_max_iter < 1) throw ConfigError("config: picard.max_iter must be >= 1");
  if (n_controls < 1) throw ConfigError("config: obstruction.n_controls must be >= 1");
  if (n_samples < 1) throw ConfigError("config: observability.n_samples must be >= 1");
  if (!(data_scale > 0.0 && data_scale <= 1.0))
    throw ConfigError("config: picard.data_scale must be in (0, 1]");
  if (out_dir.empty()) throw ConfigError("config: output.dir must not be empty");
}

void cmd_build_trajectory(const RunConfig& cfg) {
  cfg.validate();
  ensure_out(cfg);
  const Coupling g = Coupling::linear_v();
  const ReferenceTrajectory traj = assemble_trajectory(cfg.bump, cfg.grid, g);
  const VerifyReport rep = verify_trajectory(traj, g);

  dump_field(cfg, "u_bar", traj.u_bar);
  dump_field(cfg, "v_bar", traj.v_bar);
  dump_field(cfg, "h_bar", traj.h_bar);
  write_support_script(cfg.out_dir + "/support.gp", "u_bar.csv",
                       "support of the reference trajectory", 1e-12);
  write_heatmap_script(cfg.out_dir + "/u_bar.gp", "u_bar.csv", "|u_bar(t, x)|");

  json refinement = json::array();
  for (const auto& [scale, defect] : rep.refinement)
    refinement.push_back({{"step_scale", scale}, {"max_defect", defect}});
  write_json(cfg.out_dir + "/summary.json",
             json{{"config", config_json(cfg)},
                  {"defect_u_max", rep.defect_u_max},
                  {"defect_v_max", rep.defect_v_max},
                  {"defect_v_l2", rep.defect_v_l2},
                  {"order", rep.order},
                  {"refinement", refinement},
                  {"bump_epsilon_resolved", traj.config.bump_epsilon},
                  {"rho_resolved", traj.config.resolved_rho()},
                  {"support",
                   {{"t_lo", traj.support.t_lo},
                    {"t_hi", traj.support.t_hi},
                    {"x_lo", traj.support.x_lo},
                    {"x_hi", traj.support.x_hi}}}});
  write_meta(cfg, "build-trajectory");
}

void cmd_solve_control(const RunConfig& cfg) {
  cfg.validate();
  ensure_out(cfg);
  NonlinearProblem p = default_problem(cfg);
  const bool cx = p.traj.kind == TrajectoryKind::QuadraticComplex;
  const CoefficientSet coeffs = freeze_coefficients(p, ComplexPair(cfg.grid));
  const ControlWindow win = default_control_window(p.traj.config, p.traj.kind);
  const CarlemanWeight weight =
      build_weights(cfg.grid, cfg.s, win.omega1_lo, win.omega1_hi, cfg.kappa);

  std::vector<Z> a1(std::size_t(cfg.grid.nx)), a2(std::size_t(cfg.grid.nx));
  for (int i = 0; i < cfg.grid.nx; ++i) {
    a1[std::size_t(i)] = cfg.data_amplitude * std::sin(M_PI * cfg.grid.x(i));
    a2[std::size_t(i)] = cfg.data_amplitude * std::sin(M_PI * cfg.grid.x(i));
  }

  const ControlResult run = solve_penalized_control(
      cfg.grid, coeffs, a1, a2, weight, cfg.penalty_epsilon, win.t1, win.t2, win.omega_lo,
      win.omega_hi, cx);
  dump_field(cfg, "h", run.h);
  dump_field(cfg, "zeta_u", run.zeta.first);
  dump_field(cfg, "zeta_v", run.zeta.second);
  write_heatmap_script(cfg.out_dir + "/h.gp", "h.csv", "|h(t, x)|");

  json summary{{"config", config_json(cfg)},
               {"penalty_epsilon", run.penalty_epsilon},
               {"terminal_norm", run.terminal_norm},
               {"weighted_norm", run.weighted_norm},
               {"sup_norm", run.sup_norm},
               {"cg_iterations", run.cg_iterations},
               {"cg_residual", run.cg_residual},
               {"window",
                {{"t1", win.t1},
                 {"t2", win.t2},
                 {"omega_lo", win.omega_lo},
                 {"omega_hi", win.omega_hi}}}};

  if (cfg.sweep) {
    // Sweep tasks fan out across workers; a single-threaded finalizer writes
    // the merged table.
    const int n_eps = 7;
    std::vector<ControlResult> rows(static_cast<std::size_t>(n_eps));
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < n_eps; ++k)
      rows[std::size_t(k)] = solve_penalized_control(
          cfg.grid, coeffs, a1, a2, weight, std::pow(10.0, -(k + 2)), win.t1, win.t2,
          win.omega_lo, win.omega_hi, cx);
    std::ofstream sw(cfg.out_dir + "/sweep.csv");
    if (!sw) throw ConfigError("io: cannot open " + cfg.out_dir + "/sweep.csv");
    sw << "penalty_epsilon,terminal_norm,weighted_norm,sup_norm\n";
    json sweep = json::array();
    char line[256];
    for (const ControlResult& r : rows) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", r.penalty_epsilon,
                    r.terminal_norm, r.weighted_norm, r.sup_norm);
      sw << line;
      sweep.push_back({{"penalty_epsilon", r.penalty_epsilon},
                       {"terminal_norm", r.terminal_norm},
                       {"weighted_norm", r.weighted_norm},
                       {"sup_norm", r.sup_norm}});
    }
    summary["sweep"] = sweep;
  }
  write_json(cfg.out_dir + "/summary.json", summary);
  write_meta(cfg, "solve-control");
}

void cmd_run_nonlinear(const RunConfig& cfg) {
  cfg.validate();
  ensure_out(cfg);
  NonlinearProblem p = default_problem(cfg);
  set_smooth_data(p, cfg.data_scale * p.resolved_delta());
  PicardOptions opt;
  opt.s = cfg.s;
  opt.kappa = cfg.kappa;
  opt.penalty_epsilon = cfg.penalty_epsilon;
  opt.tol = cfg.picard_tol;
  opt.max_iter = cfg.picard_max_iter;
  const PicardResult r = run_picard(p, opt);

  dump_field(cfg, "u", r.u);
  dump_field(cfg, "v", r.v);
  dump_field(cfg, "h", r.h);
  write_heatmap_script(cfg.out_dir + "/u.gp", "u.csv", "|u(t, x)|");

  std::ofstream hist(cfg.out_dir + "/history.csv");
  if (!hist) throw ConfigError("io: cannot open " + cfg.out_dir + "/history.csv");
  hist << "k,update_norm,sup_norm,terminal_norm,cg_iterations\n";
  json history = json::array();
  char line[256];
  for (const PicardStep& st : r.history) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%d\n", st.k, st.update_norm,
                  st.sup_norm, st.terminal_norm, st.cg_iterations);
    hist << line;
    history.push_back({{"k", st.k},
                       {"update_norm", st.update_norm},
                       {"sup_norm", st.sup_norm},
                       {"terminal_norm", st.terminal_norm},
                       {"cg_iterations", st.cg_iterations}});
  }
  write_json(cfg.out_dir + "/summary.json",
             json{{"config", config_json(cfg)},
                  {"iterations", int(r.history.size())},
                  {"data_norm", r.data_norm},
                  {"terminal_norm", r.terminal_norm},
                  {"terminal_over_data", r.terminal_norm / r.data_norm},
                  {"history", history}});
  write_meta(cfg, "run-nonlinear");
}

void cmd_demo_obstruction(const RunConfig& cfg) {
  cfg.validate();
  ensure_out(cfg);
  SpaceTimeGrid g = cfg.grid;
  g.theta = 1.0;  // the comparison argument needs the M-matrix scheme
  std::vector<double> u0(std::size_t(g.nx), 0.0), v0(std::size_t(g.nx));
  for (int i = 0; i < g.nx; ++i) v0[std::size_t(i)] = std::sin(M_PI * g.x(i));
  const ObstructionReport rep =
      demo_obstruction(g, cfg.bump.reaction, u0, v0, cfg.obs_omega_lo, cfg.obs_omega_hi,
                       cfg.n_controls, cfg.seed, cfg.amplitude);

  std::ofstream gaps(cfg.out_dir + "/gaps.csv");
  if (!gaps) throw ConfigError("io: cannot open " + cfg.out_dir + "/gaps.csv");
  gaps << "control,min_gap\n";
  char line[128];
  for (std::size_t k = 0; k < rep.gaps.size(); ++k) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", k, rep.gaps[k]);
    gaps << line;
  }
  write_json(cfg.out_dir + "/summary.json",
             json{{"config", config_json(cfg)},
                  {"n_controls", rep.n_controls},
                  {"min_gap", rep.min_gap},
                  {"min_terminal", rep.min_terminal},
                  {"free_min_terminal", rep.free_min_terminal}});
  write_meta(cfg, "demo-obstruction");
}

void cmd_observability(const RunConfig& cfg) {
  cfg.validate();
  ensure_out(cfg);
  NonlinearProblem p = default_problem(cfg);
  const bool cx = p.traj.kind == TrajectoryKind::QuadraticComplex;
  const CoefficientSet coeffs = freeze_coefficients(p, ComplexPair(cfg.grid));
  const ControlWindow win = default_control_window(p.traj.config, p.traj.kind);

  const ObservabilityStats base = estimate_observability(
      cfg.grid, coeffs, win.omega_lo, win.omega_hi, cfg.n_samples, cfg.seed, cx);
  const ObservabilityStats doubled = estimate_observability(
      cfg.grid, coeffs, win.omega_lo, win.omega_hi, 2 * cfg.n_samples, cfg.seed, cx);

  std::ofstream ratios(cfg.out_dir + "/ratios.csv");
  if (!ratios) throw ConfigError("io: cannot open " + cfg.out_dir + "/ratios.csv");
  ratios << "sample,ratio\n";
  char line[128];
  for (std::size_t k = 0; k < doubled.ratios.size(); ++k) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", k, doubled.ratios[k]);
    ratios << line;
  }
  write_json(cfg.out_dir + "/summary.json",
             json{{"config", config_json(cfg)},
                  {"n_samples", base.n_samples},
                  {"max_ratio", base.max_ratio},
                  {"max_ratio_doubled", doubled.max_ratio},
                  {"stability", doubled.max_ratio / base.max_ratio},
                  {"mean_finite", base.mean_finite},
                  {"divergent", base.divergent || doubled.divergent}});
  write_meta(cfg, "observability");
}

int dispatch(const std::string& command, const RunConfig& cfg) {
  auto record = [&](const char* type, const std::string& msg, int code) {
    try {
      ensure_out(cfg);
      write_json(cfg.out_dir + "/error.json",
                 json{{"error", type}, {"message", msg}, {"exit_code", code}});
    } catch (...) {
      // The error itself still reaches the caller through the exit code.
    }
    std::fprintf(stderr, "error (%s): %s\n", type, msg.c_str());
    return code;
  };
  try {
    if (command == "build-trajectory")
      cmd_build_trajectory(cfg);
    else if (command == "solve-control")
      cmd_solve_control(cfg);
    else if (command == "run-nonlinear")
      cmd_run_nonlinear(cfg);
    else if (command == "demo-obstruction")
      cmd_demo_obstruction(cfg);
    else if (command == "observability")
      cmd_observability(cfg);
    else
      throw ConfigError("unknown command '" + command + "'");
    return 0;
  } catch (const ConfigError& e) {
    return record("config", e.what(), 2);
  } catch (const ConstructionError& e) {
    return record("construction", e.what(), 3);
  } catch (const ConvergenceError& e) {
    return record("convergence", e.what(), 4);
  }
}

}  // namespace returnctrl
