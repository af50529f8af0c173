#include "ascent/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace ascent::cli {

namespace {

using json = nlohmann::json;

constexpr double kDeg = M_PI / 180.0;
constexpr const char* kSolutionHeader =
    "phase,node,tau,duration_s,t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,m_kg,ux_mps2,uy_mps2,uz_mps2,"
    "un_mps2";

/// Typed access to one JSON object that remembers its path for messages.
class Block {
 public:
  Block(const json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "must be an object");
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.count(key)) throw ConfigError("unknown key '" + prefix() + key + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string child(const std::string& key) const { return prefix() + key; }

  void get(const std::string& key, double& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError("'" + child(key) + "' must be a number");
    out = v.get<double>();
  }
  void get(const std::string& key, int& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError("'" + child(key) + "' must be an integer");
    out = v.get<int>();
  }
  void get(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError("'" + child(key) + "' must be true or false");
    out = v.get<bool>();
  }
  void get(const std::string& key, std::vector<double>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError("'" + child(key) + "' must be an array of numbers");
    out.clear();
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError("'" + child(key) + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
  }

 private:
  std::string prefix() const { return path_.empty() ? "" : path_ + "."; }
  std::string where() const { return path_.empty() ? "config " : "'" + path_ + "' "; }

  const json& j_;
  std::string path_;
};

void parse_earth(const Block& b, RunConfig& c) {
  b.get("mu", c.earth.mu);
  b.get("r_earth", c.earth.r_earth);
  b.get("omega", c.earth.omega);
  b.get("atmosphere", c.atmosphere);
}

void parse_vehicle(const Block& b, RunConfig& c) {
  b.get("fairing_mass", c.vehicle.fairing_mass);
  b.get("drag_coefficient", c.vehicle.drag_coefficient);
  b.get("reference_area", c.vehicle.reference_area);
  if (!b.has("stages")) return;
  const json& st = b.at("stages");
  if (!st.is_array() || st.size() != c.vehicle.stages.size()) {
    throw ConfigError("'vehicle.stages' must be an array of " +
                      std::to_string(c.vehicle.stages.size()) + " stage objects");
  }
  for (std::size_t k = 0; k < st.size(); ++k) {
    const Block s(st[k], b.child("stages") + "[" + std::to_string(k) + "]",
                  {"propellant_mass", "dry_mass", "burn_time", "thrust_vac_ignition",
                   "thrust_vac_burnout", "mass_flow_ignition", "mass_flow_burnout",
                   "nozzle_exit_area"});
    Stage& g = c.vehicle.stages[k];
    s.get("propellant_mass", g.propellant_mass);
    s.get("dry_mass", g.dry_mass);
    s.get("burn_time", g.burn_time);
    s.get("thrust_vac_ignition", g.thrust_vac_ignition);
    s.get("thrust_vac_burnout", g.thrust_vac_burnout);
    s.get("mass_flow_ignition", g.mass_flow_ignition);
    s.get("mass_flow_burnout", g.mass_flow_burnout);
    s.get("nozzle_exit_area", g.nozzle_exit_area);
  }
}

void parse_mission(const Block& b, RunConfig& c) {
  MissionConfig& m = c.mission;
  b.get("target_altitude", m.target_altitude);
  b.get("inclination_deg", m.inclination_deg);
  b.get("launch_latitude_deg", m.launch_latitude_deg);
  b.get("splash_constrained", m.splash_constrained);
  b.get("splash_latitude_deg", m.splash_latitude_deg);
  b.get("heat_flux_max", m.heat_flux_max);
  b.get("fixed_durations", c.schedule.fixed_durations);
  b.get("return_duration_guess", c.schedule.return_guess);
}

void parse_mesh(const Block& b, RunConfig& c) {
  if (!b.has("orders")) return;
  const json& o = b.at("orders");
  const std::string key = b.child("orders");
  if (!o.is_array()) throw ConfigError("'" + key + "' must be an array of per-phase order lists");
  c.schedule.meshes.clear();
  for (const json& phase : o) {
    if (!phase.is_array() || phase.empty()) {
      throw ConfigError("'" + key + "' entries must be non-empty arrays of integers");
    }
    MeshSpec spec;
    for (const json& p : phase) {
      if (!p.is_number_integer()) throw ConfigError("'" + key + "' entries must be integers");
      spec.orders.push_back(p.get<int>());
    }
    c.schedule.meshes.push_back(spec);
  }
}

void parse_guess(const Block& b, RunConfig& c) {
  b.get("payload_mass", c.guess.payload_mass);
  b.get("kick_angle_deg", c.guess.kick_angle);
  b.get("coast_duration", c.guess.coast_duration);
  b.get("second_burn_duration", c.guess.second_burn_duration);
}

void parse_solver(const Block& b, socp::SolverSettings& s) {
  b.get("tol", s.tol);
  b.get("infeasibility_tol", s.infeasibility_tol);
  b.get("max_iters", s.max_iters);
  b.get("static_regularization", s.static_regularization);
  b.get("refinement_steps", s.refinement_steps);
  b.get("equilibration_sweeps", s.equilibration_sweeps);
  b.get("verbose", s.verbose);
}

void parse_scvx(const Block& b, RunConfig& c) {
  ScvxConfig& s = c.scvx;
  b.get("lambda_delta_coast", s.lambda_delta_coast);
  b.get("lambda_delta_burn", s.lambda_delta_burn);
  b.get("lambda_q", s.lambda_q);
  b.get("lambda_w", s.lambda_w);
  b.get("tol", s.tol);
  b.get("filter_weights", s.filter_weights);
  b.get("delta_max_coast", s.delta_max_coast);
  b.get("delta_max_burn", s.delta_max_burn);
  b.get("trust_contraction", s.trust_contraction);
  b.get("max_iters", s.max_iters);
  b.get("reference_mass", s.reference_mass);
  if (b.has("solver")) {
    parse_solver(Block(b.at("solver"), b.child("solver"),
                       {"tol", "infeasibility_tol", "max_iters", "static_regularization",
                        "refinement_steps", "equilibration_sweeps", "verbose"}),
                 s.solver);
  }
}

void parse_sweep(const Block& b, RunConfig& c) {
  SweepConfig& s = c.sweep;
  if (b.has("latitudes_deg") && b.has("range_deg")) {
    throw ConfigError("'sweep' takes either latitudes_deg or range_deg, not both");
  }
  b.get("latitudes_deg", s.latitudes_deg);
  if (b.has("range_deg")) {
    const Block r(b.at("range_deg"), b.child("range_deg"), {"start", "stop", "step"});
    if (!r.has("start") || !r.has("stop") || !r.has("step")) {
      throw ConfigError("'sweep.range_deg' needs start, stop and step");
    }
    double start = 0.0, stop = 0.0, step = 0.0;
    r.get("start", start);
    r.get("stop", stop);
    r.get("step", step);
    if (!(step > 0.0) || stop < start) {
      throw ConfigError("'sweep.range_deg' needs step > 0 and stop >= start");
    }
    s.latitudes_deg.clear();
    const long n = std::lround(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k) s.latitudes_deg.push_back(start + k * step);
  }
  b.get("chain", s.chain);
  b.get("threads", s.threads);
}

std::string status_text(ScvxStatus s) { return to_string(s); }

int exit_code(ScvxStatus s) {
  switch (s) {
    case ScvxStatus::kConverged:
      return kExitSuccess;
    case ScvxStatus::kMaxIterations:
      return kExitNotConverged;
    case ScvxStatus::kSolverFailure:
      break;
  }
  return kExitFailure;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void propagate_into(SolveOutcome& o, const Dynamics& dyn) {
  try {
    o.report = propagate_ascent(o.result.solution.traj, o.plan, dyn, true);
  } catch (const std::exception& e) {
    o.propagation_error = e.what();
  }
}

Summary solve_summary(const SolveOutcome& o, const RunConfig& config) {
  const ScvxIterate& s = o.result.solution;
  Summary out;
  out.emplace_back("status", status_text(o.result.status));
  out.emplace_back("iterations", std::to_string(o.result.history.size()));
  if (o.base) out.emplace_back("warm_start_iterations", std::to_string(o.base->history.size()));
  out.emplace_back("payload_kg", format_number(payload_mass(s.traj, config.vehicle)));
  for (std::size_t i = 0; i < o.plan.size(); ++i) {
    if (!o.plan.phases[i].free_time) continue;
    out.emplace_back("duration_phase" + std::to_string(o.plan.phases[i].number) + "_s",
                     format_number(s.traj.durations[i]));
  }
  out.emplace_back("splash_constrained", o.plan.has_return() ? "true" : "false");
  if (o.plan.has_return()) {
    out.emplace_back("splash_latitude_target_deg", format_number(o.plan.splash.latitude / kDeg));
  }
  if (o.report && o.report->splash) {
    out.emplace_back("splash_latitude_deg", format_number(o.report->splash->latitude / kDeg));
  }
  const Scaling scaling(config.earth, config.scvx.reference_mass);
  out.emplace_back("relaxation_error", format_number(relaxation_error(s.traj, o.plan, scaling)));
  out.emplace_back("virtual_control_l1", format_number(s.q_l1));
  out.emplace_back("buffer_l1", format_number(s.w_l1));
  if (o.report) {
    out.emplace_back("sma_error_m", format_number(o.report->sma_error));
    out.emplace_back("eccentricity", format_number(o.report->elements.e));
    out.emplace_back("inclination_error_deg", format_number(o.report->inclination_error / kDeg));
    out.emplace_back("max_heat_flux_Wpm2", format_number(o.report->max_constrained_heat_flux));
    out.emplace_back("collocation_gap", format_number(o.report->collocation_gap));
  } else {
    out.emplace_back("propagation_error", o.propagation_error);
  }
  return out;
}

void write_propagation(const std::filesystem::path& dir, const PropagationReport& rep,
                       const PhasePlan& plan) {
  std::ofstream s = open_output(dir / "propagation.txt");
  write_summary(s, propagation_summary(rep, plan));
  std::ofstream t = open_output(dir / "propagation_trace.csv");
  write_trace_csv(t, rep.trace);
}

std::string arcs_text(const std::vector<ActiveArc>& arcs) {
  std::string s;
  for (const ActiveArc& a : arcs) {
    if (!s.empty()) s += ';';
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d:%.3f-%.3f", a.phase, a.t_begin, a.t_end);
    s += buf;
  }
  return s;
}

SweepPoint sweep_point(const RunConfig& config, const Trajectory& start, double lat) {
  SweepPoint p;
  p.latitude_deg = lat;
  try {
    const SolveOutcome o = solve_from(config, start, lat);
    p.status = o.result.status;
    p.iterations = static_cast<int>(o.result.history.size());
    p.payload = payload_mass(o.result.solution.traj, config.vehicle);
    p.wall_time = o.result.wall_time;
    p.message = o.result.message;
    p.trajectory = o.result.solution.traj;
    if (o.report) {
      p.max_heat_flux = o.report->max_constrained_heat_flux;
      if (o.report->splash) p.splash_latitude_deg = o.report->splash->latitude / kDeg;
      const Scaling scaling(config.earth, config.scvx.reference_mass);
      p.arcs = audit_constraints(o.report->trace, o.result.solution.traj, o.plan, scaling).active_arcs;
    } else if (p.message.empty()) {
      p.message = "propagation failed: " + o.propagation_error;
    }
  } catch (const std::exception& e) {
    p.status = ScvxStatus::kSolverFailure;
    p.message = e.what();
  }
  return p;
}

}  // namespace

void RunConfig::check() const {
  earth.check();
  vehicle.check();
  scvx.check();
  if (!(mission.target_altitude > 0.0)) throw ConfigError("target altitude must be positive");
  if (!(mission.heat_flux_max > 0.0)) throw ConfigError("heat-flux limit must be positive");
  if (!(guess.payload_mass >= 0.0)) throw ConfigError("guess payload mass must be non-negative");
  if (!(guess.kick_angle > 0.0 && guess.kick_angle < 90.0)) {
    throw ConfigError("kick angle must lie in (0, 90) deg");
  }
  if (sweep.threads < 0) throw ConfigError("sweep threads must be non-negative");
  for (double lat : sweep.latitudes_deg) {
    if (!(std::abs(lat) <= 90.0)) throw ConfigError("sweep latitudes must lie in [-90, 90] deg");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  pitch_over_azimuth(mission.inclination_deg * kDeg, mission.launch_latitude_deg * kDeg);
  plan(false);
  plan(true);
}

PhasePlan RunConfig::plan(bool constrained) const {
  PhaseSchedule s = schedule;
  s.coast_guess = guess.coast_duration;
  s.second_burn_guess = guess.second_burn_duration;
  PhasePlan p = build_phase_plan(
      vehicle, s, TargetOrbit{earth.r_earth + mission.target_altitude, mission.inclination_deg * kDeg},
      SplashDownSpec{constrained, mission.splash_latitude_deg * kDeg},
      LaunchSite{mission.launch_latitude_deg * kDeg});
  p.heat_flux_max = mission.heat_flux_max;
  return p;
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  const Block root(j, "",
                   {"earth", "vehicle", "mission", "mesh", "guess", "scvx", "sweep", "output_dir",
                    "seed"});
  if (root.has("earth")) parse_earth(Block(j["earth"], "earth", {"mu", "r_earth", "omega", "atmosphere"}), c);
  if (root.has("vehicle")) {
    parse_vehicle(Block(j["vehicle"], "vehicle",
                        {"stages", "fairing_mass", "drag_coefficient", "reference_area"}),
                  c);
  }
  if (root.has("mission")) {
    parse_mission(Block(j["mission"], "mission",
                        {"target_altitude", "inclination_deg", "launch_latitude_deg",
                         "splash_constrained", "splash_latitude_deg", "heat_flux_max",
                         "fixed_durations", "return_duration_guess"}),
                  c);
  }
  if (root.has("mesh")) parse_mesh(Block(j["mesh"], "mesh", {"orders"}), c);
  if (root.has("guess")) {
    parse_guess(Block(j["guess"], "guess",
                      {"payload_mass", "kick_angle_deg", "coast_duration", "second_burn_duration"}),
                c);
  }
  if (root.has("scvx")) {
    parse_scvx(Block(j["scvx"], "scvx",
                     {"lambda_delta_coast", "lambda_delta_burn", "lambda_q", "lambda_w", "tol",
                      "filter_weights", "delta_max_coast", "delta_max_burn", "trust_contraction",
                      "max_iters", "reference_mass", "solver"}),
               c);
  }
  if (root.has("sweep")) {
    parse_sweep(Block(j["sweep"], "sweep", {"latitudes_deg", "range_deg", "chain", "threads"}), c);
  }
  if (root.has("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("'output_dir' must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (root.has("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return parse_config(s.str());
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_summary(std::ostream& out, const Summary& summary) {
  for (const auto& [key, value] : summary) out << key << " = " << value << '\n';
}

void write_solution_csv(std::ostream& out, const Trajectory& traj, const PhasePlan& plan) {
  out << kSolutionHeader << '\n';
  const std::vector<double> t0 = traj.phase_start_times(plan);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const PhaseMesh mesh(plan.phases[i].mesh);
    const Eigen::MatrixXd& x = traj.states[i];
    const Eigen::MatrixXd& u = traj.controls[i];
    for (int k = 0; k < mesh.nodes(); ++k) {
      const double tau = mesh.tau()[k];
      out << plan.phases[i].number << ',' << k << ',' << format_number(tau) << ','
          << format_number(traj.durations[i]) << ',' << format_number(t0[i] + tau * traj.durations[i]);
      for (int c = 0; c < 7; ++c) out << ',' << format_number(x(c, k));
      for (int c = 0; c < 4; ++c) {
        out << ',';
        if (k < u.cols()) out << format_number(u(c, k));
      }
      out << '\n';
    }
  }
}

Trajectory read_solution_csv(std::istream& in, const PhasePlan& plan) {
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) throw ArtifactError("line 1: empty solution file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSolutionHeader) throw ArtifactError("line 1: unexpected header", 1);

  Trajectory t;
  t.states.resize(plan.size());
  t.controls.resize(plan.size());
  t.durations.assign(plan.size(), 0.0);
  std::vector<PhaseMesh> meshes = build_meshes(plan);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    t.states[i].resize(7, meshes[i].nodes());
    if (plan.phases[i].guidance == GuidanceMode::kOptimal) {
      t.controls[i].resize(4, meshes[i].collocation_nodes());
    }
  }
  auto fail = [&](const std::string& msg) -> ArtifactError {
    return ArtifactError("line " + std::to_string(line_no) + ": " + msg, line_no);
  };
  auto number = [&](const std::string& field, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != field.size()) throw fail(std::string("bad ") + what + " '" + field + "'");
    return v;
  };

  std::size_t phase = 0;
  int node = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 16) {
      throw fail("expected 16 fields, got " + std::to_string(f.size()));
    }
    if (phase >= plan.size()) throw fail("more rows than the flight plan has nodes");
    const int num = static_cast<int>(number(f[0], "phase"));
    const int k = static_cast<int>(number(f[1], "node"));
    if (num != plan.phases[phase].number || k != node) {
      throw fail("expected phase " + std::to_string(plan.phases[phase].number) + " node " +
                 std::to_string(node));
    }
    const double dur = number(f[3], "duration");
    if (node == 0) {
      t.durations[phase] = dur;
    } else if (dur != t.durations[phase]) {
      throw fail("duration changes within a phase");
    }
    for (int c = 0; c < 7; ++c) t.states[phase](c, node) = number(f[5 + c], "state value");
    const bool has_control = node < t.controls[phase].cols();
    for (int c = 0; c < 4; ++c) {
      if (has_control) {
        t.controls[phase](c, node) = number(f[12 + c], "control value");
      } else if (!f[12 + c].empty()) {
        throw fail("unexpected control value");
      }
    }
    if (++node == meshes[phase].nodes()) {
      ++phase;
      node = 0;
    }
  }
  if (phase != plan.size()) {
    throw ArtifactError("line " + std::to_string(line_no) + ": solution truncated, expected phase " +
                            std::to_string(plan.phases[std::min(phase, plan.size() - 1)].number) +
                            " node " + std::to_string(node),
                        line_no);
  }
  return t;
}

Summary propagation_summary(const PropagationReport& rep, const PhasePlan& plan) {
  Summary out;
  out.emplace_back("semi_major_axis_m", format_number(rep.elements.a));
  out.emplace_back("sma_error_m", format_number(rep.sma_error));
  out.emplace_back("sma_error_rel", format_number(rep.sma_error_rel));
  out.emplace_back("eccentricity", format_number(rep.elements.e));
  out.emplace_back("inclination_deg", format_number(rep.elements.i / kDeg));
  out.emplace_back("inclination_error_deg", format_number(rep.inclination_error / kDeg));
  out.emplace_back("radial_velocity_mps", format_number(rep.radial_velocity));
  out.emplace_back("terminal_mass_kg", format_number(rep.terminal.m));
  out.emplace_back("collocation_gap", format_number(rep.collocation_gap));
  out.emplace_back("heat_flux_limit_Wpm2", format_number(plan.heat_flux_max));
  out.emplace_back("max_heat_flux_Wpm2", format_number(rep.max_constrained_heat_flux));
  for (const auto& [phase, q] : rep.max_heat_flux) {
    out.emplace_back("max_heat_flux_phase" + std::to_string(phase) + "_Wpm2", format_number(q));
  }
  if (rep.splash) {
    out.emplace_back("splash_latitude_deg", format_number(rep.splash->latitude / kDeg));
    out.emplace_back("splash_fall_duration_s", format_number(rep.splash->duration));
  }
  return out;
}

SolveOutcome solve_case(const RunConfig& config, bool constrained, std::ostream* log,
                        std::ostream* base_log) {
  const Dynamics dyn = config.dynamics();
  SolveOutcome o;
  o.plan = config.plan(false);
  const ReferenceTrajectory guess = generate_initial_guess(o.plan, dyn, config.guess);
  if (!constrained) {
    o.result = run(o.plan, dyn, config.scvx, guess, log);
    propagate_into(o, dyn);
    return o;
  }
  ScvxResult base = run(o.plan, dyn, config.scvx, guess, base_log);
  if (base.status == ScvxStatus::kSolverFailure) {
    o.result = base;
    o.base = std::move(base);
    o.propagation_error = "warm start failed";
    return o;
  }
  SolveOutcome c = solve_from(config, base.solution.traj, config.mission.splash_latitude_deg, log);
  c.base = std::move(base);
  return c;
}

SolveOutcome solve_from(const RunConfig& config, const Trajectory& start, double latitude_deg,
                        std::ostream* log) {
  RunConfig rc = config;
  rc.mission.splash_latitude_deg = latitude_deg;
  const Dynamics dyn = rc.dynamics();
  SolveOutcome o;
  o.plan = rc.plan(true);
  ReferenceTrajectory ref{start, "warm_start"};
  seed_return_phase(ref.traj, o.plan, dyn);
  o.result = run(o.plan, dyn, rc.scvx, ref, log);
  propagate_into(o, dyn);
  return o;
}

std::vector<SweepPoint> run_sweep(const RunConfig& config, const Trajectory& base,
                                  double phi_star_deg) {
  const std::vector<double>& lats = config.sweep.latitudes_deg;
  std::vector<SweepPoint> out(lats.size());
  if (config.sweep.chain) {
    std::vector<std::size_t> up, down;
    for (std::size_t k = 0; k < lats.size(); ++k) (lats[k] >= phi_star_deg ? up : down).push_back(k);
    std::sort(up.begin(), up.end(), [&](std::size_t a, std::size_t b) { return lats[a] < lats[b]; });
    std::sort(down.begin(), down.end(), [&](std::size_t a, std::size_t b) { return lats[a] > lats[b]; });
    for (const auto* chain : {&up, &down}) {
      Trajectory start = base;
      for (std::size_t k : *chain) {
        out[k] = sweep_point(config, start, lats[k]);
        if (out[k].status == ScvxStatus::kConverged) start = *out[k].trajectory;
      }
    }
    return out;
  }
  std::size_t threads = config.sweep.threads > 0 ? static_cast<std::size_t>(config.sweep.threads)
                                                 : std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t first = 0; first < lats.size(); first += threads) {
    std::vector<std::future<SweepPoint>> jobs;
    for (std::size_t k = first; k < std::min(lats.size(), first + threads); ++k) {
      jobs.push_back(std::async(std::launch::async, [&config, &base, lat = lats[k]] {
        return sweep_point(config, base, lat);
      }));
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) out[first + k] = jobs[k].get();
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points, double base_payload) {
  out << "latitude_deg,payload_kg,payload_loss_kg,status,iterations,wall_time_s,max_heat_flux_Wpm2,"
         "splash_latitude_deg,heat_flux_arcs_s\n";
  for (const SweepPoint& p : points) {
    out << format_number(p.latitude_deg) << ',' << format_number(p.payload) << ','
        << format_number(base_payload - p.payload) << ',' << to_string(p.status) << ','
        << p.iterations << ',' << format_number(p.wall_time) << ',' << format_number(p.max_heat_flux)
        << ',' << (p.splash_latitude_deg ? format_number(*p.splash_latitude_deg) : "") << ','
        << arcs_text(p.arcs) << '\n';
  }
}

int cmd_solve(const RunConfig& config, const CommandOptions& opts, std::ostream& out,
              std::ostream& err) {
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  const bool constrained = config.mission.splash_constrained;
  std::ofstream log = open_output(dir / "iterations.csv");
  std::optional<std::ofstream> base_log;
  if (constrained) base_log.emplace(open_output(dir / "warm_start_iterations.csv"));
  if (!opts.quiet) {
    out << "solving " << (constrained ? "constrained" : "unconstrained") << " case";
    if (constrained) out << " at splash latitude " << config.mission.splash_latitude_deg << " deg";
    out << '\n';
  }
  const SolveOutcome o = solve_case(config, constrained, &log, base_log ? &*base_log : nullptr);

  std::ofstream traj = open_output(dir / "trajectory.csv");
  write_solution_csv(traj, o.result.solution.traj, o.plan);
  std::ofstream summary = open_output(dir / "summary.txt");
  write_summary(summary, solve_summary(o, config));
  std::ofstream timing = open_output(dir / "timing.txt");
  write_summary(timing, {{"wall_time_s", format_number(o.result.wall_time)}});
  if (o.base) timing << "warm_start_wall_time_s = " << format_number(o.base->wall_time) << '\n';
  if (o.report) write_propagation(dir, *o.report, o.plan);

  if (!opts.quiet) {
    out << "status " << to_string(o.result.status) << " after " << o.result.history.size()
        << " iterations, payload " << payload_mass(o.result.solution.traj, config.vehicle)
        << " kg\n";
    if (o.report && o.report->splash) {
      out << "propagated splash latitude " << o.report->splash->latitude / kDeg << " deg, max heat flux "
          << o.report->max_constrained_heat_flux << " W/m^2\n";
    }
  }
  if (!o.result.message.empty()) err << o.result.message << '\n';
  if (!o.propagation_error.empty()) err << "propagation: " << o.propagation_error << '\n';
  if (o.result.status != ScvxStatus::kConverged) {
    err << "solve did not converge: " << to_string(o.result.status) << '\n';
  }
  return exit_code(o.result.status);
}

int cmd_sweep(const RunConfig& config, const CommandOptions& opts, std::ostream& out,
              std::ostream& err) {
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  std::ofstream log = open_output(dir / "sweep_base_iterations.csv");
  if (!opts.quiet) out << "solving the unconstrained base case\n";
  const SolveOutcome base = solve_case(config, false, &log);
  std::ofstream summary = open_output(dir / "sweep_base_summary.txt");
  write_summary(summary, solve_summary(base, config));
  if (base.result.status != ScvxStatus::kConverged || !base.report || !base.report->splash) {
    err << "base case failed: " << to_string(base.result.status) << ' ' << base.result.message
        << base.propagation_error << '\n';
    return base.result.status == ScvxStatus::kMaxIterations ? kExitNotConverged : kExitFailure;
  }
  const double phi_star = base.report->splash->latitude / kDeg;
  const double p0 = payload_mass(base.result.solution.traj, config.vehicle);
  if (!opts.quiet) {
    out << "base payload " << p0 << " kg, free splash latitude " << phi_star << " deg\n";
  }
  const std::vector<SweepPoint> points = run_sweep(config, base.result.solution.traj, phi_star);
  std::ofstream csv = open_output(dir / "sweep.csv");
  write_sweep_csv(csv, points, p0);
  const PhasePlan cp = config.plan(true);
  bool all = true;
  for (const SweepPoint& p : points) {
    if (p.trajectory) {
      char name[64];
      std::snprintf(name, sizeof name, "sweep_trajectory_%+07.2f.csv", p.latitude_deg);
      std::ofstream t = open_output(dir / name);
      write_solution_csv(t, *p.trajectory, cp);
    }
    if (!opts.quiet) {
      out << "latitude " << p.latitude_deg << " deg: " << to_string(p.status) << ", "
          << p.iterations << " iterations, payload " << p.payload << " kg\n";
    }
    if (p.status != ScvxStatus::kConverged) {
      all = false;
      err << "latitude " << p.latitude_deg << " deg: " << to_string(p.status) << ' ' << p.message
          << '\n';
    }
  }
  return all ? kExitSuccess : kExitNotConverged;
}

int cmd_guess(const RunConfig& config, const CommandOptions& opts, std::ostream& out,
              std::ostream& err) {
  const std::filesystem::path dir = config.output_dir;
  const PhasePlan plan = config.plan();
  const Dynamics dyn = config.dynamics();
  std::optional<ReferenceTrajectory> guess;
  std::string reason;
  try {
    guess = generate_initial_guess(plan, dyn, config.guess);
  } catch (const GuessRejected& e) {
    reason = e.what();
  }
  std::filesystem::create_directories(dir);
  std::ofstream verdict = open_output(dir / "guess_verdict.txt");
  Summary s{{"verdict", guess ? "accepted" : "rejected"}};
  if (guess) {
    s.emplace_back("payload_kg", format_number(payload_mass(guess->traj, config.vehicle)));
    std::ofstream traj = open_output(dir / "guess_trajectory.csv");
    write_solution_csv(traj, guess->traj, plan);
  } else {
    s.emplace_back("reason", reason);
  }
  write_summary(verdict, s);
  if (!guess) {
    err << "initial guess rejected: " << reason << '\n';
    return kExitNotConverged;
  }
  if (!opts.quiet) out << "initial guess accepted\n";
  return kExitSuccess;
}

int cmd_simulate(const RunConfig& config, const std::filesystem::path& solution,
                 const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  std::ifstream in(solution);
  if (!in) {
    err << "cannot read solution " << solution.string() << '\n';
    return kExitConfigError;
  }
  std::string header;
  std::getline(in, header);
  // A constrained solution carries the return phase as its last rows.
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  const PhasePlan unconstrained = config.plan(false);
  const std::string return_prefix = std::to_string(unconstrained.size() + 1) + ",";
  const bool constrained = last.rfind(return_prefix, 0) == 0;
  const PhasePlan plan = config.plan(constrained);
  in.clear();
  in.seekg(0);
  Trajectory traj;
  try {
    traj = read_solution_csv(in, plan);
  } catch (const ArtifactError& e) {
    err << solution.string() << ": " << e.what() << '\n';
    return kExitConfigError;
  }
  const PropagationReport rep = propagate_ascent(traj, plan, config.dynamics(), true);
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  write_propagation(dir, rep, plan);
  if (!opts.quiet) write_summary(out, propagation_summary(rep, plan));
  return kExitSuccess;
}

}  // namespace ascent::cli
