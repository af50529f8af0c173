#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ascent/dynamics.hpp"
#include "ascent/mission.hpp"
#include "ascent/scvx.hpp"
#include "ascent/validate.hpp"

namespace ascent::cli {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitNotConverged = 1,
  kExitConfigError = 2,
  kExitFailure = 3,
};

/// Malformed input artifact; line is 1-based, 0 when not tied to a line.
class ArtifactError : public std::runtime_error {
 public:
  ArtifactError(const std::string& what, long line) : std::runtime_error(what), line(line) {}
  long line;
};

struct SweepConfig {
  std::vector<double> latitudes_deg = {55.0, 57.0, 60.0, 63.0, 66.0, 69.0, 72.0, 76.0, 80.0};
  bool chain = true;  // warm-start each point from the previous one
  int threads = 0;    // concurrent points when not chaining; 0 means hardware concurrency
};

struct MissionConfig {
  double target_altitude = 700e3;   // [m]
  double inclination_deg = 90.0;
  double launch_latitude_deg = 0.0;
  bool splash_constrained = false;
  double splash_latitude_deg = 65.79;
  double heat_flux_max = 900.0;     // [W/m^2]
};

/// Everything a run needs. Defaults reproduce the VEGA polar-orbit case study.
struct RunConfig {
  EarthModel earth;
  bool atmosphere = true;
  VehicleModel vehicle = vega_vehicle();
  MissionConfig mission;
  PhaseSchedule schedule;
  GuessParams guess;
  ScvxConfig scvx;
  SweepConfig sweep;
  std::string output_dir = "out";
  std::uint64_t seed = 0;  // for randomized test utilities only

  /// Throws ConfigError (or the module's own error) on inconsistent values.
  void check() const;
  PhasePlan plan(bool constrained) const;
  PhasePlan plan() const { return plan(mission.splash_constrained); }
  Dynamics dynamics() const { return Dynamics(earth, vehicle, atmosphere); }
};

/// JSON document with the blocks earth, vehicle, mission, mesh, guess, scvx,
/// sweep and the keys output_dir and seed. Unknown keys are rejected.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Fixed 17-significant-digit formatting used by every artifact.
std::string format_number(double x);

/// Flat `key = value` lines.
using Summary = std::vector<std::pair<std::string, std::string>>;
void write_summary(std::ostream& out, const Summary& summary);

/// Columns: phase,node,tau,duration_s,t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,m_kg,
/// ux_mps2,uy_mps2,uz_mps2,un_mps2. Control fields are empty where the phase has
/// no control or at the terminal node.
void write_solution_csv(std::ostream& out, const Trajectory& traj, const PhasePlan& plan);
/// Reads a solution written for `plan`; throws ArtifactError naming the line.
Trajectory read_solution_csv(std::istream& in, const PhasePlan& plan);

Summary propagation_summary(const PropagationReport& report, const PhasePlan& plan);

struct SolveOutcome {
  PhasePlan plan;
  ScvxResult result;
  std::optional<ScvxResult> base;  // unconstrained warm start of a constrained solve
  std::optional<PropagationReport> report;
  std::string propagation_error;
};

/// Solves the configured case. A constrained case is warm-started from the
/// unconstrained solution with the return phase seeded by a ballistic fall.
SolveOutcome solve_case(const RunConfig& config, bool constrained, std::ostream* log = nullptr,
                        std::ostream* base_log = nullptr);

/// Constrained solve warm-started from a converged trajectory.
SolveOutcome solve_from(const RunConfig& config, const Trajectory& start, double latitude_deg,
                        std::ostream* log = nullptr);

struct SweepPoint {
  double latitude_deg = 0.0;
  ScvxStatus status = ScvxStatus::kSolverFailure;
  int iterations = 0;
  double payload = 0.0;  // [kg]
  double wall_time = 0.0;  // [s]
  double max_heat_flux = 0.0;  // propagated, over constrained phases [W/m^2]
  std::optional<double> splash_latitude_deg;  // propagated
  std::vector<ActiveArc> arcs;
  std::optional<Trajectory> trajectory;
  std::string message;
};

/**
 * Constrained solves over the configured latitudes. With chaining, points at or
 * above phi_star run in ascending order and points below it in descending
 * order, each starting from the previous converged point of its chain and the
 * first from `base`. Without chaining every point starts from `base` and the
 * points run concurrently. Results are in the configured order.
 */
std::vector<SweepPoint> run_sweep(const RunConfig& config, const Trajectory& base,
                                  double phi_star_deg);

/// Header: latitude_deg,payload_kg,payload_loss_kg,status,iterations,wall_time_s,
/// max_heat_flux_Wpm2,splash_latitude_deg,heat_flux_arcs_s
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points, double base_payload);

struct CommandOptions {
  bool quiet = false;
};

int cmd_solve(const RunConfig& config, const CommandOptions& opts, std::ostream& out,
              std::ostream& err);
int cmd_sweep(const RunConfig& config, const CommandOptions& opts, std::ostream& out,
              std::ostream& err);
int cmd_guess(const RunConfig& config, const CommandOptions& opts, std::ostream& out,
              std::ostream& err);
int cmd_simulate(const RunConfig& config, const std::filesystem::path& solution,
                 const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace ascent::cli
