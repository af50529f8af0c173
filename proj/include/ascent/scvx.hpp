#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ascent/collocation.hpp"
#include "ascent/dynamics.hpp"
#include "ascent/mission.hpp"
#include "ascent/socp.hpp"

namespace ascent {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScvxConfig {
  double lambda_delta_coast = 1e-4;  // trust radius of the upper-stage coast
  double lambda_delta_burn = 1e-4;   // trust radius of the second upper-stage burn
  double lambda_q = 1e4;
  double lambda_w = 1e4;
  double tol = 1e-4;
  std::vector<double> filter_weights = {6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0};
  double delta_max_coast = 0.01;  // fraction of the reference duration
  double delta_max_burn = 0.05;
  // Halve a phase's trust cap when its duration step reverses direction,
  // double it back (up to the cap above) after two same-direction steps at the cap.
  bool trust_contraction = true;
  int max_iters = 100;
  double reference_mass = 10000.0;  // [kg]
  socp::SolverSettings solver;

  void check() const;
};

/**
 * Discrete trajectory on the phase meshes, in physical units. States are
 * 7 x nodes per phase; controls are 4 x collocation nodes (u, u_N) for
 * optimal-guidance phases and empty otherwise.
 */
struct Trajectory {
  std::vector<Eigen::MatrixXd> states;
  std::vector<Eigen::MatrixXd> controls;
  std::vector<double> durations;  // [s]

  std::size_t size() const { return states.size(); }
  /// Liftoff time of every phase start; the return phase starts at its anchor.
  std::vector<double> phase_start_times(const PhasePlan& plan) const;
};

struct ReferenceTrajectory {
  Trajectory traj;
  std::string provenance;  // "initial_guess" or "filtered(i,j,k)"
};

struct GuessParams {
  double payload_mass = 100.0;    // [kg]
  double kick_angle = 80.0;       // elevation at the end of the pitch-over [deg]
  double coast_duration = 2500.0; // [s]
  double second_burn_duration = 200.0;  // [s]
};

class GuessRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scaled quantities used throughout the subproblems.
struct Scaling {
  ScaleSet units;
  explicit Scaling(const EarthModel& earth, double reference_mass = 10000.0)
      : units(ScaleSet::from_earth(earth, reference_mass)) {}

  Vec7 state_units() const { return units.state_units(); }
  double accel() const { return units.acceleration(); }
};

/**
 * Propagates the original dynamics without atmosphere under simple guidance
 * laws: vertical rise, linear pitch-over at the target-plane azimuth, gravity
 * turns, horizontal in-plane thrust for the upper stages. When the plan contains a
 * return phase it is seeded by a ballistic fall from the stage-3 burnout.
 * Throws GuessRejected when the ascent dips below sea level.
 */
ReferenceTrajectory generate_initial_guess(const PhasePlan& plan, const Dynamics& dynamics,
                                           const GuessParams& params);

/// Seeds (or replaces) the return phase of `traj` by a drag-affected ballistic
/// fall from the end of the return anchor to the first crossing of R_E.
void seed_return_phase(Trajectory& traj, const PhasePlan& plan, const Dynamics& dynamics);

/// Drops the return phase of a trajectory built for a constrained plan.
Trajectory strip_return_phase(const Trajectory& traj, const PhasePlan& plan);

/// Affine model x' = A x + B u + S sigma + c at one collocation node, scaled.
struct NodeLinearization {
  Mat7 a = Mat7::Zero();
  Eigen::Matrix<double, 7, 3> b = Eigen::Matrix<double, 7, 3>::Zero();
  Vec7 s = Vec7::Zero();  // zero for fixed-duration phases
  Vec7 c = Vec7::Zero();

  Vec7 evaluate(const Vec7& x, const Vec3& u, double sigma) const {
    return a * x + b * u + s * sigma + c;
  }
};

/// Per phase, per collocation node.
using Linearization = std::vector<std::vector<NodeLinearization>>;

Linearization linearize(const ReferenceTrajectory& ref, const PhasePlan& plan,
                        const Dynamics& dynamics, const Scaling& scaling);

/// Scaled right-hand side sigma f(x, u) at a node, for checks of the model.
Vec7 scaled_rhs(const Vec7& x_scaled, const Vec3& u_scaled, double sigma_scaled,
                const Phase& phase, double t_ign, const Dynamics& dynamics,
                const Scaling& scaling);

struct VariableIndexMap {
  std::vector<int> state;     // first column of each phase's 7 x nodes block
  std::vector<int> control;   // first column of each phase's 4 x collocation block, -1 if none
  std::vector<int> sigma;     // -1 for fixed-duration phases
  std::vector<int> q_pos, q_neg;  // 7 x collocation nodes each
  int delta_coast = -1, delta_burn = -1;
  int w_pos = -1, w_neg = -1;
  int num_buffers = 0;
  int num_vars = 0;
};

struct RowCounts {
  int initial = 0, collocation = 0, linkage = 0, duration_sum = 0, terminal = 0, thrust_tie = 0;
  int heat_flux = 0, trust = 0, nonneg = 0, cone_blocks = 0;
  int equalities() const {
    return initial + collocation + linkage + duration_sum + terminal + thrust_tie;
  }
  int inequalities() const { return heat_flux + trust + nonneg; }
  int total_rows() const { return equalities() + inequalities() + 4 * cone_blocks; }
};

struct Subproblem {
  socp::ConicProblem problem;
  VariableIndexMap map;
  RowCounts rows;
};

Subproblem assemble_subproblem(const ReferenceTrajectory& ref, const Linearization& lin,
                               const PhasePlan& plan, const Dynamics& dynamics,
                               const Scaling& scaling, const ScvxConfig& config);

/// Row and column counts predicted from the mesh sizes alone.
RowCounts expected_row_counts(const PhasePlan& plan);
int expected_num_vars(const PhasePlan& plan);

struct ObjectiveBreakdown {
  double mass = 0.0;     // -m(t_f), scaled
  double delta = 0.0;
  double virtual_control = 0.0;
  double buffer = 0.0;
  double total() const { return mass + delta + virtual_control + buffer; }
};

struct ScvxIterate {
  Trajectory traj;
  std::vector<Eigen::MatrixXd> virtual_controls;  // scaled, 7 x collocation nodes
  Eigen::VectorXd buffers;  // scaled: 4 terminal rows, then 2 return rows when present
  double delta_coast = 0.0;  // [s]
  double delta_burn = 0.0;   // [s]
  double q_l1 = 0.0;
  double w_l1 = 0.0;
  ObjectiveBreakdown objective;
  socp::SolveStatus status = socp::SolveStatus::kNumericalError;
  int solver_iterations = 0;
};

ScvxIterate extract_iterate(const socp::ConicSolution& sol, const Subproblem& sub,
                            const PhasePlan& plan, const Scaling& scaling,
                            const ScvxConfig& config);

/// Weighted sum of the K most recent solutions; the initial guess fills the
/// slots that precede the first solution. `solved` is in chronological order.
ReferenceTrajectory filter_update(const std::vector<Trajectory>& solved, const Trajectory& guess,
                                  const std::vector<double>& weights);

struct ConvergenceReport {
  double state_norm = 0.0;  // infinity norm of the scaled state difference
  double duration_change = 0.0;  // [s], reported only
  bool converged = false;
};

ConvergenceReport check_convergence(const Trajectory& current, const Trajectory& reference,
                                    const Scaling& scaling, double tol);

/// max | |u| - u_N | over collocation nodes of optimal phases, scaled. The
/// extrapolated terminal control is not a decision variable and is excluded.
double relaxation_error(const Trajectory& traj, const PhasePlan& plan, const Scaling& scaling);

/// Payload delivered by a trajectory: m(t_0) minus the liftoff mass of the empty vehicle.
double payload_mass(const Trajectory& traj, const VehicleModel& vehicle);

struct IterationRecord {
  int iter = 0;
  ObjectiveBreakdown objective;
  double q_l1 = 0.0;
  double w_l1 = 0.0;
  double w_terminal_l1 = 0.0;  // orbit-insertion rows
  double w_return_l1 = 0.0;    // splash-down rows
  double state_norm = 0.0;
  double duration_change = 0.0;
  double relaxation_error = 0.0;
  double payload = 0.0;
  int solver_iterations = 0;
  std::string solver_status;
  bool retried = false;
  double wall_time = 0.0;  // [s]
};

enum class ScvxStatus { kConverged, kMaxIterations, kSolverFailure };
const char* to_string(ScvxStatus status);

struct ScvxResult {
  ScvxStatus status = ScvxStatus::kSolverFailure;
  ScvxIterate solution;  // last accepted iterate
  std::vector<IterationRecord> history;
  std::string message;
  bool penalties_clean = false;  // |q|_1 and |w|_1 below 1e-8 at the end
  double wall_time = 0.0;
};

/// linearize -> assemble -> solve -> filter until the state change drops
/// below the tolerance. Each record is also written to `log` when given.
ScvxResult run(const PhasePlan& plan, const Dynamics& dynamics, const ScvxConfig& config,
               const ReferenceTrajectory& guess, socp::ConicSolver& solver,
               std::ostream* log = nullptr);
ScvxResult run(const PhasePlan& plan, const Dynamics& dynamics, const ScvxConfig& config,
               const ReferenceTrajectory& guess, std::ostream* log = nullptr);

void write_iteration_header(std::ostream& out);
void write_iteration_record(std::ostream& out, const IterationRecord& rec);

/// Mesh objects of every phase, in plan order.
std::vector<PhaseMesh> build_meshes(const PhasePlan& plan);

/// Time since stage ignition at normalized time tau of a phase.
double ignition_clock(const Phase& phase, double tau, double duration, const Dynamics& dynamics);

}  // namespace ascent
