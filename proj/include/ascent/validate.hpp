#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ascent/dynamics.hpp"
#include "ascent/integrator.hpp"
#include "ascent/mission.hpp"
#include "ascent/scvx.hpp"

namespace ascent {

struct TracePoint {
  double t = 0.0;  // [s] since liftoff
  State x;
  double altitude = 0.0;   // [m]
  double heat_flux = 0.0;  // [W/m^2]
  int phase = 0;           // 1-based phase number
};

struct OrbitalElements {
  double a = 0.0;  // [m]
  double e = 0.0;
  double i = 0.0;  // [rad]
};

OrbitalElements orbital_elements(const State& x, double mu);

class NoImpactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PropagationError : public std::runtime_error {
 public:
  PropagationError(const std::string& what, int phase, double time)
      : std::runtime_error(what), phase(phase), time(time) {}
  int phase;
  double time;
};

struct ReturnSimulation {
  double latitude = 0.0;  // [rad]
  double duration = 0.0;  // [s]
  State impact;
  DenseSolution path;     // time measured from the start of the fall
  std::vector<TracePoint> trace;
};

/**
 * Ballistic fall of a spent stage of the given mass under gravity and drag,
 * stopped at the first crossing of |r| = R_E located by bisection to 1e-3 m.
 * Latitude is asin(z / |r|). Throws NoImpactError when no crossing happens
 * within max_duration.
 */
ReturnSimulation simulate_return(const State& burnout, double mass, const Dynamics& dynamics,
                                 double start_time = 0.0, double max_duration = 20000.0);

struct PropagationReport {
  State terminal;
  OrbitalElements elements;
  double sma_error = 0.0;       // [m], signed
  double sma_error_rel = 0.0;
  double inclination_error = 0.0;  // [rad], absolute
  double radial_velocity = 0.0;    // [m/s]
  State burnout;  // end of the return anchor phase
  std::optional<ReturnSimulation> splash;
  std::vector<std::pair<int, double>> max_heat_flux;  // (phase number, W/m^2)
  double max_constrained_heat_flux = 0.0;  // over heat-flux-constrained phases
  double collocation_gap = 0.0;  // infinity norm at the nodes, scaled units
  std::vector<TracePoint> trace;
};

/**
 * Integrates the original dynamics phase by phase from the optimized liftoff
 * state. Thrust directions come from the collocation interpolant of the
 * optimal controls; magnitudes from the engine model. Mass drops are applied
 * at phase starts. The spent stage-3 fall is simulated when simulate_splash.
 */
PropagationReport propagate_ascent(const Trajectory& traj, const PhasePlan& plan,
                                   const Dynamics& dynamics, bool simulate_splash = true,
                                   const OdeOptions& options = {});

struct ActiveArc {
  int phase = 0;
  double t_begin = 0.0;  // [s]
  double t_end = 0.0;    // [s]
  double duration() const { return t_end - t_begin; }
};

struct ConstraintAudit {
  double max_heat_flux = 0.0;
  double heat_flux_limit = 0.0;
  std::vector<ActiveArc> active_arcs;
  std::vector<std::vector<double>> relaxation_errors;  // per phase, scaled
  double max_relaxation_error = 0.0;
};

/// Heat flux over the constrained phases of a trace, with the arcs where it
/// is at least active_fraction of the limit, and the relaxation error at
/// every decision node of the trajectory.
ConstraintAudit audit_constraints(const std::vector<TracePoint>& trace, const Trajectory& traj,
                                  const PhasePlan& plan, const Scaling& scaling,
                                  double active_fraction = 0.99);

/// Header: t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,m_kg,altitude_m,heat_flux_Wpm2,phase
void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

/// Node states of a trajectory as trace points (heat flux from the model).
std::vector<TracePoint> trajectory_trace(const Trajectory& traj, const PhasePlan& plan,
                                         const Dynamics& dynamics);

}  // namespace ascent
