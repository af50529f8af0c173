#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ascent/environment.hpp"
#include "ascent/vehicle.hpp"

namespace ascent {

enum class GuidanceMode {
  kVertical,  // thrust along the local radial direction
  kGravityTurn,  // zero-lift gravity turn, thrust along the relative velocity
  kOptimal,   // thrust direction is a decision variable
  kCoast,
  kReturn,    // unpowered spent stage falling back to the ground
};

const char* to_string(GuidanceMode mode);

/// Segment orders of an hp mesh; segments are equally spaced in [0, 1].
struct MeshSpec {
  std::vector<int> orders;

  int segments() const { return static_cast<int>(orders.size()); }
  int collocation_nodes() const;
  int nodes() const { return collocation_nodes() + 1; }
};

struct Phase {
  int number = 0;  // 1-based, as in the flight plan
  GuidanceMode guidance = GuidanceMode::kCoast;
  std::optional<int> stage;  // 0-based stage index for powered phases
  bool free_time = false;
  double duration = 0.0;  // fixed length, or initial guess when free [s]
  MeshSpec mesh;
  bool heat_flux_constrained = false;
  double burn_clock_offset = 0.0;  // time since stage ignition at phase start [s]
  double mass_drop = 0.0;  // mass jettisoned at the start of this phase [kg]

  bool powered() const {
    return guidance == GuidanceMode::kVertical || guidance == GuidanceMode::kGravityTurn ||
           guidance == GuidanceMode::kOptimal;
  }
};

struct TargetOrbit {
  double semi_major_axis = 0.0;  // [m]
  double inclination = 0.0;      // [rad]

  /// z component of the target angular momentum, cos(i) sqrt(mu a).
  double angular_momentum_z(double mu) const;
  double circular_speed(double mu) const;
};

struct SplashDownSpec {
  bool constrained = false;
  double latitude = 0.0;  // [rad]
};

struct LaunchSite {
  double latitude = 0.0;  // [rad]
};

/// Fixed arc lengths and free-arc guesses of the 13-phase plan.
struct PhaseSchedule {
  std::vector<double> fixed_durations = {4.1, 6.6, 91.3, 6.6, 75.0, 37.3, 5.4, 104.6, 15.4};
  double coast_guess = 2500.0;        // phase 11 [s]
  double second_burn_guess = 200.0;   // phase 12 [s]
  double return_guess = 600.0;        // phase 13 [s]
  std::vector<MeshSpec> meshes;       // empty means the default hp meshes
};

std::vector<MeshSpec> default_meshes();

class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InclinationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct PhasePlan {
  std::vector<Phase> phases;  // chronological ascent phases, then the return phase
  TargetOrbit target;
  SplashDownSpec splash;
  LaunchSite site;
  double heat_flux_max = 900.0;  // [W/m^2]

  // Stage-4 burn split: sigma(first_burn) + sigma(second_burn) = upper_stage_burn_time.
  int first_burn = -1;
  int second_burn = -1;
  double upper_stage_burn_time = 0.0;

  int final_phase = -1;    // payload release at the end of this phase
  int return_phase = -1;   // -1 when the splash-down is unconstrained
  int return_anchor = -1;  // return starts at the end of this phase
  double return_mass = 0.0;

  bool has_return() const { return return_phase >= 0; }
  std::size_t size() const { return phases.size(); }
  /// Lookup by 1-based phase number.
  const Phase& by_number(int number) const;
  int index_of(int number) const;
};

/**
 * Builds the VEGA flight plan: vertical rise, pitch-over, gravity turn,
 * stage-2 gravity turn, stage-3 burn split at fairing jettison, two stage-4
 * burns around a coast, and the stage-3 return when the splash-down is
 * constrained.
 */
PhasePlan build_phase_plan(const VehicleModel& vehicle, const PhaseSchedule& schedule,
                           const TargetOrbit& target, const SplashDownSpec& splash,
                           const LaunchSite& site = {});

/// Thrust azimuth that reaches the target plane from the launch latitude.
double pitch_over_azimuth(double inclination, double launch_latitude);

/// Launch-site position and Earth-rotation velocity in the frame whose x axis
/// crosses the launch meridian at liftoff.
std::pair<Vec3, Vec3> initial_state(const EarthModel& earth, const LaunchSite& site);

}  // namespace ascent
