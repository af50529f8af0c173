#pragma once

#include <stdexcept>
#include <vector>

namespace ascent {

class BurnWindowError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Solid or liquid stage with thrust and mass flow linear in time since ignition.
struct Stage {
  double propellant_mass = 0.0;    // [kg]
  double dry_mass = 0.0;           // [kg]
  double burn_time = 0.0;          // [s]
  double thrust_vac_ignition = 0.0;  // [N]
  double thrust_vac_burnout = 0.0;   // [N]
  double mass_flow_ignition = 0.0;   // [kg/s]
  double mass_flow_burnout = 0.0;    // [kg/s]
  double nozzle_exit_area = 0.0;     // [m^2]

  /// Throws BurnWindowError outside [0, burn_time].
  double vacuum_thrust(double t_ign) const;
  double mass_flow(double t_ign) const;

  /// Propellant consumed by the flow law over the full burn.
  double burned_propellant() const {
    return 0.5 * (mass_flow_ignition + mass_flow_burnout) * burn_time;
  }
  /// Vacuum total impulse [N s].
  double total_impulse() const {
    return 0.5 * (thrust_vac_ignition + thrust_vac_burnout) * burn_time;
  }

  void check() const;
};

struct VehicleModel {
  std::vector<Stage> stages;
  double fairing_mass = 0.0;     // [kg]
  double drag_coefficient = 0.0; // [-]
  double reference_area = 0.0;   // [m^2]

  void check() const;
};

/// Four-stage VEGA-like vehicle used by the default case study.
VehicleModel vega_vehicle();

/// All stage propellant and dry masses, the fairing and the payload.
double liftoff_mass(const VehicleModel& vehicle, double payload_mass);

}  // namespace ascent
