#include "ascent/vehicle.hpp"

#include <cmath>
#include <string>

namespace ascent {

namespace {

// Burn-clock values this close outside the window are clamped instead of rejected.
constexpr double kWindowSlack = 1e-9;
// Relative mismatch allowed between the flow-law integral and the propellant mass.
constexpr double kFlowTolerance = 1e-4;

double burn_fraction(const Stage& s, double t_ign) {
  const double slack = kWindowSlack * (1.0 + s.burn_time);
  if (t_ign < -slack || t_ign > s.burn_time + slack) {
    throw BurnWindowError("time since ignition " + std::to_string(t_ign) +
                          " s outside burn window [0, " + std::to_string(s.burn_time) + "] s");
  }
  const double f = t_ign / s.burn_time;
  return f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
}

}  // namespace

double Stage::vacuum_thrust(double t_ign) const {
  const double f = burn_fraction(*this, t_ign);
  return thrust_vac_ignition + f * (thrust_vac_burnout - thrust_vac_ignition);
}

double Stage::mass_flow(double t_ign) const {
  const double f = burn_fraction(*this, t_ign);
  return mass_flow_ignition + f * (mass_flow_burnout - mass_flow_ignition);
}

void Stage::check() const {
  if (!(burn_time > 0.0)) throw std::invalid_argument("Stage: burn time must be positive");
  for (double v : {propellant_mass, dry_mass, thrust_vac_ignition, thrust_vac_burnout,
                   mass_flow_ignition, mass_flow_burnout, nozzle_exit_area}) {
    if (!(v >= 0.0)) throw std::invalid_argument("Stage: quantities must be non-negative");
  }
  if (std::abs(burned_propellant() - propellant_mass) > kFlowTolerance * propellant_mass) {
    throw std::invalid_argument("Stage: mass-flow law does not integrate to the propellant mass");
  }
}

void VehicleModel::check() const {
  if (stages.empty()) throw std::invalid_argument("VehicleModel: no stages");
  for (const Stage& s : stages) s.check();
  if (!(drag_coefficient > 0.0) || !(reference_area > 0.0)) {
    throw std::invalid_argument("VehicleModel: drag coefficient and reference area must be positive");
  }
  if (!(fairing_mass >= 0.0)) throw std::invalid_argument("VehicleModel: negative fairing mass");
}

VehicleModel vega_vehicle() {
  VehicleModel v;
  v.stages = {
      Stage{87898.0, 8417.7, 102.0, 2827.37e3, 1884.91e3, 1034.09, 689.40, 3.092},
      Stage{23926.0, 2563.8, 75.0, 1075.73e3, 717.15e3, 382.81, 255.21, 1.697},
      Stage{10006.0, 1326.5, 110.0, 299.81e3, 221.60e3, 104.61, 77.32, 1.183},
      Stage{397.6, 813.7, 502.1, 2.4509e3, 2.4509e3, 0.7919, 0.7919, 0.07},
  };
  v.fairing_mass = 535.3;
  v.drag_coefficient = 0.381;
  v.reference_area = 9.079;
  return v;
}

double liftoff_mass(const VehicleModel& vehicle, double payload_mass) {
  if (!(payload_mass >= 0.0)) throw std::invalid_argument("liftoff_mass: negative payload");
  double m = vehicle.fairing_mass + payload_mass;
  for (const Stage& s : vehicle.stages) m += s.propellant_mass + s.dry_mass;
  return m;
}

}  // namespace ascent
