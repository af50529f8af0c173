#pragma once

#include <optional>
#include <stdexcept>

#include "ascent/environment.hpp"
#include "ascent/mission.hpp"
#include "ascent/state.hpp"
#include "ascent/vehicle.hpp"

namespace ascent {

class DynamicsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Linearization data of x' = f(x, t) + B u about a reference point.
struct DynamicsJacobians {
  Mat7 a_mat = Mat7::Zero();  // df/dx
  Vec7 f_val = Vec7::Zero();  // f(x, u, t)
  Eigen::Matrix<double, 7, 3> b_mat = Eigen::Matrix<double, 7, 3>::Zero();
};

struct HeatFluxSample {
  double qdot = 0.0;            // [W/m^2]
  Vec3 d_qdot_d_r = Vec3::Zero();  // [W/m^3]
  Vec3 d_qdot_d_v = Vec3::Zero();  // [W s/m^3]
};

/// Affine model u_N ~ value + d_mass (m - m_ref) + d_r . (r - r_ref) of T(r)/m.
struct ThrustAccelModel {
  double value = 0.0;
  double d_mass = 0.0;
  Vec3 d_r = Vec3::Zero();

  double evaluate(const State& ref, const State& x) const {
    return value + d_mass * (x.m - ref.m) + d_r.dot(x.r - ref.r);
  }
};

/**
 * Three-degree-of-freedom point-mass dynamics under Keplerian gravity, drag
 * in a rotating atmosphere and a thrust term whose direction depends on the
 * guidance mode. With the atmosphere disabled, density and pressure are zero.
 */
class Dynamics {
 public:
  Dynamics(EarthModel earth, VehicleModel vehicle, bool atmosphere_enabled = true)
      : earth_(earth), vehicle_(std::move(vehicle)), atmosphere_enabled_(atmosphere_enabled) {}

  const EarthModel& earth() const { return earth_; }
  const VehicleModel& vehicle() const { return vehicle_; }
  bool atmosphere_enabled() const { return atmosphere_enabled_; }

  AtmosphereSample air(const Vec3& r) const;
  Vec3 relative_velocity(const State& x) const;
  Vec3 drag_force(const State& x, const AtmosphereSample& air) const;

  /// Actual thrust T_vac(t) - p A_e of the phase's stage, zero when unpowered.
  double thrust(const Phase& phase, double t_ign, double pressure) const;
  double mass_flow(const Phase& phase, double t_ign) const;

  /// Right-hand side. The control is the commanded acceleration and must be
  /// given exactly in optimal-guidance phases.
  Vec7 eom(const State& x, const std::optional<Vec3>& control, const Phase& phase,
           double t_ign) const;

  HeatFluxSample heat_flux(const State& x) const;

  DynamicsJacobians state_jacobian(const State& x, const std::optional<Vec3>& control,
                                   const Phase& phase, double t_ign) const;

  /// First-order model of T(r)/m about the reference; optimal phases only.
  ThrustAccelModel u_n_linear_coefficients(const State& ref, const Phase& phase,
                                           double t_ign) const;

 private:
  void check_inputs(const State& x, const std::optional<Vec3>& control, const Phase& phase) const;

  EarthModel earth_;
  VehicleModel vehicle_;
  bool atmosphere_enabled_;
};

}  // namespace ascent
