#pragma once

#include <stdexcept>

#include "ascent/state.hpp"

namespace ascent {

/// Spherical, uniformly rotating Earth with Keplerian gravity.
struct EarthModel {
  double mu = 3.986004418e14;      // [m^3/s^2]
  double r_earth = 6378137.0;      // [m]
  double omega = 7.2921159e-5;     // [rad/s], about +z

  Vec3 omega_vector() const { return Vec3(0.0, 0.0, omega); }
  double altitude(const Vec3& r) const { return r.norm() - r_earth; }
  void check() const;
};

struct AtmosphereSample {
  double density = 0.0;           // [kg/m^3]
  double pressure = 0.0;          // [Pa]
  double d_density_d_alt = 0.0;   // [kg/m^4]
  double d_pressure_d_alt = 0.0;  // [Pa/m]
};

namespace us76 {
inline constexpr double kSeaLevelDensity = 1.225;
inline constexpr double kSeaLevelPressure = 101325.0;
inline constexpr double kSeaLevelTemperature = 288.15;
inline constexpr double kGasConstant = 287.05287;  // [J/(kg K)]
inline constexpr double kG0 = 9.80665;
inline constexpr double kLayerTop = 86000.0;       // [m]
inline constexpr double kLowestAltitude = -1000.0; // [m]
inline constexpr double kFloorFraction = 1e-15;
}  // namespace us76

/**
 * U.S. Standard Atmosphere 1976, seven lapse-rate layers up to 86 km.
 *
 * Above 86 km density and pressure decay exponentially with their own local
 * scale heights at 86 km, floored at 1e-15 of the sea-level values. Below
 * -1000 m the model is held at its -1000 m values.
 */
AtmosphereSample atmosphere(double alt_m);

class DegeneratePositionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Keplerian acceleration -mu r / |r|^3. Throws when |r| < 0.1 R_E.
Vec3 gravity_accel(const EarthModel& earth, const Vec3& r);

/// Nondimensionalization units. Lengths in Earth radii, velocities in
/// circular velocity at the surface, masses in a reference mass.
struct ScaleSet {
  double length = 1.0;    // DU [m]
  double velocity = 1.0;  // VU [m/s]
  double time = 1.0;      // TU [s]
  double mass = 1.0;      // MU [kg]

  static ScaleSet from_earth(const EarthModel& earth, double reference_mass = 10000.0);

  double acceleration() const { return velocity / time; }
  double force() const { return mass * acceleration(); }
  double density() const { return mass / (length * length * length); }
  double pressure() const { return force() / (length * length); }

  /// Per-component scale of the 7-element state vector.
  Vec7 state_units() const {
    Vec7 s;
    s << length, length, length, velocity, velocity, velocity, mass;
    return s;
  }
};

State scale_state(const State& x, const ScaleSet& s);
State unscale_state(const State& x, const ScaleSet& s);

}  // namespace ascent
