#include <cmath>

#include "doctest.h"

#include "ascent/vehicle.hpp"

using namespace ascent;

TEST_CASE("vacuum thrust") {
  const VehicleModel v = vega_vehicle();
  const Stage& s1 = v.stages[0];
  CHECK(s1.vacuum_thrust(0.0) == doctest::Approx(2827.37e3).epsilon(1e-12));
  CHECK(s1.vacuum_thrust(102.0) == doctest::Approx(1884.91e3).epsilon(1e-12));
  CHECK(s1.vacuum_thrust(51.0) == doctest::Approx(2356.14e3).epsilon(1e-12));
  CHECK_THROWS_AS(s1.vacuum_thrust(-1.0), BurnWindowError);
  CHECK_THROWS_AS(s1.vacuum_thrust(102.5), BurnWindowError);
}

TEST_CASE("mass flow") {
  const VehicleModel v = vega_vehicle();
  CHECK(v.stages[1].mass_flow(0.0) == doctest::Approx(382.81).epsilon(1e-12));
  for (double t : {0.0, 100.0, 250.0, 502.1}) {
    CHECK(v.stages[3].mass_flow(t) == doctest::Approx(0.7919).epsilon(1e-12));
  }
  CHECK_THROWS_AS(v.stages[1].mass_flow(80.0), BurnWindowError);
}

TEST_CASE("flow law integrates to the propellant mass within table rounding") {
  const VehicleModel v = vega_vehicle();
  // Trapezoid of the stage-3 endpoints: 0.5 (104.61 + 77.32) 110.
  CHECK(v.stages[2].burned_propellant() == doctest::Approx(10006.15).epsilon(1e-12));
  for (const Stage& s : v.stages) {
    CHECK(std::abs(s.burned_propellant() - s.propellant_mass) <= 1e-4 * s.propellant_mass);
  }
  Stage bad = v.stages[2];
  bad.mass_flow_burnout *= 1.1;
  CHECK_THROWS(bad.check());
}

TEST_CASE("total impulse is the trapezoid of the thrust endpoints") {
  const VehicleModel v = vega_vehicle();
  CHECK(v.stages[0].total_impulse() == doctest::Approx(0.5 * (2827.37e3 + 1884.91e3) * 102.0).epsilon(1e-14));
  CHECK(v.stages[3].total_impulse() == doctest::Approx(2.4509e3 * 502.1).epsilon(1e-14));
  // Midpoint rule is exact for the linear law.
  for (const Stage& s : v.stages) {
    const int n = 64;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += s.vacuum_thrust((k + 0.5) * s.burn_time / n);
    CHECK(sum * s.burn_time / n == doctest::Approx(s.total_impulse()).epsilon(1e-12));
  }
}

TEST_CASE("liftoff mass") {
  const VehicleModel v = vega_vehicle();
  CHECK(liftoff_mass(v, 0.0) == doctest::Approx(135884.6).epsilon(1e-12));
  CHECK(liftoff_mass(v, 100.0) == doctest::Approx(135984.6).epsilon(1e-12));
  CHECK(liftoff_mass(v, 10.0) < liftoff_mass(v, 11.0));
  CHECK_THROWS(liftoff_mass(v, -1.0));
}

TEST_CASE("mass bookkeeping") {
  const VehicleModel v = vega_vehicle();
  for (double pl : {0.0, 250.0, 1400.0}) {
    double m = liftoff_mass(v, pl);
    for (std::size_t k = 0; k < v.stages.size(); ++k) {
      m -= v.stages[k].propellant_mass;
      if (k + 1 < v.stages.size()) m -= v.stages[k].dry_mass;
    }
    m -= v.fairing_mass;
    CHECK(m == doctest::Approx(v.stages[3].dry_mass + pl).epsilon(1e-12));
  }
}

TEST_CASE("vehicle checks") {
  VehicleModel v = vega_vehicle();
  CHECK_NOTHROW(v.check());
  CHECK(v.fairing_mass == 535.3);
  CHECK(v.drag_coefficient == 0.381);
  CHECK(v.reference_area == 9.079);
  v.drag_coefficient = 0.0;
  CHECK_THROWS(v.check());
  v = vega_vehicle();
  v.stages[1].burn_time = 0.0;
  CHECK_THROWS(v.check());
}
