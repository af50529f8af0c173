#include <cmath>

#include "doctest.h"

#include "ascent/mission.hpp"

using namespace ascent;

namespace {

constexpr double kDeg = M_PI / 180.0;

PhasePlan vega_plan(bool constrained) {
  const EarthModel e;
  return build_phase_plan(vega_vehicle(), PhaseSchedule{},
                          TargetOrbit{e.r_earth + 700e3, 90.0 * kDeg},
                          SplashDownSpec{constrained, 65.79 * kDeg});
}

}  // namespace

TEST_CASE("phase sequence") {
  const PhasePlan p = vega_plan(true);
  REQUIRE(p.size() == 13);
  using G = GuidanceMode;
  const G modes[] = {G::kVertical, G::kOptimal, G::kGravityTurn, G::kCoast, G::kGravityTurn,
                     G::kCoast,    G::kOptimal, G::kOptimal,     G::kCoast, G::kOptimal,
                     G::kCoast,    G::kOptimal, G::kReturn};
  for (int i = 0; i < 13; ++i) {
    CAPTURE(i + 1);
    CHECK(p.phases[i].number == i + 1);
    CHECK(p.phases[i].guidance == modes[i]);
    CHECK(p.phases[i].free_time == (i + 1 >= 10));
    CHECK(p.phases[i].heat_flux_constrained == (i + 1 >= 8 && i + 1 <= 12));
  }
  CHECK(p.return_phase == 12);
  CHECK(p.return_anchor == p.index_of(8));
  CHECK(p.return_mass == vega_vehicle().stages[2].dry_mass);

  const PhasePlan u = vega_plan(false);
  CHECK(u.size() == 12);
  CHECK_FALSE(u.has_return());
}

TEST_CASE("fixed durations span the stage burns") {
  const PhasePlan p = vega_plan(false);
  const VehicleModel v = vega_vehicle();
  CHECK(p.by_number(3).duration == 91.3);
  const double s1 = p.by_number(1).duration + p.by_number(2).duration + p.by_number(3).duration;
  CHECK(s1 == doctest::Approx(v.stages[0].burn_time).epsilon(1e-12));
  CHECK(p.by_number(8).duration == 104.6);
  CHECK(p.by_number(7).duration + p.by_number(8).duration ==
        doctest::Approx(v.stages[2].burn_time).epsilon(1e-12));
  CHECK(p.by_number(8).burn_clock_offset == doctest::Approx(5.4).epsilon(1e-12));
  CHECK(p.by_number(3).burn_clock_offset == doctest::Approx(10.7).epsilon(1e-12));
}

TEST_CASE("upper-stage burn coupling") {
  const PhasePlan p = vega_plan(false);
  CHECK(p.phases[p.first_burn].number == 10);
  CHECK(p.phases[p.second_burn].number == 12);
  CHECK(p.upper_stage_burn_time == 502.1);
  CHECK(p.phases[p.first_burn].duration + p.phases[p.second_burn].duration ==
        doctest::Approx(502.1).epsilon(1e-12));
  CHECK(p.phases[p.final_phase].number == 12);
}

TEST_CASE("mass drops") {
  const PhasePlan p = vega_plan(false);
  const VehicleModel v = vega_vehicle();
  CHECK(p.by_number(4).mass_drop == v.stages[0].dry_mass);
  CHECK(p.by_number(6).mass_drop == v.stages[1].dry_mass);
  CHECK(p.by_number(8).mass_drop == v.fairing_mass);
  CHECK(p.by_number(9).mass_drop == v.stages[2].dry_mass);
  double total = 0.0;
  for (const Phase& ph : p.phases) total += ph.mass_drop;
  CHECK(total == doctest::Approx(v.stages[0].dry_mass + v.stages[1].dry_mass +
                                 v.stages[2].dry_mass + v.fairing_mass).epsilon(1e-14));
}

TEST_CASE("default meshes") {
  const auto m = default_meshes();
  REQUIRE(m.size() == 13);
  const int nodes[] = {6, 6, 18, 6, 20, 15, 6, 20, 10, 20, 20, 20, 101};
  for (int i = 0; i < 13; ++i) CHECK(m[i].nodes() == nodes[i]);
  CHECK(m[12].segments() == 10);
}

TEST_CASE("schedule errors") {
  const EarthModel e;
  const TargetOrbit t{e.r_earth + 700e3, 90.0 * kDeg};
  PhaseSchedule s;
  s.fixed_durations[2] = 95.0;
  CHECK_THROWS_AS(build_phase_plan(vega_vehicle(), s, t, SplashDownSpec{}), ScheduleError);
  s = PhaseSchedule{};
  s.second_burn_guess = 600.0;
  CHECK_THROWS_AS(build_phase_plan(vega_vehicle(), s, t, SplashDownSpec{}), ScheduleError);
  s = PhaseSchedule{};
  s.coast_guess = -1.0;
  CHECK_THROWS_AS(build_phase_plan(vega_vehicle(), s, t, SplashDownSpec{}), ScheduleError);
  CHECK_THROWS_AS(build_phase_plan(vega_vehicle(), PhaseSchedule{}, t, SplashDownSpec{true, 2.0}),
                  ScheduleError);
  s = PhaseSchedule{};
  s.meshes = default_meshes();
  s.meshes[4].orders = {0};
  CHECK_THROWS_AS(build_phase_plan(vega_vehicle(), s, t, SplashDownSpec{}), ScheduleError);
}

TEST_CASE("target orbit") {
  const EarthModel e;
  const TargetOrbit polar{e.r_earth + 700e3, 90.0 * kDeg};
  CHECK(std::abs(polar.angular_momentum_z(e.mu)) <= 1e-16 * std::sqrt(e.mu * polar.semi_major_axis));
  const TargetOrbit iss{e.r_earth + 400e3, 51.6 * kDeg};
  CHECK(iss.angular_momentum_z(e.mu) ==
        doctest::Approx(std::cos(51.6 * kDeg) * std::sqrt(e.mu * iss.semi_major_axis)).epsilon(1e-15));
}

TEST_CASE("pitch-over azimuth") {
  CHECK(std::abs(pitch_over_azimuth(90.0 * kDeg, 0.0)) <= 1e-15);
  CHECK(pitch_over_azimuth(51.6 * kDeg, 5.2 * kDeg) / kDeg == doctest::Approx(38.6).epsilon(1e-3));
  CHECK_THROWS_AS(pitch_over_azimuth(0.0, 10.0 * kDeg), InclinationError);
}

TEST_CASE("initial state") {
  const EarthModel e;
  const auto [r0, v0] = initial_state(e, LaunchSite{});
  CHECK(v0.norm() == doctest::Approx(e.omega * e.r_earth).epsilon(1e-15));
  CHECK(v0.norm() == doctest::Approx(465.1).epsilon(1e-4));
  CHECK(r0.y() == 0.0);

  const auto [rp, vp] = initial_state(e, LaunchSite{90.0 * kDeg});
  CHECK(vp.norm() <= 1e-9);
  for (double lat : {-40.0, 5.2, 70.0}) {
    const auto [r, v] = initial_state(e, LaunchSite{lat * kDeg});
    CHECK(std::abs(r.dot(v)) <= 1e-9 * r.norm() * (1.0 + v.norm()));
    CHECK(r.norm() == doctest::Approx(e.r_earth).epsilon(1e-15));
  }
}
