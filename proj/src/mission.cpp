#include "ascent/mission.hpp"

#include <cmath>
#include <numeric>

namespace ascent {

const char* to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::kVertical: return "vertical";
    case GuidanceMode::kGravityTurn: return "gravity_turn";
    case GuidanceMode::kOptimal: return "optimal";
    case GuidanceMode::kCoast: return "coast";
    case GuidanceMode::kReturn: return "return";
  }
  return "unknown";
}

int MeshSpec::collocation_nodes() const {
  return std::accumulate(orders.begin(), orders.end(), 0);
}

double TargetOrbit::angular_momentum_z(double mu) const {
  return std::cos(inclination) * std::sqrt(mu * semi_major_axis);
}

double TargetOrbit::circular_speed(double mu) const { return std::sqrt(mu / semi_major_axis); }

std::vector<MeshSpec> default_meshes() {
  std::vector<MeshSpec> m;
  for (int p : {5, 5, 17, 5, 19, 14, 5, 19, 9, 19, 19, 19}) m.push_back(MeshSpec{{p}});
  m.push_back(MeshSpec{std::vector<int>(10, 10)});
  return m;
}

const Phase& PhasePlan::by_number(int number) const { return phases.at(index_of(number)); }

int PhasePlan::index_of(int number) const {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].number == number) return static_cast<int>(i);
  }
  throw std::out_of_range("PhasePlan: no phase " + std::to_string(number));
}

namespace {

void check_stage_span(double sum, double burn_time, int stage) {
  if (std::abs(sum - burn_time) > 1e-6 * (1.0 + burn_time)) {
    throw ScheduleError("fixed durations of stage " + std::to_string(stage) + " sum to " +
                        std::to_string(sum) + " s but its burn time is " +
                        std::to_string(burn_time) + " s");
  }
}

}  // namespace

PhasePlan build_phase_plan(const VehicleModel& vehicle, const PhaseSchedule& schedule,
                           const TargetOrbit& target, const SplashDownSpec& splash,
                           const LaunchSite& site) {
  vehicle.check();
  if (vehicle.stages.size() != 4) throw ScheduleError("the flight plan needs a four-stage vehicle");
  const auto& d = schedule.fixed_durations;
  if (d.size() != 9) throw ScheduleError("expected 9 fixed phase durations");
  for (double v : d) {
    if (!(v > 0.0)) throw ScheduleError("fixed phase durations must be positive");
  }
  if (!(schedule.coast_guess > 0.0) || !(schedule.second_burn_guess > 0.0) ||
      !(schedule.return_guess > 0.0)) {
    throw ScheduleError("free-phase guesses must be positive");
  }
  if (!(target.semi_major_axis > 0.0) || target.inclination < 0.0 || target.inclination > M_PI) {
    throw ScheduleError("invalid target orbit");
  }
  if (std::abs(splash.latitude) > M_PI / 2) throw ScheduleError("splash-down latitude out of range");

  const auto& st = vehicle.stages;
  check_stage_span(d[0] + d[1] + d[2], st[0].burn_time, 1);
  check_stage_span(d[4], st[1].burn_time, 2);
  check_stage_span(d[6] + d[7], st[2].burn_time, 3);
  const double tb4 = st[3].burn_time;
  if (!(schedule.second_burn_guess < tb4)) {
    throw ScheduleError("second upper-stage burn guess exceeds the stage burn time");
  }

  std::vector<MeshSpec> meshes = schedule.meshes.empty() ? default_meshes() : schedule.meshes;
  if (meshes.size() != 13) throw ScheduleError("expected 13 phase meshes");
  for (const MeshSpec& m : meshes) {
    if (m.orders.empty()) throw ScheduleError("mesh with no segments");
    for (int p : m.orders) {
      if (p < 1 || p > 64) throw ScheduleError("mesh order out of range [1, 64]");
    }
  }

  using G = GuidanceMode;
  auto make = [&](int number, G mode, std::optional<int> stage, bool free_time, double duration,
                  double offset, double drop) {
    Phase p;
    p.number = number;
    p.guidance = mode;
    p.stage = stage;
    p.free_time = free_time;
    p.duration = duration;
    p.mesh = meshes[number - 1];
    p.heat_flux_constrained = number >= 8 && number <= 12;
    p.burn_clock_offset = offset;
    p.mass_drop = drop;
    return p;
  };

  PhasePlan plan;
  plan.target = target;
  plan.splash = splash;
  plan.site = site;
  plan.phases = {
      make(1, G::kVertical, 0, false, d[0], 0.0, 0.0),
      make(2, G::kOptimal, 0, false, d[1], d[0], 0.0),
      make(3, G::kGravityTurn, 0, false, d[2], d[0] + d[1], 0.0),
      make(4, G::kCoast, std::nullopt, false, d[3], 0.0, st[0].dry_mass),
      make(5, G::kGravityTurn, 1, false, d[4], 0.0, 0.0),
      make(6, G::kCoast, std::nullopt, false, d[5], 0.0, st[1].dry_mass),
      make(7, G::kOptimal, 2, false, d[6], 0.0, 0.0),
      make(8, G::kOptimal, 2, false, d[7], d[6], vehicle.fairing_mass),
      make(9, G::kCoast, std::nullopt, false, d[8], 0.0, st[2].dry_mass),
      make(10, G::kOptimal, 3, true, tb4 - schedule.second_burn_guess, 0.0, 0.0),
      make(11, G::kCoast, std::nullopt, true, schedule.coast_guess, 0.0, 0.0),
      // The upper stage has constant thrust and flow, so the burn clock of the
      // second firing only needs to stay inside the window.
      make(12, G::kOptimal, 3, true, schedule.second_burn_guess, 0.0, 0.0),
  };
  plan.first_burn = 9;
  plan.second_burn = 11;
  plan.final_phase = 11;
  plan.upper_stage_burn_time = tb4;
  plan.return_mass = st[2].dry_mass;
  plan.return_anchor = 7;
  if (splash.constrained) {
    Phase ret = make(13, G::kReturn, std::nullopt, true, schedule.return_guess, 0.0, 0.0);
    ret.heat_flux_constrained = false;
    plan.phases.push_back(ret);
    plan.return_phase = 12;
  }
  return plan;
}

double pitch_over_azimuth(double inclination, double launch_latitude) {
  const double ratio = std::cos(inclination) / std::cos(launch_latitude);
  if (!(std::abs(ratio) <= 1.0)) {
    throw InclinationError("target inclination is not reachable from the launch latitude");
  }
  return std::asin(ratio);
}

std::pair<Vec3, Vec3> initial_state(const EarthModel& earth, const LaunchSite& site) {
  const Vec3 r = earth.r_earth * Vec3(std::cos(site.latitude), 0.0, std::sin(site.latitude));
  const Vec3 v = earth.omega_vector().cross(r);
  return {r, v};
}

}  // namespace ascent
