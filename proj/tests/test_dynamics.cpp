#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "ascent/dynamics.hpp"

using namespace ascent;

namespace {

const EarthModel kEarth;

Phase phase_of(GuidanceMode mode, std::optional<int> stage) {
  Phase p;
  p.number = 1;
  p.guidance = mode;
  p.stage = stage;
  return p;
}

struct RandomStates {
  std::mt19937 rng{2024};
  State next() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> alt(1e3, 150e3);
    std::uniform_real_distribution<double> speed(300.0, 7800.0);
    std::uniform_real_distribution<double> mass(1e3, 1.3e5);
    Vec3 dir(u(rng), u(rng), u(rng));
    dir.normalize();
    Vec3 vdir(u(rng), u(rng), u(rng));
    vdir.normalize();
    return State{(kEarth.r_earth + alt(rng)) * dir, speed(rng) * vdir, mass(rng)};
  }
};

// Jacobian in scaled units: x_s = x / su, t_s = t / TU.
Mat7 scaled(const Mat7& a, const ScaleSet& s) {
  const Vec7 su = s.state_units();
  return s.time * su.cwiseInverse().asDiagonal() * a * su.asDiagonal();
}

Mat7 finite_difference(const Dynamics& d, const State& x, const std::optional<Vec3>& u,
                       const Phase& p, double t_ign, const ScaleSet& s) {
  Mat7 j;
  const Vec7 su = s.state_units();
  const Vec7 x0 = x.to_vector();
  for (int c = 0; c < 7; ++c) {
    const double h = 1e-7 * su(c);
    Vec7 xp = x0, xm = x0;
    xp(c) += h;
    xm(c) -= h;
    j.col(c) = (d.eom(State::from_vector(xp), u, p, t_ign) - d.eom(State::from_vector(xm), u, p, t_ign)) /
               (2.0 * h);
  }
  return j;
}

}  // namespace

TEST_CASE("relative velocity") {
  const Dynamics d(kEarth, vega_vehicle());
  const Vec3 r(kEarth.r_earth, 0.0, 0.0);
  const Vec3 co = kEarth.omega_vector().cross(r);
  CHECK(d.relative_velocity(State{r, co, 1.0}).norm() <= 1e-12);
  CHECK(d.relative_velocity(State{Vec3(0.0, 0.0, kEarth.r_earth), Vec3::Zero(), 1.0}).norm() == 0.0);
  const Vec3 w = d.relative_velocity(State{r, Vec3::Zero(), 1.0});
  CHECK(w.x() == 0.0);
  CHECK(w.y() == doctest::Approx(-465.1).epsilon(1e-4));
  CHECK(w.z() == 0.0);
}

TEST_CASE("drag force") {
  const Dynamics d(kEarth, vega_vehicle());
  const Vec3 r(kEarth.r_earth, 0.0, 0.0);
  const Vec3 co = kEarth.omega_vector().cross(r);
  AtmosphereSample sl;
  sl.density = 1.225;
  CHECK(d.drag_force(State{r, co, 1.0}, sl).norm() <= 1e-9);

  const State x{r, co + Vec3(100.0, 0.0, 0.0), 1.0};
  const Vec3 f = d.drag_force(x, sl);
  CHECK(f.norm() == doctest::Approx(0.5 * 0.381 * 9.079 * 1.225 * 100.0 * 100.0).epsilon(1e-9));
  CHECK(f.norm() == doctest::Approx(21188.0).epsilon(1e-4));
  CHECK(f.x() < 0.0);
  const State x2{r, co + Vec3(200.0, 0.0, 0.0), 1.0};
  CHECK(d.drag_force(x2, sl).norm() == doctest::Approx(4.0 * f.norm()).epsilon(1e-12));
}

TEST_CASE("equations of motion") {
  const VehicleModel veh = vega_vehicle();
  const Dynamics d(kEarth, veh);
  const Dynamics vac(kEarth, veh, false);

  SUBCASE("coast in vacuum is Keplerian") {
    const State x{Vec3(kEarth.r_earth + 700e3, 1e5, -2e5), Vec3(10.0, 7500.0, 30.0), 900.0};
    const Vec7 f = vac.eom(x, std::nullopt, phase_of(GuidanceMode::kCoast, std::nullopt), 0.0);
    CHECK((f.segment<3>(3) - gravity_accel(kEarth, x.r)).norm() <= 1e-15);
    CHECK((f.head<3>() - x.v).norm() == 0.0);
    CHECK(f(6) == 0.0);
  }
  SUBCASE("vertical liftoff") {
    const auto r0 = Vec3(kEarth.r_earth, 0.0, 0.0);
    const State x{r0, kEarth.omega_vector().cross(r0), liftoff_mass(veh, 100.0)};
    const Vec7 f = d.eom(x, std::nullopt, phase_of(GuidanceMode::kVertical, 0), 0.0);
    CHECK(f(6) == doctest::Approx(-1034.09).epsilon(1e-12));
    const double thrust = 2827.37e3 - 101325.0 * 3.092;
    const Vec3 a = f.segment<3>(3) - gravity_accel(kEarth, r0);
    CHECK(a.x() == doctest::Approx(thrust / x.m).epsilon(1e-12));
  }
  SUBCASE("gravity turn thrust is along the relative velocity") {
    RandomStates gen;
    for (int k = 0; k < 20; ++k) {
      const State x = gen.next();
      const Vec7 f = d.eom(x, std::nullopt, phase_of(GuidanceMode::kGravityTurn, 1), 30.0);
      const Vec3 a = f.segment<3>(3) - gravity_accel(kEarth, x.r);
      const Vec3 w = d.relative_velocity(x);
      CHECK(a.cross(w).norm() <= 1e-10 * a.norm() * w.norm());
      CHECK(f(6) == doctest::Approx(-veh.stages[1].mass_flow(30.0)).epsilon(1e-14));
    }
  }
  SUBCASE("optimal guidance adds the commanded acceleration") {
    const State x{Vec3(kEarth.r_earth + 200e3, 0.0, 0.0), Vec3(0.0, 7000.0, 0.0), 2000.0};
    const Vec3 u(1.0, -2.0, 3.0);
    const Phase p = phase_of(GuidanceMode::kOptimal, 3);
    const Vec7 with = d.eom(x, u, p, 10.0);
    const Vec7 coast = d.eom(x, std::nullopt, phase_of(GuidanceMode::kCoast, std::nullopt), 0.0);
    CHECK((with.segment<3>(3) - coast.segment<3>(3) - u).norm() <= 1e-12);
    CHECK(with(6) == doctest::Approx(-0.7919).epsilon(1e-14));
  }
  SUBCASE("errors") {
    const State x{Vec3(kEarth.r_earth + 200e3, 0.0, 0.0), Vec3(0.0, 7000.0, 0.0), 2000.0};
    CHECK_THROWS_AS(d.eom(x, std::nullopt, phase_of(GuidanceMode::kOptimal, 3), 0.0), DynamicsError);
    CHECK_THROWS_AS(d.eom(x, Vec3::Zero(), phase_of(GuidanceMode::kCoast, std::nullopt), 0.0),
                    DynamicsError);
    State bad = x;
    bad.m = 0.0;
    CHECK_THROWS_AS(d.eom(bad, std::nullopt, phase_of(GuidanceMode::kCoast, std::nullopt), 0.0),
                    DynamicsError);
  }
}

TEST_CASE("heat flux") {
  const Dynamics d(kEarth, vega_vehicle());
  const Vec3 r(kEarth.r_earth, 0.0, 0.0);
  const Vec3 co = kEarth.omega_vector().cross(r);
  const HeatFluxSample q = d.heat_flux(State{r, co + Vec3(0.0, 0.0, 100.0), 1.0});
  CHECK(q.qdot == doctest::Approx(612500.0).epsilon(1e-5));
  const HeatFluxSample z = d.heat_flux(State{r, co, 1.0});
  CHECK(z.qdot == 0.0);
  CHECK(z.d_qdot_d_v.norm() == 0.0);

  const Dynamics vac(kEarth, vega_vehicle(), false);
  const HeatFluxSample v = vac.heat_flux(State{r, co + Vec3(0.0, 0.0, 100.0), 1.0});
  CHECK(v.qdot == 0.0);
  CHECK(v.d_qdot_d_r.norm() == 0.0);
  CHECK(v.d_qdot_d_v.norm() == 0.0);
}

TEST_CASE("heat-flux gradients match finite differences") {
  const Dynamics d(kEarth, vega_vehicle());
  RandomStates gen;
  for (int k = 0; k < 50; ++k) {
    const State x = gen.next();
    const HeatFluxSample q = d.heat_flux(x);
    for (int c = 0; c < 3; ++c) {
      State rp = x, rm = x, vp = x, vm = x;
      const double hr = 1e-2, hv = 1e-4;
      rp.r(c) += hr;
      rm.r(c) -= hr;
      vp.v(c) += hv;
      vm.v(c) -= hv;
      const double fd_r = (d.heat_flux(rp).qdot - d.heat_flux(rm).qdot) / (2.0 * hr);
      const double fd_v = (d.heat_flux(vp).qdot - d.heat_flux(vm).qdot) / (2.0 * hv);
      CHECK(std::abs(q.d_qdot_d_r(c) - fd_r) <= 1e-5 * q.d_qdot_d_r.norm());
      CHECK(std::abs(q.d_qdot_d_v(c) - fd_v) <= 1e-5 * q.d_qdot_d_v.norm());
    }
  }
}

TEST_CASE("state jacobian of a vacuum coast") {
  const Dynamics vac(kEarth, vega_vehicle(), false);
  const double rn = kEarth.r_earth + 700e3;
  const State x{Vec3(rn, 0.0, 0.0), Vec3(0.0, 7500.0, 0.0), 900.0};
  const DynamicsJacobians j =
      vac.state_jacobian(x, std::nullopt, phase_of(GuidanceMode::kCoast, std::nullopt), 0.0);
  CHECK((j.a_mat.block<3, 3>(0, 3) - Mat3::Identity()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Mat3> es(j.a_mat.block<3, 3>(3, 0));
  const double k = kEarth.mu / (rn * rn * rn);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-k).epsilon(1e-12));
  CHECK(es.eigenvalues()(1) == doctest::Approx(-k).epsilon(1e-12));
  CHECK(es.eigenvalues()(2) == doctest::Approx(2.0 * k).epsilon(1e-12));
}

TEST_CASE("state jacobians match finite differences in every mode") {
  const Dynamics d(kEarth, vega_vehicle());
  const ScaleSet s = ScaleSet::from_earth(kEarth);
  struct Mode {
    const char* name;
    Phase phase;
    double t_ign;
    bool control;
  };
  const Mode modes[] = {
      {"vertical", phase_of(GuidanceMode::kVertical, 0), 1.0, false},
      {"gravity turn", phase_of(GuidanceMode::kGravityTurn, 1), 40.0, false},
      {"optimal", phase_of(GuidanceMode::kOptimal, 2), 60.0, true},
      {"coast", phase_of(GuidanceMode::kCoast, std::nullopt), 0.0, false},
      {"return", phase_of(GuidanceMode::kReturn, std::nullopt), 0.0, false},
  };
  RandomStates gen;
  for (const Mode& m : modes) {
    CAPTURE(m.name);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const State x = gen.next();
      const std::optional<Vec3> u = m.control ? std::optional<Vec3>(Vec3(3.0, -1.0, 2.0)) : std::nullopt;
      const DynamicsJacobians j = d.state_jacobian(x, u, m.phase, m.t_ign);
      const Mat7 a = scaled(j.a_mat, s);
      const Mat7 fd = scaled(finite_difference(d, x, u, m.phase, m.t_ign, s), s);
      worst = std::max(worst, (a - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()));
      CHECK((j.f_val - d.eom(x, u, m.phase, m.t_ign)).norm() == 0.0);
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("control map is a constant selector") {
  const Dynamics d(kEarth, vega_vehicle());
  RandomStates gen;
  Eigen::Matrix<double, 7, 3> sel = Eigen::Matrix<double, 7, 3>::Zero();
  sel.block<3, 3>(3, 0).setIdentity();
  for (int k = 0; k < 5; ++k) {
    const DynamicsJacobians j =
        d.state_jacobian(gen.next(), Vec3(1.0, 2.0, 3.0), phase_of(GuidanceMode::kOptimal, 3), 5.0);
    CHECK((j.b_mat - sel).norm() == 0.0);
  }
}

TEST_CASE("thrust acceleration model") {
  const VehicleModel veh = vega_vehicle();
  const Dynamics d(kEarth, veh);
  const Dynamics vac(kEarth, veh, false);
  const Phase p = phase_of(GuidanceMode::kOptimal, 2);

  SUBCASE("vacuum form") {
    const State ref{Vec3(kEarth.r_earth + 300e3, 0.0, 0.0), Vec3(0.0, 7000.0, 0.0), 5000.0};
    const ThrustAccelModel c = vac.u_n_linear_coefficients(ref, p, 20.0);
    const double t = veh.stages[2].vacuum_thrust(20.0);
    State x = ref;
    x.m = 4500.0;
    CHECK(c.evaluate(ref, x) == doctest::Approx(t / ref.m * (2.0 - x.m / ref.m)).epsilon(1e-14));
    CHECK(c.d_r.norm() == 0.0);
  }
  SUBCASE("anchor and finite differences") {
    RandomStates gen;
    for (int k = 0; k < 20; ++k) {
      State ref = gen.next();
      ref.r = ref.r.normalized() * (kEarth.r_earth + 20e3 + 1e3 * k);
      const ThrustAccelModel c = d.u_n_linear_coefficients(ref, p, 20.0);
      auto accel = [&](const State& x) { return d.thrust(p, 20.0, d.air(x.r).pressure) / x.m; };
      CHECK(c.evaluate(ref, ref) == accel(ref));
      State mp = ref, mm = ref;
      mp.m += 1e-2;
      mm.m -= 1e-2;
      CHECK(c.d_mass == doctest::Approx((accel(mp) - accel(mm)) / 2e-2).epsilon(1e-6));
      for (int q = 0; q < 3; ++q) {
        State rp = ref, rm = ref;
        rp.r(q) += 1e-1;
        rm.r(q) -= 1e-1;
        const double fd = (accel(rp) - accel(rm)) / 2e-1;
        CHECK(std::abs(c.d_r(q) - fd) <= 1e-6 * c.d_r.norm());
      }
    }
  }
  CHECK_THROWS_AS(d.u_n_linear_coefficients(State{}, phase_of(GuidanceMode::kCoast, std::nullopt), 0.0),
                  DynamicsError);
}
