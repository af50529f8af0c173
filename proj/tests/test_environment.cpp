#include <cmath>
#include <random>

#include "doctest.h"

#include "ascent/environment.hpp"

using namespace ascent;

TEST_CASE("constants") {
  const EarthModel e;
  CHECK(e.mu == 3.986004418e14);
  CHECK(e.r_earth == 6378137.0);
  CHECK(e.omega == 7.2921159e-5);
}

TEST_CASE("atmosphere reference values") {
  const AtmosphereSample sl = atmosphere(0.0);
  CHECK(sl.density == doctest::Approx(1.2250).epsilon(1e-5));
  CHECK(sl.pressure == doctest::Approx(101325.0).epsilon(1e-12));

  // Layer formula at 11 km, evaluated independently:
  // T = 288.15 - 6.5 * 11 = 216.65 K, p = p0 (T/T0)^(g0/(R L)), rho = p / (R T).
  const double t11 = 288.15 - 0.0065 * 11000.0;
  const double p11 = 101325.0 * std::pow(t11 / 288.15, 9.80665 / (287.05287 * 0.0065));
  const double rho11 = p11 / (287.05287 * t11);
  const AtmosphereSample a11 = atmosphere(11000.0);
  CHECK(a11.density == doctest::Approx(rho11).epsilon(1e-10));
  CHECK(a11.density == doctest::Approx(0.3639).epsilon(2e-4));
  CHECK(a11.pressure == doctest::Approx(p11).epsilon(1e-10));

  CHECK(atmosphere(700e3).density <= 1e-12);
}

TEST_CASE("atmosphere below the lowest altitude is held") {
  const AtmosphereSample lo = atmosphere(-1000.0);
  const AtmosphereSample below = atmosphere(-5000.0);
  CHECK(below.density == lo.density);
  CHECK(below.pressure == lo.pressure);
  CHECK(below.d_density_d_alt == 0.0);
  CHECK(lo.density > atmosphere(0.0).density);
}

TEST_CASE("atmosphere is continuous at layer boundaries") {
  for (double h : {11000.0, 20000.0, 32000.0, 47000.0, 51000.0, 71000.0, 86000.0}) {
    CAPTURE(h);
    const double eps = 1e-6;
    const AtmosphereSample lo = atmosphere(h - eps);
    const AtmosphereSample hi = atmosphere(h + eps);
    CHECK(std::abs(lo.density - hi.density) <= 1e-9 * lo.density);
    CHECK(std::abs(lo.pressure - hi.pressure) <= 1e-9 * lo.pressure);
  }
}

TEST_CASE("atmosphere gradients match finite differences") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> alt(0.0, 120e3);
  for (int k = 0; k < 100; ++k) {
    const double h = alt(rng);
    CAPTURE(h);
    const double dh = 1e-2;
    const double fd_rho = (atmosphere(h + dh).density - atmosphere(h - dh).density) / (2.0 * dh);
    const double fd_p = (atmosphere(h + dh).pressure - atmosphere(h - dh).pressure) / (2.0 * dh);
    const AtmosphereSample s = atmosphere(h);
    CHECK(std::abs(s.d_density_d_alt - fd_rho) <= 1e-4 * std::abs(fd_rho));
    CHECK(std::abs(s.d_pressure_d_alt - fd_p) <= 1e-4 * std::abs(fd_p));
  }
}

TEST_CASE("atmosphere decays monotonically") {
  double prev = atmosphere(0.0).density;
  for (double h = 500.0; h <= 1000e3; h += 500.0) {
    const double rho = atmosphere(h).density;
    CHECK(rho <= prev);
    CHECK(rho > 0.0);
    prev = rho;
  }
}

TEST_CASE("gravity") {
  const EarthModel e;
  const Vec3 g = gravity_accel(e, Vec3(e.r_earth, 0.0, 0.0));
  CHECK(g.x() == doctest::Approx(-9.798).epsilon(1e-4));
  CHECK(g.y() == 0.0);
  CHECK(g.z() == 0.0);
  CHECK(g.norm() == doctest::Approx(e.mu / (e.r_earth * e.r_earth)).epsilon(1e-15));

  const Vec3 gp = gravity_accel(e, Vec3(0.0, 0.0, e.r_earth));
  CHECK(gp.z() == doctest::Approx(-e.mu / (e.r_earth * e.r_earth)).epsilon(1e-15));
  CHECK(gp.x() == 0.0);

  const Vec3 r(4.0e6, -3.0e6, 5.0e6);
  CHECK(gravity_accel(e, 2.0 * r).norm() == doctest::Approx(gravity_accel(e, r).norm() / 4.0).epsilon(1e-14));

  CHECK_THROWS_AS(gravity_accel(e, Vec3(1000.0, 0.0, 0.0)), DegeneratePositionError);
}

TEST_CASE("scaling") {
  const EarthModel e;
  const ScaleSet s = ScaleSet::from_earth(e);
  CHECK(s.length == e.r_earth);
  CHECK(s.velocity == doctest::Approx(std::sqrt(e.mu / e.r_earth)).epsilon(1e-15));
  CHECK(s.time == doctest::Approx(s.length / s.velocity).epsilon(1e-15));
  CHECK(s.mass == 10000.0);

  State x{Vec3(e.r_earth, 0.0, 0.0), Vec3(1.0, 2.0, 3.0), 10000.0};
  const State xs = scale_state(x, s);
  CHECK(xs.r.x() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(xs.m == doctest::Approx(1.0).epsilon(1e-15));

  const State y{Vec3(1.2e6, -7.0e6, 3.3e5), Vec3(-120.5, 7100.0, 3.0), 123456.7};
  const State back = unscale_state(scale_state(y, s), s);
  CHECK((back.r - y.r).norm() <= 1e-15 * y.r.norm());
  CHECK((back.v - y.v).norm() <= 1e-15 * y.v.norm());
  CHECK(std::abs(back.m - y.m) <= 1e-15 * y.m);
}
