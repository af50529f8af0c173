#include <cmath>

#include "doctest.h"

#include "ascent/integrator.hpp"

using namespace ascent;

TEST_CASE("exponential decay") {
  const OdeRhs f = [](double, const Eigen::VectorXd& y) -> Eigen::VectorXd { return -y; };
  const OdeResult r = integrate(f, 0.0, Eigen::VectorXd::Ones(1), 5.0);
  REQUIRE(r.status == OdeStatus::kOk);
  CHECK(r.t == 5.0);
  CHECK(std::abs(r.y(0) - std::exp(-5.0)) <= 1e-9 * std::exp(-5.0));
}

TEST_CASE("harmonic oscillator with dense output") {
  const OdeRhs f = [](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    Eigen::VectorXd d(2);
    d << y(1), -y(0);
    return d;
  };
  DenseSolution sol;
  const OdeResult r = integrate(f, 0.0, Eigen::Vector2d(1.0, 0.0), 20.0, {}, [&](const DenseStep& s) {
    sol.steps.push_back(s);
    return false;
  });
  REQUIRE(r.status == OdeStatus::kOk);
  CHECK(std::abs(r.y(0) - std::cos(20.0)) <= 1e-8);
  REQUIRE_FALSE(sol.empty());
  CHECK(sol.t_begin() == 0.0);
  CHECK(sol.t_end() == 20.0);
  for (double t = 0.05; t < 20.0; t += 0.37) {
    const Eigen::VectorXd y = sol(t);
    CHECK(std::abs(y(0) - std::cos(t)) <= 1e-8);
    CHECK(std::abs(y(1) + std::sin(t)) <= 1e-8);
  }
  for (const DenseStep& s : sol.steps) {
    CHECK((s(s.t0) - s.y0).norm() <= 1e-14);
    CHECK((s(s.t1) - s.y1).norm() <= 1e-14);
  }
  CHECK((sol(-1.0) - sol(0.0)).norm() == 0.0);
  CHECK((sol(25.0) - sol(20.0)).norm() == 0.0);
}

TEST_CASE("event location") {
  const OdeRhs f = [](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    Eigen::VectorXd d(2);
    d << y(1), -y(0);
    return d;
  };
  const auto g = [](const Eigen::VectorXd& y) { return y(0); };
  double root = -1.0;
  const OdeResult r = integrate(f, 0.0, Eigen::Vector2d(1.0, 0.0), 10.0, {}, [&](const DenseStep& s) {
    if (g(s.y1) > 0.0) return false;
    root = locate_root(s, g, 1e-12);
    return true;
  });
  CHECK(r.status == OdeStatus::kStopped);
  CHECK(std::abs(root - M_PI / 2.0) <= 1e-10);
}

TEST_CASE("backward integration") {
  const OdeRhs f = [](double t, const Eigen::VectorXd&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(1, 3.0 * t * t);
  };
  const OdeResult r = integrate(f, 2.0, Eigen::VectorXd::Constant(1, 8.0), 0.0);
  REQUIRE(r.status == OdeStatus::kOk);
  CHECK(std::abs(r.y(0)) <= 1e-10);
}

TEST_CASE("non-finite right-hand side") {
  const OdeRhs f = [](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(1, std::nan("")) + y;
  };
  CHECK(integrate(f, 0.0, Eigen::VectorXd::Ones(1), 1.0).status != OdeStatus::kOk);
}

TEST_CASE("step limit") {
  const OdeRhs f = [](double, const Eigen::VectorXd& y) -> Eigen::VectorXd { return -y; };
  OdeOptions o;
  o.max_steps = 3;
  CHECK(integrate(f, 0.0, Eigen::VectorXd::Ones(1), 100.0, o).status == OdeStatus::kMaxSteps);
}
