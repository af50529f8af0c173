#include <cmath>
#include <random>

#include "doctest.h"

#include "ascent/collocation.hpp"

using namespace ascent;

namespace {

double poly(const Eigen::VectorXd& c, double x) {
  double y = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) y = y * x + c(k);
  return y;
}

double poly_derivative(const Eigen::VectorXd& c, double x) {
  double y = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) y = y * x + k * c(k);
  return y;
}

}  // namespace

TEST_CASE("LGR nodes") {
  const auto n1 = lgr_nodes(1);
  REQUIRE(n1.size() == 1);
  CHECK(n1[0] == -1.0);
  const auto n2 = lgr_nodes(2);
  REQUIRE(n2.size() == 2);
  CHECK(n2[0] == -1.0);
  CHECK(n2[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (int p : {3, 5, 10, 20, 40}) {
    CAPTURE(p);
    const auto n = lgr_nodes(p);
    REQUIRE(static_cast<int>(n.size()) == p);
    CHECK(n[0] == -1.0);
    for (int k = 1; k < p; ++k) {
      CHECK(n[k] > n[k - 1]);
      CHECK(n[k] < 1.0);
      CHECK(std::abs(legendre(p - 1, n[k]).first + legendre(p, n[k]).first) <= 1e-13);
    }
  }
  CHECK_THROWS_AS(lgr_nodes(0), OrderError);
  CHECK_THROWS_AS(lgr_nodes(65), OrderError);
}

TEST_CASE("differentiation matrix is exact on polynomials of degree p") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int p = 1; p <= 20; ++p) {
    CAPTURE(p);
    const SegmentGrid g(p);
    REQUIRE(g.diff.rows() == p);
    REQUIRE(g.diff.cols() == p + 1);
    CHECK(g.nodes.back() == 1.0);
    for (int i = 0; i < p; ++i) CHECK(std::abs(g.diff.row(i).sum()) <= 1e-12 * g.diff.row(i).cwiseAbs().sum());
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd c(p + 1);
      for (int k = 0; k <= p; ++k) c(k) = u(rng);
      Eigen::VectorXd v(p + 1);
      for (int j = 0; j <= p; ++j) v(j) = poly(c, g.nodes[j]);
      const Eigen::VectorXd dv = g.diff * v;
      for (int i = 0; i < p; ++i) {
        CHECK(std::abs(dv(i) - poly_derivative(c, g.nodes[i])) <= 1e-12 * std::max(1.0, g.diff.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("segment maps") {
  const PhaseMesh m(MeshSpec{std::vector<int>(10, 4)});
  CHECK(m.segments() == 10);
  CHECK(m.eta_to_tau(2, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.half_width(2) == doctest::Approx(0.05).epsilon(1e-15));
  for (int s = 0; s < 10; ++s) {
    for (double eta : {-1.0, -0.3, 0.7, 1.0}) {
      CHECK(m.tau_to_eta(s, m.eta_to_tau(s, eta)) == doctest::Approx(eta).epsilon(1e-14));
    }
  }
  CHECK(m.segment_of(0.0) == 0);
  CHECK(m.segment_of(0.25) == 2);
  CHECK(m.segment_of(1.0) == 9);
}

TEST_CASE("node bookkeeping") {
  const PhaseMesh m(MeshSpec{{3, 5, 2}});
  CHECK(m.nodes() == 11);
  CHECK(m.collocation_nodes() == 10);
  CHECK(m.first_node(0) == 0);
  CHECK(m.first_node(1) == 3);
  CHECK(m.first_node(2) == 8);
  CHECK(m.tau().front() == 0.0);
  CHECK(m.tau().back() == 1.0);
  for (int k = 1; k < m.nodes(); ++k) CHECK(m.tau()[k] > m.tau()[k - 1]);
  for (const auto& spec : default_meshes()) {
    const PhaseMesh pm(spec);
    int sum = 0;
    for (int p : spec.orders) sum += p;
    CHECK(pm.nodes() == sum + 1);
  }
  CHECK_THROWS(PhaseMesh(std::vector<double>{0.0, 0.5, 0.4, 1.0}, std::vector<int>{2, 2, 2}));
  CHECK_THROWS(PhaseMesh(std::vector<double>{0.0, 1.0}, std::vector<int>{2, 2}));
  CHECK_THROWS_AS(PhaseMesh(MeshSpec{{}}), OrderError);
}

TEST_CASE("interpolation") {
  const PhaseMesh m(MeshSpec{{4, 6, 3}});
  const auto& tau = m.tau();
  Eigen::MatrixXd states(2, m.nodes());
  for (int k = 0; k < m.nodes(); ++k) states.col(k) << std::sin(3.0 * tau[k]), 2.0 - 5.0 * tau[k];
  for (int k = 0; k < m.nodes(); ++k) {
    CHECK((m.interpolate_state(states, tau[k]) - states.col(k)).norm() <= 1e-14);
  }
  for (double t : {0.03, 0.41, 0.77, 0.999}) {
    CHECK(m.interpolate_state(states, t)(1) == doctest::Approx(2.0 - 5.0 * t).epsilon(1e-13));
  }

  Eigen::MatrixXd controls(1, m.collocation_nodes());
  for (int k = 0; k < m.collocation_nodes(); ++k) controls(0, k) = 1.0 + 4.0 * tau[k];
  for (int k = 0; k < m.collocation_nodes(); ++k) {
    CHECK(m.interpolate_control(controls, tau[k])(0) == doctest::Approx(controls(0, k)).epsilon(1e-14));
  }
  CHECK(m.terminal_control(controls)(0) == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(m.interpolate_control(controls, 0.5)(0) == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("spectral accuracy on exponential growth") {
  const int p = 10;
  const PhaseMesh m(MeshSpec{{p}});
  const SegmentGrid& g = m.grid(0);
  const double h = m.half_width(0);
  // D x = h x on the collocation nodes, x(0) = 1.
  Eigen::MatrixXd a = g.diff.rightCols(p);
  a.leftCols(p - 1) -= h * Eigen::MatrixXd::Identity(p, p).rightCols(p - 1);
  Eigen::VectorXd b = -g.diff.col(0);
  b(0) += h;
  const Eigen::VectorXd x = a.partialPivLu().solve(b);
  CHECK(std::abs(x(p - 1) - std::exp(1.0)) <= 1e-9);
}
