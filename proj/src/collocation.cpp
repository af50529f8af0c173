#include "ascent/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ascent {

std::pair<double, double> legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0, p = x;
  for (int k = 2; k <= n; ++k) {
    const double p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
    p_prev = p;
    p = p_next;
  }
  double dp;
  if (std::abs(1.0 - x * x) > 1e-300 && std::abs(std::abs(x) - 1.0) > 0.0) {
    dp = n * (x * p - p_prev) / (x * x - 1.0);
  } else {
    dp = (x > 0 ? 1.0 : ((n % 2 == 0) ? -1.0 : 1.0)) * 0.5 * n * (n + 1.0);
  }
  return {p, dp};
}

std::vector<double> lgr_nodes(int p) {
  if (p < 1 || p > 64) throw OrderError("LGR order " + std::to_string(p) + " outside [1, 64]");
  std::vector<double> x(p);
  x[0] = -1.0;
  for (int k = 1; k < p; ++k) {
    // Chebyshev-Gauss-Radau guess.
    double xi = -std::cos(2.0 * M_PI * k / (2.0 * p - 1.0));
    for (int it = 0; it < 100; ++it) {
      const auto [a, da] = legendre(p - 1, xi);
      const auto [b, db] = legendre(p, xi);
      const double step = (a + b) / (da + db);
      xi -= step;
      if (std::abs(step) < 1e-16) break;
    }
    x[k] = xi;
  }
  std::sort(x.begin(), x.end());
  return x;
}

Eigen::VectorXd barycentric_weights(const std::vector<double>& nodes) {
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd w(n);
  for (int j = 0; j < n; ++j) {
    double prod = 1.0;
    for (int k = 0; k < n; ++k) {
      if (k != j) prod *= nodes[j] - nodes[k];
    }
    w(j) = 1.0 / prod;
  }
  return w;
}

Eigen::MatrixXd differentiation_matrix(const std::vector<double>& nodes,
                                       const Eigen::VectorXd& weights, int rows) {
  const int n = static_cast<int>(nodes.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, n);
  for (int i = 0; i < rows; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      d(i, j) = weights(j) / weights(i) / (nodes[i] - nodes[j]);
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

Eigen::VectorXd barycentric_eval(const std::vector<double>& nodes, const Eigen::VectorXd& weights,
                                 const Eigen::MatrixXd& values, double x) {
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd num = Eigen::VectorXd::Zero(values.rows());
  double den = 0.0;
  for (int j = 0; j < n; ++j) {
    const double dx = x - nodes[j];
    if (dx == 0.0) return values.col(j);
    const double t = weights(j) / dx;
    num += t * values.col(j);
    den += t;
  }
  return num / den;
}

SegmentGrid::SegmentGrid(int p) : order(p), nodes(lgr_nodes(p)) {
  nodes.push_back(1.0);
  weights = barycentric_weights(nodes);
  diff = differentiation_matrix(nodes, weights, p);
}

PhaseMesh::PhaseMesh(const MeshSpec& spec) {
  const int h = spec.segments();
  if (h < 1) throw OrderError("mesh needs at least one segment");
  boundaries_.resize(h + 1);
  for (int s = 0; s <= h; ++s) boundaries_[s] = static_cast<double>(s) / h;
  build(spec.orders);
}

PhaseMesh::PhaseMesh(std::vector<double> boundaries, const std::vector<int>& orders)
    : boundaries_(std::move(boundaries)) {
  if (boundaries_.size() != orders.size() + 1 || orders.empty()) {
    throw std::invalid_argument("PhaseMesh: boundaries must have one more entry than orders");
  }
  if (boundaries_.front() != 0.0 || boundaries_.back() != 1.0) {
    throw std::invalid_argument("PhaseMesh: boundaries must span [0, 1]");
  }
  for (std::size_t i = 1; i < boundaries_.size(); ++i) {
    if (!(boundaries_[i] > boundaries_[i - 1])) {
      throw std::invalid_argument("PhaseMesh: boundaries must be strictly increasing");
    }
  }
  build(orders);
}

void PhaseMesh::build(const std::vector<int>& orders) {
  grids_.clear();
  tau_.clear();
  first_node_.clear();
  control_weights_.clear();
  for (std::size_t s = 0; s < orders.size(); ++s) {
    grids_.emplace_back(orders[s]);
    const SegmentGrid& g = grids_.back();
    first_node_.push_back(static_cast<int>(tau_.size()));
    for (int j = 0; j < g.order; ++j) tau_.push_back(eta_to_tau(static_cast<int>(s), g.nodes[j]));
    control_weights_.push_back(
        barycentric_weights(std::vector<double>(g.nodes.begin(), g.nodes.begin() + g.order)));
  }
  tau_.push_back(1.0);
}

double PhaseMesh::eta_to_tau(int s, double eta) const {
  return half_width(s) * eta + 0.5 * (boundaries_[s + 1] + boundaries_[s]);
}

double PhaseMesh::tau_to_eta(int s, double tau) const {
  return (tau - 0.5 * (boundaries_[s + 1] + boundaries_[s])) / half_width(s);
}

int PhaseMesh::segment_of(double tau) const {
  const int h = segments();
  for (int s = 0; s < h - 1; ++s) {
    if (tau < boundaries_[s + 1]) return s;
  }
  return h - 1;
}

Eigen::VectorXd PhaseMesh::interpolate_state(const Eigen::MatrixXd& states, double tau) const {
  const int s = segment_of(tau);
  const SegmentGrid& g = grids_[s];
  return barycentric_eval(g.nodes, g.weights, states.middleCols(first_node_[s], g.order + 1),
                          tau_to_eta(s, tau));
}

Eigen::VectorXd PhaseMesh::interpolate_control(const Eigen::MatrixXd& controls, double tau) const {
  const int s = segment_of(tau);
  const SegmentGrid& g = grids_[s];
  const std::vector<double> col_nodes(g.nodes.begin(), g.nodes.begin() + g.order);
  return barycentric_eval(col_nodes, control_weights_[s],
                          controls.middleCols(first_node_[s], g.order), tau_to_eta(s, tau));
}

Eigen::VectorXd PhaseMesh::terminal_control(const Eigen::MatrixXd& controls) const {
  return interpolate_control(controls, 1.0);
}

}  // namespace ascent
