#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ascent/mission.hpp"

namespace ascent {

class OrderError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Legendre polynomial P_n(x) and its derivative.
std::pair<double, double> legendre(int n, double x);

/// The p Legendre-Gauss-Radau roots of P_{p-1} + P_p in ascending order, -1 first.
std::vector<double> lgr_nodes(int p);

/// Barycentric weights of an arbitrary node set.
Eigen::VectorXd barycentric_weights(const std::vector<double>& nodes);

/// Segment grid: the p LGR points followed by the terminal point +1.
struct SegmentGrid {
  int order = 0;
  std::vector<double> nodes;  // p + 1 nodes
  Eigen::VectorXd weights;    // barycentric weights of all p + 1 nodes
  Eigen::MatrixXd diff;       // p x (p + 1) differentiation matrix

  explicit SegmentGrid(int p);
};

/// Derivative at the first p nodes of the Lagrange basis over all p + 1 nodes.
Eigen::MatrixXd differentiation_matrix(const std::vector<double>& nodes,
                                       const Eigen::VectorXd& weights, int rows);

/// Barycentric evaluation of the interpolant through (nodes, values) at x.
/// Each column of values is one sampled point.
Eigen::VectorXd barycentric_eval(const std::vector<double>& nodes, const Eigen::VectorXd& weights,
                                 const Eigen::MatrixXd& values, double x);

/**
 * hp mesh of one phase on the normalized domain [0, 1]. State nodes are
 * numbered globally with the segment interface nodes shared; the control
 * lives on the collocation nodes only (all state nodes but the last).
 */
class PhaseMesh {
 public:
  explicit PhaseMesh(const MeshSpec& spec);
  PhaseMesh(std::vector<double> boundaries, const std::vector<int>& orders);

  int segments() const { return static_cast<int>(grids_.size()); }
  int nodes() const { return static_cast<int>(tau_.size()); }
  int collocation_nodes() const { return nodes() - 1; }
  const SegmentGrid& grid(int s) const { return grids_[s]; }
  const std::vector<double>& boundaries() const { return boundaries_; }
  /// Normalized time of every state node.
  const std::vector<double>& tau() const { return tau_; }
  /// Global index of the first node of segment s.
  int first_node(int s) const { return first_node_[s]; }
  int segment_of(double tau) const;

  double eta_to_tau(int s, double eta) const;
  double tau_to_eta(int s, double tau) const;
  double half_width(int s) const { return 0.5 * (boundaries_[s + 1] - boundaries_[s]); }

  /// States are columns over all nodes; uses the segment's degree-p polynomial.
  Eigen::VectorXd interpolate_state(const Eigen::MatrixXd& states, double tau) const;
  /// Controls are columns over collocation nodes; degree p-1, extrapolated past
  /// the last collocation node of a segment.
  Eigen::VectorXd interpolate_control(const Eigen::MatrixXd& controls, double tau) const;
  /// Control at the terminal node, extrapolated from the last segment.
  Eigen::VectorXd terminal_control(const Eigen::MatrixXd& controls) const;

 private:
  void build(const std::vector<int>& orders);

  std::vector<double> boundaries_;
  std::vector<SegmentGrid> grids_;
  std::vector<double> tau_;
  std::vector<int> first_node_;
  std::vector<Eigen::VectorXd> control_weights_;
};

}  // namespace ascent
