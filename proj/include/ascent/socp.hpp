#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ascent::socp {

enum class ConeKind { kZero, kNonneg, kSoc };

struct ConeBlock {
  ConeKind kind = ConeKind::kNonneg;
  int dim = 0;
};

struct ConeSpec {
  std::vector<ConeBlock> blocks;

  int total_dim() const;
};

/**
 * Conic program in the form
 *
 *     minimize c'x  subject to  A x + s = b,  s in K,
 *
 * where K is a product of zero cones (equalities), nonnegative orthants and
 * second-order cones {s : s_0 >= |s_1..k|}, stacked in the order of
 * cones.blocks. The dual is maximize -b'y subject to A'y + c = 0, y in K*.
 */
struct ConicProblem {
  int num_vars = 0;
  int num_rows = 0;
  Eigen::VectorXd c;
  std::vector<Eigen::Triplet<double>> a;
  Eigen::VectorXd b;
  ConeSpec cones;
  std::vector<std::string> var_names;  // optional, for diagnostics

  std::string variable_name(int j) const;
};

struct ValidationReport {
  std::vector<std::string> defects;
  std::vector<std::string> warnings;
  bool ok() const { return defects.empty(); }
};

/// Structural checks. Duplicate (row, col) entries are legal and summed, but
/// reported as warnings.
ValidationReport validate(const ConicProblem& problem);

enum class SolveStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kMaxIters, kNumericalError };

const char* to_string(SolveStatus status);

struct ConicSolution {
  SolveStatus status = SolveStatus::kNumericalError;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd s;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  std::string message;
};

struct SolverSettings {
  double tol = 1e-8;
  double infeasibility_tol = 1e-8;
  int max_iters = 150;
  double static_regularization = 1e-7;
  int refinement_steps = 10;
  int equilibration_sweeps = 10;
  bool verbose = false;
};

class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) = 0;
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
class InteriorPointSolver final : public ConicSolver {
 public:
  ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) override;
};

std::unique_ptr<ConicSolver> make_default_solver();

/// Convenience wrapper around InteriorPointSolver.
ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings = {});

/// Incremental construction of a ConicProblem. Rows are grouped by cone type
/// at build time: equalities first, then inequalities, then cone blocks.
class ProblemBuilder {
 public:
  using Terms = std::vector<std::pair<int, double>>;

  int add_variable(const std::string& name);
  int add_variables(const std::string& name, int count);
  int num_vars() const { return static_cast<int>(names_.size()); }

  void add_cost(int var, double coef);
  /// sum(coef * x) == rhs
  void add_equality(const Terms& terms, double rhs);
  /// sum(coef * x) <= rhs
  void add_less_equal(const Terms& terms, double rhs);
  /// (rhs_0 - row_0 . x, ..., rhs_k - row_k . x) in the second-order cone
  void add_soc(const std::vector<Terms>& rows, const std::vector<double>& rhs);
  /// Variables (t, u_1..u_k) with |u| <= t.
  void add_norm_bound(int t, const std::vector<int>& u);

  int num_equalities() const { return static_cast<int>(eq_rhs_.size()); }
  int num_inequalities() const { return static_cast<int>(le_rhs_.size()); }

  ConicProblem build() const;

 private:
  std::vector<std::string> names_;
  std::vector<double> cost_;
  std::vector<Terms> eq_rows_, le_rows_, soc_rows_;
  std::vector<double> eq_rhs_, le_rhs_, soc_rhs_;
  std::vector<int> soc_dims_;
};

/// Plain-text exchange format for cross-checking with external solvers.
void write_exchange(const ConicProblem& problem, std::ostream& out);
ConicProblem read_exchange(std::istream& in);

}  // namespace ascent::socp
