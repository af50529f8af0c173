#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace ascent {

struct OdeOptions {
  double rtol = 1e-10;
  Eigen::VectorXd atol;  // per component; empty means 1e-12 for every component
  double initial_step = 0.0;  // 0 selects the step automatically
  double min_step = 1e-12;    // relative to the interval length
  long max_steps = 1000000;
};

/// One accepted Dormand-Prince step with its continuous extension.
struct DenseStep {
  double t0 = 0.0, t1 = 0.0;
  Eigen::VectorXd y0, y1;
  Eigen::VectorXd r2, r3, r4, r5;

  Eigen::VectorXd operator()(double t) const;
};

/// Piecewise dense output of a whole integration.
struct DenseSolution {
  std::vector<DenseStep> steps;

  bool empty() const { return steps.empty(); }
  double t_begin() const { return steps.front().t0; }
  double t_end() const { return steps.back().t1; }
  /// Evaluates the step containing t; clamps outside the covered span.
  Eigen::VectorXd operator()(double t) const;
};

/// Bisection on a sign change of g across a step, stopping when |g| <= g_tol
/// or the bracket collapses. Returns the time of the root.
double locate_root(const DenseStep& step, const std::function<double(const Eigen::VectorXd&)>& g,
                   double g_tol);

enum class OdeStatus { kOk, kStopped, kStepUnderflow, kMaxSteps, kNonFinite };

struct OdeResult {
  OdeStatus status = OdeStatus::kOk;
  double t = 0.0;
  Eigen::VectorXd y;
  long steps = 0;
  long rejected = 0;
};

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
/// Called after every accepted step; returning true stops the integration.
using StepObserver = std::function<bool(const DenseStep&)>;

/// Dormand-Prince 5(4) with PI step-size control and dense output.
OdeResult integrate(const OdeRhs& f, double t0, const Eigen::VectorXd& y0, double t1,
                    const OdeOptions& options = {}, const StepObserver& observer = {});

}  // namespace ascent
