#pragma once

#include <vector>

#include <Eigen/Sparse>

namespace ascent::socp {

// Up-looking LDL' factorization of a symmetric quasi-definite matrix given by
// its upper triangle. Pivots whose sign disagrees with the expected inertia
// are replaced by a small value of the right sign.
class QuasiDefiniteLdl {
 public:
  using SpMat = Eigen::SparseMatrix<double>;

  // `upper` fixes the sparsity pattern; `signs` holds +1/-1 per row. Rows in
  // `eliminate_first` are pivoted before all others (in the given order); the
  // rest are ordered by approximate minimum degree on their Schur pattern.
  void analyze(const SpMat& upper, const std::vector<int>& signs,
               const std::vector<int>& eliminate_first = {});

  // Refactors with the values of `upper` (same pattern as in analyze()).
  void factor(const SpMat& upper);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int num_bumped() const { return bumped_; }
  double pivot_threshold = 1e-13;
  double pivot_bump = 1e-7;

 private:
  int n_ = 0;
  Eigen::VectorXi perm_, iperm_;
  std::vector<int> slot_;  // value index in `upper` -> index in permuted values
  SpMat permuted_;
  std::vector<int> sign_;  // in permuted order
  std::vector<int> parent_, lnz_, lp_, li_;
  std::vector<double> lx_, d_;
  int bumped_ = 0;
};

}  // namespace ascent::socp
