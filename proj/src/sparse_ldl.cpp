#include "sparse_ldl.hpp"

#include <stdexcept>

#include <Eigen/OrderingMethods>

namespace ascent::socp {

void QuasiDefiniteLdl::analyze(const SpMat& upper, const std::vector<int>& signs,
                               const std::vector<int>& eliminate_first) {
  n_ = static_cast<int>(upper.rows());
  if (upper.cols() != n_ || static_cast<int>(signs.size()) != n_) {
    throw std::invalid_argument("QuasiDefiniteLdl::analyze: dimension mismatch");
  }
  const SpMat full = upper.selfadjointView<Eigen::Upper>();
  std::vector<int> first_pos(n_, -1);
  for (std::size_t q = 0; q < eliminate_first.size(); ++q) {
    const int i = eliminate_first[q];
    if (i < 0 || i >= n_ || first_pos[i] >= 0) {
      throw std::invalid_argument("QuasiDefiniteLdl::analyze: bad elimination prefix");
    }
    first_pos[i] = static_cast<int>(q);
  }
  // Remaining rows, with the fill created by the prefix eliminations.
  std::vector<int> rest, rest_pos(n_, -1);
  for (int i = 0; i < n_; ++i) {
    if (first_pos[i] < 0) {
      rest_pos[i] = static_cast<int>(rest.size());
      rest.push_back(i);
    }
  }
  const int nr = static_cast<int>(rest.size());
  std::vector<Eigen::Triplet<double>> pat;
  for (int j = 0; j < n_; ++j) {
    std::vector<int> nbr;
    for (SpMat::InnerIterator it(full, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (rest_pos[i] >= 0) nbr.push_back(rest_pos[i]);
    }
    if (rest_pos[j] >= 0) {
      for (int i : nbr) pat.emplace_back(i, rest_pos[j], 1.0);
    } else {
      for (int a : nbr) {
        for (int b : nbr) pat.emplace_back(a, b, 1.0);
      }
    }
  }
  for (int i = 0; i < nr; ++i) pat.emplace_back(i, i, 1.0);
  SpMat schur(nr, nr);
  schur.setFromTriplets(pat.begin(), pat.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
  Eigen::AMDOrdering<int> amd;
  amd(schur, perm);
  perm_.resize(n_);
  for (std::size_t q = 0; q < eliminate_first.size(); ++q) perm_(q) = eliminate_first[q];
  const int nf = static_cast<int>(eliminate_first.size());
  for (int q = 0; q < nr; ++q) perm_(nf + q) = rest[perm.indices()(q)];
  iperm_.resize(n_);
  for (int i = 0; i < n_; ++i) iperm_(perm_(i)) = i;

  // Permuted upper triangle with values carrying source slot ids.
  std::vector<Eigen::Triplet<double>> t;
  const int nnz = static_cast<int>(upper.nonZeros());
  t.reserve(nnz);
  for (int j = 0; j < n_; ++j) {
    for (SpMat::InnerIterator it(upper, j); it; ++it) {
      int pi = iperm_(static_cast<int>(it.row())), pj = iperm_(j);
      if (pi > pj) std::swap(pi, pj);
      const int src = static_cast<int>(&it.valueRef() - upper.valuePtr());
      t.emplace_back(pi, pj, static_cast<double>(src + 1));
    }
  }
  permuted_.resize(n_, n_);
  permuted_.setFromTriplets(t.begin(), t.end());
  permuted_.makeCompressed();
  if (permuted_.nonZeros() != nnz) {
    throw std::invalid_argument("QuasiDefiniteLdl::analyze: pattern must be upper triangular");
  }
  slot_.assign(nnz, 0);
  for (int k = 0; k < nnz; ++k) slot_[static_cast<int>(permuted_.valuePtr()[k]) - 1] = k;

  sign_.assign(n_, 1);
  for (int i = 0; i < n_; ++i) sign_[i] = signs[perm_(i)];

  // Elimination tree and column counts.
  parent_.assign(n_, -1);
  lnz_.assign(n_, 0);
  std::vector<int> flag(n_);
  const int* ap = permuted_.outerIndexPtr();
  const int* ai = permuted_.innerIndexPtr();
  for (int k = 0; k < n_; ++k) {
    flag[k] = k;
    for (int p = ap[k]; p < ap[k + 1]; ++p) {
      int i = ai[p];
      if (i >= k) continue;
      while (flag[i] != k) {
        if (parent_[i] == -1) parent_[i] = k;
        ++lnz_[i];
        flag[i] = k;
        i = parent_[i];
      }
    }
  }
  lp_.assign(n_ + 1, 0);
  for (int k = 0; k < n_; ++k) lp_[k + 1] = lp_[k] + lnz_[k];
  li_.assign(lp_[n_], 0);
  lx_.assign(lp_[n_], 0.0);
  d_.assign(n_, 0.0);
}

void QuasiDefiniteLdl::factor(const SpMat& upper) {
  const int nnz = static_cast<int>(upper.nonZeros());
  if (nnz != static_cast<int>(slot_.size())) {
    throw std::invalid_argument("QuasiDefiniteLdl::factor: pattern changed since analyze()");
  }
  double* px = permuted_.valuePtr();
  const double* ux = upper.valuePtr();
  for (int k = 0; k < nnz; ++k) px[slot_[k]] = ux[k];

  const int* ap = permuted_.outerIndexPtr();
  const int* ai = permuted_.innerIndexPtr();
  std::vector<double> y(n_, 0.0);
  std::vector<int> pattern(n_), flag(n_, -1), fill(n_, 0);
  bumped_ = 0;
  for (int k = 0; k < n_; ++k) {
    int top = n_;
    flag[k] = k;
    y[k] = 0.0;
    for (int p = ap[k]; p < ap[k + 1]; ++p) {
      int i = ai[p];
      y[i] += px[p];
      int len = 0;
      for (; flag[i] != k; i = parent_[i]) {
        pattern[len++] = i;
        flag[i] = k;
      }
      while (len > 0) pattern[--top] = pattern[--len];
    }
    double dk = y[k];
    y[k] = 0.0;
    for (; top < n_; ++top) {
      const int i = pattern[top];
      const double yi = y[i];
      y[i] = 0.0;
      const int end = lp_[i] + fill[i];
      for (int p = lp_[i]; p < end; ++p) y[li_[p]] -= lx_[p] * yi;
      const double lki = yi / d_[i];
      dk -= lki * yi;
      li_[end] = k;
      lx_[end] = lki;
      ++fill[i];
    }
    if (sign_[k] * dk <= pivot_threshold) {
      dk = sign_[k] * pivot_bump;
      ++bumped_;
    }
    d_[k] = dk;
  }
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd b(n_);
  for (int i = 0; i < n_; ++i) b(i) = rhs(perm_(i));
  for (int j = 0; j < n_; ++j) {
    const double bj = b(j);
    for (int p = lp_[j]; p < lp_[j + 1]; ++p) b(li_[p]) -= lx_[p] * bj;
  }
  for (int j = 0; j < n_; ++j) b(j) /= d_[j];
  for (int j = n_ - 1; j >= 0; --j) {
    double bj = b(j);
    for (int p = lp_[j]; p < lp_[j + 1]; ++p) bj -= lx_[p] * b(li_[p]);
    b(j) = bj;
  }
  Eigen::VectorXd out(n_);
  for (int i = 0; i < n_; ++i) out(perm_(i)) = b(i);
  return out;
}

}  // namespace ascent::socp
