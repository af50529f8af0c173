#include "ascent/socp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sparse_ldl.hpp"

namespace ascent::socp {

int ConeSpec::total_dim() const {
  int n = 0;
  for (const ConeBlock& b : blocks) n += b.dim;
  return n;
}

std::string ConicProblem::variable_name(int j) const {
  if (j >= 0 && j < static_cast<int>(var_names.size()) && !var_names[j].empty()) return var_names[j];
  return "x[" + std::to_string(j) + "]";
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kPrimalInfeasible: return "primal_infeasible";
    case SolveStatus::kDualInfeasible: return "dual_infeasible";
    case SolveStatus::kMaxIters: return "max_iters";
    case SolveStatus::kNumericalError: return "numerical_error";
  }
  return "unknown";
}

ValidationReport validate(const ConicProblem& p) {
  ValidationReport rep;
  if (p.c.size() != p.num_vars) {
    rep.defects.push_back("cost vector has " + std::to_string(p.c.size()) + " entries, expected " +
                          std::to_string(p.num_vars));
  }
  if (p.b.size() != p.num_rows) {
    rep.defects.push_back("right-hand side has " + std::to_string(p.b.size()) +
                          " entries, expected " + std::to_string(p.num_rows));
  }
  if (p.cones.total_dim() != p.num_rows) {
    rep.defects.push_back("cones cover " + std::to_string(p.cones.total_dim()) + " rows, expected " +
                          std::to_string(p.num_rows));
  }
  for (std::size_t k = 0; k < p.cones.blocks.size(); ++k) {
    const ConeBlock& b = p.cones.blocks[k];
    if (b.dim <= 0) rep.defects.push_back("cone block " + std::to_string(k) + " is empty");
    if (b.kind == ConeKind::kSoc && b.dim < 2) {
      rep.defects.push_back("second-order cone block " + std::to_string(k) + " has dimension < 2");
    }
  }
  for (int j = 0; j < std::min<int>(p.num_vars, p.c.size()); ++j) {
    if (!std::isfinite(p.c(j))) rep.defects.push_back("non-finite cost at " + p.variable_name(j));
  }
  for (int i = 0; i < std::min<int>(p.num_rows, p.b.size()); ++i) {
    if (!std::isfinite(p.b(i))) {
      rep.defects.push_back("non-finite right-hand side at row " + std::to_string(i));
    }
  }
  std::map<std::pair<int, int>, int> seen;
  for (const auto& t : p.a) {
    if (t.row() < 0 || t.row() >= p.num_rows || t.col() < 0 || t.col() >= p.num_vars) {
      rep.defects.push_back("entry (" + std::to_string(t.row()) + ", " + std::to_string(t.col()) +
                            ") outside the constraint matrix");
      continue;
    }
    if (!std::isfinite(t.value())) {
      rep.defects.push_back("non-finite coefficient at row " + std::to_string(t.row()) + ", " +
                            p.variable_name(t.col()));
    }
    if (++seen[{t.row(), t.col()}] == 2) {
      rep.warnings.push_back("duplicate entries at row " + std::to_string(t.row()) + ", " +
                             p.variable_name(t.col()) + " are summed");
    }
  }
  return rep;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inequality cones: l nonnegative rows followed by second-order blocks.
struct Cones {
  int l = 0;
  std::vector<int> start, dim;
  int m = 0;

  int degree() const { return l + static_cast<int>(dim.size()); }
  int count() const { return static_cast<int>(dim.size()); }
};

Vec cone_identity(const Cones& k) {
  Vec e = Vec::Zero(k.m);
  e.head(k.l).setOnes();
  for (int c = 0; c < k.count(); ++c) e(k.start[c]) = 1.0;
  return e;
}

Vec jordan_product(const Cones& k, const Vec& u, const Vec& v) {
  Vec w(k.m);
  w.head(k.l) = u.head(k.l).cwiseProduct(v.head(k.l));
  for (int c = 0; c < k.count(); ++c) {
    const int s = k.start[c], d = k.dim[c];
    w(s) = u.segment(s, d).dot(v.segment(s, d));
    w.segment(s + 1, d - 1) = u(s) * v.segment(s + 1, d - 1) + v(s) * u.segment(s + 1, d - 1);
  }
  return w;
}

// Solves lambda o x = w.
Vec jordan_divide(const Cones& k, const Vec& lambda, const Vec& w) {
  Vec x(k.m);
  x.head(k.l) = w.head(k.l).cwiseQuotient(lambda.head(k.l));
  for (int c = 0; c < k.count(); ++c) {
    const int s = k.start[c], d = k.dim[c];
    const double l0 = lambda(s);
    const auto l1 = lambda.segment(s + 1, d - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * w(s) - l1.dot(w.segment(s + 1, d - 1))) / det;
    x(s) = x0;
    x.segment(s + 1, d - 1) = (w.segment(s + 1, d - 1) - x0 * l1) / l0;
  }
  return x;
}

// Smallest amount t such that x + t e lies on the boundary (negative when interior).
double boundary_shift(const Cones& k, const Vec& x) {
  double t = -kInf;
  for (int i = 0; i < k.l; ++i) t = std::max(t, -x(i));
  for (int c = 0; c < k.count(); ++c) {
    const int s = k.start[c], d = k.dim[c];
    t = std::max(t, x.segment(s + 1, d - 1).norm() - x(s));
  }
  return t;
}

// Largest positive root of nothing: returns the first crossing of the cone
// boundary along x + alpha dx, or +inf.
double max_step(const Cones& k, const Vec& x, const Vec& dx) {
  double alpha = kInf;
  for (int i = 0; i < k.l; ++i) {
    if (dx(i) < 0.0) alpha = std::min(alpha, -x(i) / dx(i));
  }
  for (int c = 0; c < k.count(); ++c) {
    const int s = k.start[c], d = k.dim[c];
    const auto u1 = x.segment(s + 1, d - 1);
    const auto d1 = dx.segment(s + 1, d - 1);
    // f(a) = qa a^2 + 2 qb a + qc, the J-norm of x + a dx.
    const double qa = dx(s) * dx(s) - d1.squaredNorm();
    const double qb = x(s) * dx(s) - u1.dot(d1);
    const double n1 = u1.norm();
    const double qc = std::max((x(s) - n1) * (x(s) + n1), 0.0);
    double root = kInf;
    if (qc == 0.0) {
      root = 0.0;
    } else if (std::abs(qa) < 1e-300) {
      if (qb < 0.0) root = -qc / (2.0 * qb);
    } else {
      const double disc = qb * qb - qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -(qb + std::copysign(sq, qb));
        double r1 = q / qa;
        double r2 = (q != 0.0) ? qc / q : kInf;
        for (double r : {r1, r2}) {
          if (r > 0.0) root = std::min(root, r);
        }
      }
    }
    // The scalar part must also stay nonnegative.
    if (dx(s) < 0.0) root = std::min(root, -x(s) / dx(s));
    alpha = std::min(alpha, root);
  }
  return alpha;
}

// Nesterov-Todd scaling: W z = W^{-1} s = lambda.
struct Scaling {
  Vec lin;  // nonnegative part of W (diagonal)
  std::vector<double> beta;
  std::vector<Vec> wbar;  // (a, q) with a^2 - |q|^2 = 1
  std::vector<Mat> w, w_inv;
  Vec lambda;

  Vec apply(const Cones& k, const Vec& x) const {
    Vec y(k.m);
    y.head(k.l) = lin.cwiseProduct(x.head(k.l));
    for (int c = 0; c < k.count(); ++c) y.segment(k.start[c], k.dim[c]) = w[c] * x.segment(k.start[c], k.dim[c]);
    return y;
  }
  Vec apply_inv(const Cones& k, const Vec& x) const {
    Vec y(k.m);
    y.head(k.l) = x.head(k.l).cwiseQuotient(lin);
    for (int c = 0; c < k.count(); ++c) {
      y.segment(k.start[c], k.dim[c]) = w_inv[c] * x.segment(k.start[c], k.dim[c]);
    }
    return y;
  }
};

bool nt_scaling(const Cones& k, const Vec& s, const Vec& z, Scaling& out) {
  out.lin = (s.head(k.l).cwiseQuotient(z.head(k.l))).cwiseSqrt();
  out.beta.assign(k.count(), 0.0);
  out.wbar.resize(k.count());
  out.w.resize(k.count());
  out.w_inv.resize(k.count());
  for (int c = 0; c < k.count(); ++c) {
    const int st = k.start[c], d = k.dim[c];
    const Vec sc = s.segment(st, d), zc = z.segment(st, d);
    const double sn = sc.tail(d - 1).norm(), zn = zc.tail(d - 1).norm();
    const double s_det = (sc(0) - sn) * (sc(0) + sn);
    const double z_det = (zc(0) - zn) * (zc(0) + zn);
    if (!(s_det > 0.0) || !(z_det > 0.0)) return false;
    const Vec sb = sc / std::sqrt(s_det);
    const Vec zb = zc / std::sqrt(z_det);
    const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
    Vec wv(d);
    wv(0) = (sb(0) + zb(0)) / (2.0 * gamma);
    wv.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
    const double beta = std::pow(s_det / z_det, 0.25);
    Mat wm(d, d);
    wm(0, 0) = wv(0);
    wm.block(0, 1, 1, d - 1) = wv.tail(d - 1).transpose();
    wm.block(1, 0, d - 1, 1) = wv.tail(d - 1);
    wm.block(1, 1, d - 1, d - 1) = Mat::Identity(d - 1, d - 1) +
                                   wv.tail(d - 1) * wv.tail(d - 1).transpose() / (1.0 + wv(0));
    Mat wi = wm;
    wi.block(0, 1, 1, d - 1) *= -1.0;
    wi.block(1, 0, d - 1, 1) *= -1.0;
    out.beta[c] = beta;
    out.wbar[c] = wv;
    out.w[c] = beta * wm;
    out.w_inv[c] = wi / beta;
  }
  out.lambda = out.apply(k, z);
  return out.lambda.allFinite();
}

// Scaled KKT system
//   [[0, A', Gt'], [A, 0, 0], [Gt, 0, -I]],  Gt = W^{-1} G,
// with static regularization, factored by LDL' and refined against the
// unregularized matrix. Rows of Gt inside one cone share the union of the
// cone's column patterns, so the sparsity pattern is fixed.
class KktSystem {
 public:
  KktSystem(const SpMat& a, const SpMat& g, const Cones& k, double reg, int refine)
      : a_(a), g_(g), k_(k), reg_(reg), refine_(refine) {
    n_ = static_cast<int>(a.cols());
    p_ = static_cast<int>(a.rows());
    m_ = k.m;
    const int dim = n_ + p_ + m_;
    const SpMat gr = SpMat(g.transpose());  // column i holds row i of G
    // Column support of each scaled row.
    support_.assign(m_, {});
    for (int i = 0; i < k.l; ++i) {
      for (SpMat::InnerIterator it(gr, i); it; ++it) support_[i].push_back(static_cast<int>(it.row()));
    }
    g_dense_.resize(k.count());
    for (int c = 0; c < k.count(); ++c) {
      std::vector<int> cols;
      for (int i = 0; i < k.dim[c]; ++i) {
        for (SpMat::InnerIterator it(gr, k.start[c] + i); it; ++it) cols.push_back(static_cast<int>(it.row()));
      }
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      Mat gd = Mat::Zero(k.dim[c], cols.size());
      for (int i = 0; i < k.dim[c]; ++i) {
        for (SpMat::InnerIterator it(gr, k.start[c] + i); it; ++it) {
          const auto pos = std::lower_bound(cols.begin(), cols.end(), static_cast<int>(it.row())) - cols.begin();
          gd(i, pos) = it.value();
        }
        support_[k.start[c] + i] = cols;
      }
      g_dense_[c] = gd;
    }
    g_lin_.resize(k.l);
    for (int i = 0; i < k.l; ++i) {
      for (SpMat::InnerIterator it(gr, i); it; ++it) g_lin_[i].push_back(it.value());
    }

    std::vector<Eigen::Triplet<double>> t;
    for (int j = 0; j < n_; ++j) t.emplace_back(j, j, 1.0);
    for (int j = 0; j < a.outerSize(); ++j) {
      for (SpMat::InnerIterator it(a, j); it; ++it) t.emplace_back(j, n_ + it.row(), 1.0);
    }
    for (int i = 0; i < m_; ++i) {
      for (int j : support_[i]) t.emplace_back(j, n_ + p_ + i, 1.0);
    }
    for (int i = 0; i < p_ + m_; ++i) t.emplace_back(n_ + i, n_ + i, -1.0);
    kkt_.resize(dim, dim);
    kkt_.setFromTriplets(t.begin(), t.end());
    kkt_.makeCompressed();
    // A' entries are constant.
    const SpMat ar = SpMat(a.transpose());
    for (int i = 0; i < p_; ++i) {
      SpMat::InnerIterator kt(kkt_, n_ + i);
      for (SpMat::InnerIterator at(ar, i); at; ++at) {
        while (kt.row() != at.row()) ++kt;
        kt.valueRef() = at.value();
      }
    }
    diag_slot_.resize(dim);
    col_first_.resize(dim);
    for (int j = 0; j < dim; ++j) {
      col_first_[j] = kkt_.outerIndexPtr()[j];
      for (SpMat::InnerIterator it(kkt_, j); it; ++it) {
        if (it.row() == j) diag_slot_[j] = static_cast<int>(&it.valueRef() - kkt_.valuePtr());
      }
    }
    std::vector<int> signs(dim, -1);
    for (int j = 0; j < n_; ++j) signs[j] = 1;
    double* val = kkt_.valuePtr();
    for (int j = 0; j < n_; ++j) val[diag_slot_[j]] = reg_;
    for (int i = 0; i < p_; ++i) val[diag_slot_[n_ + i]] = -reg_;
    for (int i = 0; i < m_; ++i) val[diag_slot_[n_ + p_ + i]] = -1.0;
    std::vector<int> first(m_);
    for (int i = 0; i < m_; ++i) first[i] = n_ + p_ + i;
    ldl_.analyze(kkt_, signs, first);
  }

  // Loads W^{-1} G (identity scaling when null) and factors.
  void factor(const Scaling* scaling) {
    scaling_ = scaling;
    double* val = kkt_.valuePtr();
    const int z0 = n_ + p_;
    for (int i = 0; i < k_.l; ++i) {
      const double winv = scaling ? 1.0 / scaling->lin(i) : 1.0;
      double* dst = val + col_first_[z0 + i];
      for (std::size_t q = 0; q < g_lin_[i].size(); ++q) dst[q] = winv * g_lin_[i][q];
    }
    for (int c = 0; c < k_.count(); ++c) {
      const Mat gt = scaling ? Mat(scaling->w_inv[c] * g_dense_[c]) : g_dense_[c];
      for (int i = 0; i < k_.dim[c]; ++i) {
        double* dst = val + col_first_[z0 + k_.start[c] + i];
        for (Eigen::Index q = 0; q < gt.cols(); ++q) dst[q] = gt(i, q);
      }
    }
    ldl_.factor(kkt_);
  }

  // Solves [[0, A', G'], [A, 0, 0], [G, 0, -W^2]] (dx, dy, dz) = rhs.
  // Refinement works on the residual of this unscaled system and stops once
  // the residual no longer halves.
  Vec solve(const Vec& rhs) const {
    Vec sol = solve_scaled(rhs);
    Vec r = rhs - multiply(sol);
    double err = r.lpNorm<Eigen::Infinity>();
    const double target = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < refine_ && err > target; ++it) {
      const Vec trial = sol + solve_scaled(r);
      const Vec r_trial = rhs - multiply(trial);
      const double e_trial = r_trial.lpNorm<Eigen::Infinity>();
      if (!(e_trial < 0.5 * err)) break;
      sol = trial;
      r = r_trial;
      err = e_trial;
    }
    return sol;
  }

 private:
  Vec solve_scaled(const Vec& rhs) const {
    Vec full = rhs;
    if (scaling_) full.tail(m_) = scaling_->apply_inv(k_, rhs.tail(m_));
    Vec sol = ldl_.solve(full);
    if (scaling_) sol.tail(m_) = scaling_->apply_inv(k_, Vec(sol.tail(m_)));
    return sol;
  }

  Vec multiply(const Vec& v) const {
    Vec out(n_ + p_ + m_);
    const Vec vz = v.tail(m_);
    out.head(n_) = a_.transpose() * v.segment(n_, p_) + g_.transpose() * vz;
    out.segment(n_, p_) = a_ * v.head(n_);
    const Vec w2z = scaling_ ? scaling_->apply(k_, scaling_->apply(k_, vz)) : vz;
    out.tail(m_) = g_ * v.head(n_) - w2z;
    return out;
  }

  const SpMat& a_;
  const SpMat& g_;
  const Cones& k_;
  double reg_;
  int refine_;
  int n_ = 0, p_ = 0, m_ = 0;
  std::vector<std::vector<int>> support_;
  std::vector<Mat> g_dense_;
  std::vector<std::vector<double>> g_lin_;
  SpMat kkt_;
  std::vector<int> diag_slot_, col_first_;
  QuasiDefiniteLdl ldl_;
  const Scaling* scaling_ = nullptr;
};

// Ruiz equilibration of the stacked matrix [A; G] with block-uniform row
// scaling on second-order cones.
void equilibrate(SpMat& a, SpMat& g, const Cones& k, int sweeps, Vec& col_scale, Vec& eq_scale,
                 Vec& in_scale) {
  const int n = static_cast<int>(a.cols());
  col_scale = Vec::Ones(n);
  eq_scale = Vec::Ones(a.rows());
  in_scale = Vec::Ones(g.rows());
  auto clamp = [](double v) { return std::clamp(v, 1e-4, 1e4); };
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    Vec cn = Vec::Zero(n), ra = Vec::Zero(a.rows()), rg = Vec::Zero(g.rows());
    for (int j = 0; j < n; ++j) {
      for (SpMat::InnerIterator it(a, j); it; ++it) {
        cn(j) = std::max(cn(j), std::abs(it.value()));
        ra(it.row()) = std::max(ra(it.row()), std::abs(it.value()));
      }
      for (SpMat::InnerIterator it(g, j); it; ++it) {
        cn(j) = std::max(cn(j), std::abs(it.value()));
        rg(it.row()) = std::max(rg(it.row()), std::abs(it.value()));
      }
    }
    for (int c = 0; c < k.count(); ++c) {
      const double mx = rg.segment(k.start[c], k.dim[c]).maxCoeff();
      rg.segment(k.start[c], k.dim[c]).setConstant(mx);
    }
    Vec dc(n), da(a.rows()), dg(g.rows());
    for (int j = 0; j < n; ++j) dc(j) = cn(j) > 0.0 ? clamp(1.0 / std::sqrt(cn(j))) : 1.0;
    for (int i = 0; i < a.rows(); ++i) da(i) = ra(i) > 0.0 ? clamp(1.0 / std::sqrt(ra(i))) : 1.0;
    for (int i = 0; i < g.rows(); ++i) dg(i) = rg(i) > 0.0 ? clamp(1.0 / std::sqrt(rg(i))) : 1.0;
    a = da.asDiagonal() * a * dc.asDiagonal();
    g = dg.asDiagonal() * g * dc.asDiagonal();
    col_scale = col_scale.cwiseProduct(dc);
    eq_scale = eq_scale.cwiseProduct(da);
    in_scale = in_scale.cwiseProduct(dg);
  }
}

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

ConicSolution InteriorPointSolver::solve(const ConicProblem& problem, const SolverSettings& settings) {
  ConicSolution out;
  const ValidationReport report = validate(problem);
  if (!report.ok()) {
    out.status = SolveStatus::kNumericalError;
    out.message = "invalid problem: " + report.defects.front();
    return out;
  }
  const int n = problem.num_vars;

  // Split rows into equalities (zero cone) and conic inequalities.
  std::vector<int> row_kind(problem.num_rows), row_pos(problem.num_rows);
  Cones k;
  int p = 0;
  {
    int r = 0;
    std::vector<std::pair<int, int>> socs;
    for (const ConeBlock& blk : problem.cones.blocks) {
      for (int i = 0; i < blk.dim; ++i, ++r) {
        row_kind[r] = static_cast<int>(blk.kind);
        if (blk.kind == ConeKind::kZero) row_pos[r] = p++;
        if (blk.kind == ConeKind::kNonneg) row_pos[r] = k.l++;
      }
      if (blk.kind == ConeKind::kSoc) socs.emplace_back(r - blk.dim, blk.dim);
    }
    int off = k.l;
    for (auto [first, dim] : socs) {
      k.start.push_back(off);
      k.dim.push_back(dim);
      for (int i = 0; i < dim; ++i) row_pos[first + i] = off + i;
      off += dim;
    }
    k.m = off;
  }

  std::vector<Eigen::Triplet<double>> ta, tg;
  Vec b0(p), h0(k.m);
  for (int r = 0; r < problem.num_rows; ++r) {
    if (row_kind[r] == static_cast<int>(ConeKind::kZero)) b0(row_pos[r]) = problem.b(r);
    else h0(row_pos[r]) = problem.b(r);
  }
  for (const auto& t : problem.a) {
    const int r = t.row();
    if (row_kind[r] == static_cast<int>(ConeKind::kZero)) ta.emplace_back(row_pos[r], t.col(), t.value());
    else tg.emplace_back(row_pos[r], t.col(), t.value());
  }
  SpMat a(p, n), g(k.m, n);
  a.setFromTriplets(ta.begin(), ta.end());
  g.setFromTriplets(tg.begin(), tg.end());
  a.makeCompressed();
  g.makeCompressed();
  const SpMat a_orig = a, g_orig = g;
  const Vec& c0 = problem.c;

  Vec dcol, deq, din;
  equilibrate(a, g, k, settings.equilibration_sweeps, dcol, deq, din);
  a.makeCompressed();
  g.makeCompressed();
  Vec c = dcol.cwiseProduct(c0);
  Vec b = deq.cwiseProduct(b0);
  Vec h = din.cwiseProduct(h0);

  const double bnorm = 1.0 + inf_norm(b0);
  const double hnorm = 1.0 + inf_norm(h0);
  const double cnorm = 1.0 + inf_norm(c0);

  KktSystem kkt(a, g, k, settings.static_regularization, settings.refinement_steps);

  // Recovers unscaled iterates for termination tests.
  auto unscale = [&](const Vec& x, const Vec& y, const Vec& z, const Vec& s, Vec& xo, Vec& yo,
                     Vec& zo, Vec& so) {
    xo = dcol.cwiseProduct(x);
    yo = deq.cwiseProduct(y);
    zo = din.cwiseProduct(z);
    so = s.cwiseQuotient(din);
  };

  // Starting point from two least-squares style solves with W = I.
  kkt.factor(nullptr);
  const int dim = n + p + k.m;
  Vec x(n), y(p), z(k.m), s(k.m);
  {
    Vec rhs = Vec::Zero(dim);
    rhs.segment(n, p) = b;
    rhs.tail(k.m) = h;
    Vec sol = kkt.solve(rhs);
    x = sol.head(n);
    s = -sol.tail(k.m);
    rhs.setZero();
    rhs.head(n) = -c;
    sol = kkt.solve(rhs);
    y = sol.segment(n, p);
    z = sol.tail(k.m);
    const Vec e = cone_identity(k);
    if (k.m > 0) {
      const double as = boundary_shift(k, s);
      if (as >= -1e-8) s += (1.0 + std::max(as, 0.0)) * e;
      const double az = boundary_shift(k, z);
      if (az >= -1e-8) z += (1.0 + std::max(az, 0.0)) * e;
    }
  }
  double tau = 1.0, kappa = 1.0;
  const Vec e = cone_identity(k);
  const int degree = k.degree();

  Scaling scaling;
  Vec xo, yo, zo, so;
  // Best iterate so far, returned when the method stops short of optimality.
  struct Snapshot {
    Vec x, y, z, s;
    double tau = 1.0, pres = kInf, dres = kInf, gap = kInf;
    int iter = 0;
    double merit() const { return std::max({pres, dres, gap}); }
  } best;
  out.status = SolveStatus::kMaxIters;
  int iter = 0;
  for (;; ++iter) {
    // Residuals of the embedding.
    const Vec rx = a.transpose() * y + g.transpose() * z + c * tau;
    const Vec ry = -(a * x) + b * tau;
    const Vec rz = -(g * x) + h * tau - s;
    const double rt = kappa + c.dot(x) + b.dot(y) + h.dot(z);

    unscale(x, y, z, s, xo, yo, zo, so);
    const double pres = std::max(inf_norm(a_orig * xo / tau - b0) / bnorm,
                                 inf_norm(g_orig * xo / tau + so / tau - h0) / hnorm);
    const double dres = inf_norm(a_orig.transpose() * yo / tau + g_orig.transpose() * zo / tau + c0) / cnorm;
    const double pcost = c0.dot(xo) / tau;
    const double dcost = -(b0.dot(yo) + h0.dot(zo)) / tau;
    const double gap = so.dot(zo) / (tau * tau);
    const double relgap = std::abs(gap) / (1.0 + std::min(std::abs(pcost), std::abs(dcost)));
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.gap = relgap;
    out.iterations = iter;
    if (std::max({pres, dres, relgap}) < best.merit()) {
      best = Snapshot{xo, yo, zo, so, tau, pres, dres, relgap, iter};
    }
    if (settings.verbose) {
      std::cerr << std::scientific << std::setprecision(3) << "ipm " << std::setw(3) << iter
                << " pcost " << pcost << " dcost " << dcost << " pres " << pres << " dres " << dres
                << " gap " << relgap << " tau " << tau << " kappa " << kappa << "\n";
    }
    if (pres <= settings.tol && dres <= settings.tol && relgap <= settings.tol) {
      out.status = SolveStatus::kOptimal;
      break;
    }
    // Infeasibility certificates from the unnormalized iterates.
    const double by_hz = b0.dot(yo) + h0.dot(zo);
    if (by_hz < 0.0) {
      const double res = inf_norm(a_orig.transpose() * yo + g_orig.transpose() * zo) / -by_hz;
      if (res <= settings.infeasibility_tol && tau < kappa) {
        out.status = SolveStatus::kPrimalInfeasible;
        break;
      }
    }
    const double cx = c0.dot(xo);
    if (cx < 0.0) {
      const double res = std::max(inf_norm(a_orig * xo), inf_norm(g_orig * xo + so)) / -cx;
      if (res <= settings.infeasibility_tol && tau < kappa) {
        out.status = SolveStatus::kDualInfeasible;
        break;
      }
    }
    if (iter >= settings.max_iters) break;

    if (!nt_scaling(k, s, z, scaling)) {
      out.status = SolveStatus::kNumericalError;
      out.message = "iterate left the cone";
      break;
    }
    kkt.factor(&scaling);
    const Vec& lambda = scaling.lambda;
    const double mu = (s.dot(z) + tau * kappa) / (degree + 1);

    Vec rhs2(dim);
    rhs2 << -c, b, h;
    const Vec u2 = kkt.solve(rhs2);
    const double den = -kappa / tau + c.dot(u2.head(n)) + b.dot(u2.segment(n, p)) + h.dot(u2.tail(k.m));

    struct Direction {
      Vec dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double eta, const Vec& d_s, double d_k) {
      Direction d;
      const Vec ld = jordan_divide(k, lambda, d_s);
      const Vec wld = scaling.apply(k, ld);  // W' (lambda \ d_s), W symmetric
      Vec rhs1(dim);
      rhs1 << -eta * rx, eta * ry, eta * rz - wld;
      const Vec u1 = kkt.solve(rhs1);
      d.dtau = (-eta * rt - d_k / tau - c.dot(u1.head(n)) - b.dot(u1.segment(n, p)) -
                h.dot(u1.tail(k.m))) / den;
      d.dx = u1.head(n) + d.dtau * u2.head(n);
      d.dy = u1.segment(n, p) + d.dtau * u2.segment(n, p);
      d.dz = u1.tail(k.m) + d.dtau * u2.tail(k.m);
      d.ds = wld - scaling.apply(k, scaling.apply(k, d.dz));
      d.dkappa = (d_k - kappa * d.dtau) / tau;
      return d;
    };
    auto step_length = [&](const Direction& d) {
      double alpha = std::min(max_step(k, s, d.ds), max_step(k, z, d.dz));
      if (d.dtau < 0.0) alpha = std::min(alpha, -tau / d.dtau);
      if (d.dkappa < 0.0) alpha = std::min(alpha, -kappa / d.dkappa);
      return alpha;
    };

    const Vec ll = jordan_product(k, lambda, lambda);
    const Direction aff = direction(1.0, -ll, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);
    const Vec corr = jordan_product(k, scaling.apply_inv(k, aff.ds), scaling.apply(k, aff.dz));
    const Direction d = direction(1.0 - sigma, -ll + sigma * mu * e - corr,
                                  -tau * kappa + sigma * mu - aff.dtau * aff.dkappa);
    const double alpha = std::min(1.0, 0.99 * step_length(d));
    if (!(alpha > 0.0) || !d.dx.allFinite()) {
      out.status = SolveStatus::kNumericalError;
      out.message = "step length collapsed";
      break;
    }
    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
  }

  if ((out.status == SolveStatus::kMaxIters || out.status == SolveStatus::kNumericalError) &&
      best.merit() < std::max({out.primal_residual, out.dual_residual, out.gap})) {
    xo = best.x;
    yo = best.y;
    zo = best.z;
    so = best.s;
    tau = best.tau;
    out.primal_residual = best.pres;
    out.dual_residual = best.dres;
    out.gap = best.gap;
  }

  // Map back to the caller's row order. Certificates are normalized to unit
  // violation, everything else by tau.
  double norm_primal = tau, norm_dual = tau;
  if (out.status == SolveStatus::kPrimalInfeasible) norm_dual = -(b0.dot(yo) + h0.dot(zo));
  if (out.status == SolveStatus::kDualInfeasible) norm_primal = -c0.dot(xo);
  out.x = xo / norm_primal;
  out.y = Vec::Zero(problem.num_rows);
  out.s = Vec::Zero(problem.num_rows);
  for (int r = 0; r < problem.num_rows; ++r) {
    if (row_kind[r] == static_cast<int>(ConeKind::kZero)) {
      out.y(r) = yo(row_pos[r]) / norm_dual;
    } else {
      out.y(r) = zo(row_pos[r]) / norm_dual;
      out.s(r) = so(row_pos[r]) / norm_primal;
    }
  }
  out.primal_objective = problem.c.dot(out.x);
  out.dual_objective = -problem.b.dot(out.y);
  return out;
}

std::unique_ptr<ConicSolver> make_default_solver() { return std::make_unique<InteriorPointSolver>(); }

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) {
  InteriorPointSolver solver;
  return solver.solve(problem, settings);
}

// ---------------------------------------------------------------------------
// ProblemBuilder

int ProblemBuilder::add_variable(const std::string& name) {
  names_.push_back(name);
  cost_.push_back(0.0);
  return static_cast<int>(names_.size()) - 1;
}

int ProblemBuilder::add_variables(const std::string& name, int count) {
  const int first = num_vars();
  for (int i = 0; i < count; ++i) add_variable(name + "[" + std::to_string(i) + "]");
  return first;
}

void ProblemBuilder::add_cost(int var, double coef) { cost_.at(var) += coef; }

void ProblemBuilder::add_equality(const Terms& terms, double rhs) {
  eq_rows_.push_back(terms);
  eq_rhs_.push_back(rhs);
}

void ProblemBuilder::add_less_equal(const Terms& terms, double rhs) {
  le_rows_.push_back(terms);
  le_rhs_.push_back(rhs);
}

void ProblemBuilder::add_soc(const std::vector<Terms>& rows, const std::vector<double>& rhs) {
  if (rows.size() != rhs.size() || rows.size() < 2) {
    throw std::invalid_argument("ProblemBuilder::add_soc: malformed cone");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    soc_rows_.push_back(rows[i]);
    soc_rhs_.push_back(rhs[i]);
  }
  soc_dims_.push_back(static_cast<int>(rows.size()));
}

void ProblemBuilder::add_norm_bound(int t, const std::vector<int>& u) {
  std::vector<Terms> rows{{{t, -1.0}}};
  for (int j : u) rows.push_back({{j, -1.0}});
  add_soc(rows, std::vector<double>(rows.size(), 0.0));
}

ConicProblem ProblemBuilder::build() const {
  ConicProblem pb;
  pb.num_vars = num_vars();
  pb.num_rows = static_cast<int>(eq_rows_.size() + le_rows_.size() + soc_rows_.size());
  pb.c = Eigen::Map<const Vec>(cost_.data(), cost_.size());
  pb.b.resize(pb.num_rows);
  pb.var_names = names_;
  int r = 0;
  auto emit = [&](const std::vector<Terms>& rows, const std::vector<double>& rhs) {
    for (std::size_t i = 0; i < rows.size(); ++i, ++r) {
      for (const auto& [j, v] : rows[i]) {
        if (v != 0.0) pb.a.emplace_back(r, j, v);
      }
      pb.b(r) = rhs[i];
    }
  };
  emit(eq_rows_, eq_rhs_);
  emit(le_rows_, le_rhs_);
  emit(soc_rows_, soc_rhs_);
  if (!eq_rows_.empty()) pb.cones.blocks.push_back({ConeKind::kZero, static_cast<int>(eq_rows_.size())});
  if (!le_rows_.empty()) pb.cones.blocks.push_back({ConeKind::kNonneg, static_cast<int>(le_rows_.size())});
  for (int d : soc_dims_) pb.cones.blocks.push_back({ConeKind::kSoc, d});
  return pb;
}

// ---------------------------------------------------------------------------
// Exchange format

void write_exchange(const ConicProblem& pb, std::ostream& out) {
  out << "CONIC-EXCHANGE 1\n";
  out << "vars " << pb.num_vars << " rows " << pb.num_rows << " nnz " << pb.a.size() << "\n";
  out << "cones " << pb.cones.blocks.size() << "\n";
  for (const ConeBlock& b : pb.cones.blocks) {
    const char* name = b.kind == ConeKind::kZero ? "zero" : (b.kind == ConeKind::kNonneg ? "nonneg" : "soc");
    out << name << " " << b.dim << "\n";
  }
  out << std::setprecision(17);
  out << "triplets\n";
  for (const auto& t : pb.a) out << t.row() << " " << t.col() << " " << t.value() << "\n";
  out << "b\n";
  for (int i = 0; i < pb.num_rows; ++i) out << pb.b(i) << "\n";
  out << "c\n";
  for (int j = 0; j < pb.num_vars; ++j) out << pb.c(j) << "\n";
  out << "end\n";
}

ConicProblem read_exchange(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) {
      throw std::runtime_error("exchange file: expected '" + word + "', got '" + got + "'");
    }
  };
  ConicProblem pb;
  expect("CONIC-EXCHANGE");
  int version = 0;
  in >> version;
  if (version != 1) throw std::runtime_error("exchange file: unsupported version");
  std::size_t nnz = 0, ncones = 0;
  expect("vars");
  in >> pb.num_vars;
  expect("rows");
  in >> pb.num_rows;
  expect("nnz");
  in >> nnz;
  expect("cones");
  in >> ncones;
  for (std::size_t i = 0; i < ncones; ++i) {
    std::string kind;
    int dim = 0;
    in >> kind >> dim;
    ConeKind k;
    if (kind == "zero") k = ConeKind::kZero;
    else if (kind == "nonneg") k = ConeKind::kNonneg;
    else if (kind == "soc") k = ConeKind::kSoc;
    else throw std::runtime_error("exchange file: unknown cone '" + kind + "'");
    pb.cones.blocks.push_back({k, dim});
  }
  expect("triplets");
  for (std::size_t i = 0; i < nnz; ++i) {
    int r = 0, col = 0;
    double v = 0.0;
    if (!(in >> r >> col >> v)) throw std::runtime_error("exchange file: truncated triplets");
    pb.a.emplace_back(r, col, v);
  }
  expect("b");
  pb.b.resize(pb.num_rows);
  for (int i = 0; i < pb.num_rows; ++i) {
    if (!(in >> pb.b(i))) throw std::runtime_error("exchange file: truncated b");
  }
  expect("c");
  pb.c.resize(pb.num_vars);
  for (int j = 0; j < pb.num_vars; ++j) {
    if (!(in >> pb.c(j))) throw std::runtime_error("exchange file: truncated c");
  }
  expect("end");
  return pb;
}

}  // namespace ascent::socp
