#include "ascent/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace ascent {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9, kFacMin = 0.2, kFacMax = 10.0, kBeta = 0.04;

}  // namespace

Eigen::VectorXd DenseStep::operator()(double t) const {
  const double h = t1 - t0;
  if (h == 0.0) return y0;
  const double s = (t - t0) / h;
  const double s1 = 1.0 - s;
  return y0 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
}

OdeResult integrate(const OdeRhs& f, double t0, const Eigen::VectorXd& y0, double t1,
                    const OdeOptions& opt, const StepObserver& observer) {
  OdeResult res;
  res.t = t0;
  res.y = y0;
  const double span = t1 - t0;
  if (span == 0.0) return res;
  const double dir = span > 0.0 ? 1.0 : -1.0;
  const long n = y0.size();
  const Eigen::VectorXd atol =
      opt.atol.size() == n ? opt.atol : Eigen::VectorXd::Constant(n, 1e-12);
  const double h_min = opt.min_step * std::abs(span);

  auto err_norm = [&](const Eigen::VectorXd& e, const Eigen::VectorXd& ya,
                      const Eigen::VectorXd& yb) {
    const Eigen::VectorXd sc = atol.array() + opt.rtol * ya.cwiseAbs().cwiseMax(yb.cwiseAbs()).array();
    return std::sqrt((e.array() / sc.array()).square().mean());
  };

  double t = t0;
  Eigen::VectorXd y = y0;
  Eigen::VectorXd k1 = f(t, y);

  double h = std::abs(opt.initial_step);
  if (h == 0.0) {
    const Eigen::VectorXd sc = atol.array() + opt.rtol * y.cwiseAbs().array();
    const double dn0 = std::sqrt((y.array() / sc.array()).square().mean());
    const double dn1 = std::sqrt((k1.array() / sc.array()).square().mean());
    double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, std::abs(span));
    const Eigen::VectorXd k2 = f(t + dir * h0, y + dir * h0 * k1);
    const double dn2 = std::sqrt((((k2 - k1).array() / sc.array()).square()).mean()) / h0;
    const double dmax = std::max(dn1, dn2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    h = std::min({100.0 * h0, h1, std::abs(span)});
  }

  double fac_old = 1e-4;
  bool last_rejected = false;
  DenseStep step;
  while (dir * (t1 - t) > 0.0) {
    if (res.steps + res.rejected >= opt.max_steps) {
      res.status = OdeStatus::kMaxSteps;
      break;
    }
    if (h < h_min) {
      res.status = OdeStatus::kStepUnderflow;
      break;
    }
    bool final_step = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      final_step = true;
    }
    const double hs = dir * h;
    const Eigen::VectorXd k2 = f(t + c2 * hs, y + hs * a21 * k1);
    const Eigen::VectorXd k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 =
        f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 =
        f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Eigen::VectorXd y_new =
        y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const Eigen::VectorXd k7 = f(t + hs, y_new);
    const Eigen::VectorXd e =
        hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = err_norm(e, y, y_new);
    if (!std::isfinite(err) || !y_new.allFinite()) {
      if (h <= h_min) {
        res.status = OdeStatus::kNonFinite;
        break;
      }
      h *= 0.25;
      ++res.rejected;
      last_rejected = true;
      continue;
    }
    const double fac11 = std::pow(std::max(err, 1e-300), 0.2 - kBeta * 0.75);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(fac_old, kBeta) / kSafety;
      fac = std::clamp(fac, 1.0 / kFacMax, 1.0 / kFacMin);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      fac_old = std::max(err, 1e-4);

      step.t0 = t;
      step.t1 = final_step ? t1 : t + hs;
      step.y0 = y;
      step.y1 = y_new;
      const Eigen::VectorXd ydiff = y_new - y;
      const Eigen::VectorXd bspl = hs * k1 - ydiff;
      step.r2 = ydiff;
      step.r3 = bspl;
      step.r4 = ydiff - hs * k7 - bspl;
      step.r5 = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

      t = step.t1;
      y = y_new;
      k1 = k7;
      ++res.steps;
      last_rejected = false;
      h = h_new;
      if (observer && observer(step)) {
        res.status = OdeStatus::kStopped;
        break;
      }
    } else {
      h /= std::min(1.0 / kFacMin, fac11 / kSafety);
      ++res.rejected;
      last_rejected = true;
    }
  }
  res.t = t;
  res.y = y;
  return res;
}

}  // namespace ascent

namespace ascent {

Eigen::VectorXd DenseSolution::operator()(double t) const {
  if (steps.empty()) return {};
  const bool forward = steps.front().t1 >= steps.front().t0;
  auto before = [&](double a, double b) { return forward ? a < b : a > b; };
  std::size_t lo = 0, hi = steps.size();
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (before(t, steps[mid].t0)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const DenseStep& s = steps[lo];
  if (before(t, s.t0)) return s.y0;
  if (before(s.t1, t)) return s.y1;
  return s(t);
}

double locate_root(const DenseStep& step, const std::function<double(const Eigen::VectorXd&)>& g,
                   double g_tol) {
  double a = step.t0, b = step.t1;
  double ga = g(step.y0);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    const double gm = g(step(m));
    if (std::abs(gm) <= g_tol || m == a || m == b) return m;
    if ((gm < 0.0) == (ga < 0.0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace ascent
