#include "ascent/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace ascent {

namespace {

constexpr double kEventTolerance = 1e-3;  // [m]
constexpr int kDenseSamples = 8;

bool is_optimal(const Phase& p) { return p.guidance == GuidanceMode::kOptimal; }

TracePoint make_point(double t, const State& x, int phase, const Dynamics& dyn) {
  TracePoint p;
  p.t = t;
  p.x = x;
  p.altitude = dyn.earth().altitude(x.r);
  p.heat_flux = dyn.heat_flux(x).qdot;
  p.phase = phase;
  return p;
}

OdeOptions physical_options(const OdeOptions& base, const EarthModel& earth) {
  OdeOptions o = base;
  if (o.atol.size() != 7) {
    const ScaleSet s = ScaleSet::from_earth(earth);
    o.atol = 1e-12 * s.state_units();
  }
  return o;
}

}  // namespace

OrbitalElements orbital_elements(const State& x, double mu) {
  OrbitalElements el;
  const double r = x.r.norm();
  const double v2 = x.v.squaredNorm();
  el.a = 1.0 / (2.0 / r - v2 / mu);
  const Vec3 h = x.r.cross(x.v);
  const Vec3 e = x.v.cross(h) / mu - x.r / r;
  el.e = e.norm();
  el.i = std::acos(std::clamp(h.z() / h.norm(), -1.0, 1.0));
  return el;
}

ReturnSimulation simulate_return(const State& burnout, double mass, const Dynamics& dyn,
                                 double start_time, double max_duration) {
  const double re = dyn.earth().r_earth;
  if (!(dyn.earth().altitude(burnout.r) > 0.0)) {
    throw std::invalid_argument("simulate_return: burnout altitude must be positive");
  }
  Phase fall;
  fall.number = 13;
  fall.guidance = GuidanceMode::kReturn;
  State x0 = burnout;
  x0.m = mass;
  auto rhs = [&](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return dyn.eom(State::from_vector(y), std::nullopt, fall, 0.0);
  };
  auto g = [&](const Eigen::VectorXd& y) { return y.head<3>().norm() - re; };
  ReturnSimulation out;
  double t_hit = -1.0;
  const StepObserver obs = [&](const DenseStep& st) {
    if (g(st.y1) <= 0.0) {
      t_hit = locate_root(st, g, kEventTolerance);
      DenseStep cut = st;
      out.path.steps.push_back(cut);
      return true;
    }
    out.path.steps.push_back(st);
    return false;
  };
  const OdeResult res =
      integrate(rhs, 0.0, x0.to_vector(), max_duration, physical_options({}, dyn.earth()), obs);
  if (t_hit < 0.0) {
    if (res.status == OdeStatus::kOk) throw NoImpactError("spent stage does not reach the ground");
    throw NoImpactError("return propagation failed before impact");
  }
  out.duration = t_hit;
  out.impact = State::from_vector(out.path(t_hit));
  out.latitude = std::asin(std::clamp(out.impact.r.z() / out.impact.r.norm(), -1.0, 1.0));
  for (const DenseStep& st : out.path.steps) {
    for (int j = 0; j < kDenseSamples; ++j) {
      const double t = st.t0 + (st.t1 - st.t0) * j / kDenseSamples;
      if (t > t_hit) break;
      out.trace.push_back(make_point(start_time + t, State::from_vector(st(t)), 13, dyn));
    }
  }
  out.trace.push_back(make_point(start_time + t_hit, out.impact, 13, dyn));
  return out;
}

PropagationReport propagate_ascent(const Trajectory& traj, const PhasePlan& plan,
                                   const Dynamics& dyn, bool simulate_splash,
                                   const OdeOptions& options) {
  PropagationReport rep;
  const OdeOptions opt = physical_options(options, dyn.earth());
  const Vec7 inv = ScaleSet::from_earth(dyn.earth()).state_units().cwiseInverse();
  const std::vector<double> t_start = traj.phase_start_times(plan);
  const int na = plan.has_return() ? plan.return_phase : static_cast<int>(plan.size());
  if (static_cast<int>(traj.states.size()) < na) {
    throw std::invalid_argument("propagate_ascent: trajectory is missing phases");
  }
  State x = State::from_vector(traj.states[0].col(0));
  for (int i = 0; i < na; ++i) {
    const Phase& ph = plan.phases[i];
    const double dur = traj.durations[i];
    const PhaseMesh mesh(ph.mesh);
    x.m -= ph.mass_drop;
    auto control = [&](double tau, const State& s) -> std::optional<Vec3> {
      if (!is_optimal(ph)) return std::nullopt;
      const Eigen::VectorXd u = mesh.interpolate_control(traj.controls[i], tau);
      Vec3 dir = u.head<3>();
      const double n = dir.norm();
      if (n > 0.0) dir /= n;
      const double t_ign = ignition_clock(ph, tau, dur, dyn);
      const double thrust = dyn.thrust(ph, t_ign, dyn.air(s.r).pressure);
      return Vec3(thrust / s.m * dir);
    };
    auto rhs = [&](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
      const State s = State::from_vector(y);
      const double tau = dur > 0.0 ? t / dur : 0.0;
      return dyn.eom(s, control(tau, s), ph, ignition_clock(ph, tau, dur, dyn));
    };
    double max_q = 0.0;
    const StepObserver obs = [&](const DenseStep& st) {
      for (int j = 1; j <= kDenseSamples; ++j) {
        const double t = st.t0 + (st.t1 - st.t0) * j / kDenseSamples;
        const TracePoint p = make_point(t_start[i] + t, State::from_vector(st(t)), ph.number, dyn);
        max_q = std::max(max_q, p.heat_flux);
        rep.trace.push_back(p);
      }
      return false;
    };
    const TracePoint p0 = make_point(t_start[i], x, ph.number, dyn);
    rep.trace.push_back(p0);
    max_q = std::max(max_q, p0.heat_flux);
    const auto& tau = mesh.tau();
    for (int k = 0; k < mesh.nodes(); ++k) {
      if (k > 0) {
        const OdeResult r = integrate(rhs, tau[k - 1] * dur, x.to_vector(), tau[k] * dur, opt, obs);
        if (r.status != OdeStatus::kOk) {
          throw PropagationError("propagation failed in phase " + std::to_string(ph.number),
                                 ph.number, t_start[i] + r.t);
        }
        x = State::from_vector(r.y);
      }
      const Vec7 gap = (x.to_vector() - traj.states[i].col(k)).cwiseProduct(inv);
      rep.collocation_gap = std::max(rep.collocation_gap, gap.cwiseAbs().maxCoeff());
    }
    rep.max_heat_flux.emplace_back(ph.number, max_q);
    if (ph.heat_flux_constrained) {
      rep.max_constrained_heat_flux = std::max(rep.max_constrained_heat_flux, max_q);
    }
    if (i == plan.return_anchor) rep.burnout = x;
    if (i == plan.final_phase) rep.terminal = x;
  }
  const double mu = dyn.earth().mu;
  rep.elements = orbital_elements(rep.terminal, mu);
  rep.sma_error = rep.elements.a - plan.target.semi_major_axis;
  rep.sma_error_rel = std::abs(rep.sma_error) / plan.target.semi_major_axis;
  rep.inclination_error = std::abs(rep.elements.i - plan.target.inclination);
  rep.radial_velocity = rep.terminal.r.normalized().dot(rep.terminal.v);
  if (simulate_splash) {
    rep.splash = simulate_return(rep.burnout, plan.return_mass, dyn,
                                 t_start[plan.return_anchor] + traj.durations[plan.return_anchor]);
  }
  return rep;
}

ConstraintAudit audit_constraints(const std::vector<TracePoint>& trace, const Trajectory& traj,
                                  const PhasePlan& plan, const Scaling& scaling,
                                  double active_fraction) {
  ConstraintAudit a;
  a.heat_flux_limit = plan.heat_flux_max;
  const double threshold = active_fraction * plan.heat_flux_max;
  std::optional<ActiveArc> open;
  for (const TracePoint& p : trace) {
    bool constrained = false;
    for (const Phase& ph : plan.phases) {
      if (ph.number == p.phase) constrained = ph.heat_flux_constrained;
    }
    if (!constrained) {
      if (open) a.active_arcs.push_back(*open);
      open.reset();
      continue;
    }
    a.max_heat_flux = std::max(a.max_heat_flux, p.heat_flux);
    if (p.heat_flux >= threshold) {
      if (open && open->phase == p.phase) {
        open->t_end = p.t;
      } else {
        if (open) a.active_arcs.push_back(*open);
        open = ActiveArc{p.phase, p.t, p.t};
      }
    } else if (open) {
      a.active_arcs.push_back(*open);
      open.reset();
    }
  }
  if (open) a.active_arcs.push_back(*open);

  a.relaxation_errors.resize(plan.size());
  for (std::size_t i = 0; i < plan.size() && i < traj.controls.size(); ++i) {
    if (!is_optimal(plan.phases[i])) continue;
    const Eigen::MatrixXd& u = traj.controls[i];
    for (int k = 0; k < u.cols(); ++k) {
      const double e = std::abs(u.block<3, 1>(0, k).norm() - u(3, k)) / scaling.accel();
      a.relaxation_errors[i].push_back(e);
      a.max_relaxation_error = std::max(a.max_relaxation_error, e);
    }
  }
  return a;
}

void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
  out << "t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,m_kg,altitude_m,heat_flux_Wpm2,phase\n";
  char buf[512];
  for (const TracePoint& p : trace) {
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", p.t,
                  p.x.r.x(), p.x.r.y(), p.x.r.z(), p.x.v.x(), p.x.v.y(), p.x.v.z(), p.x.m,
                  p.altitude, p.heat_flux, p.phase);
    out << buf;
  }
}

std::vector<TracePoint> trajectory_trace(const Trajectory& traj, const PhasePlan& plan,
                                         const Dynamics& dyn) {
  std::vector<TracePoint> out;
  const std::vector<double> t0 = traj.phase_start_times(plan);
  for (std::size_t i = 0; i < plan.size() && i < traj.states.size(); ++i) {
    const PhaseMesh mesh(plan.phases[i].mesh);
    for (int k = 0; k < mesh.nodes(); ++k) {
      out.push_back(make_point(t0[i] + mesh.tau()[k] * traj.durations[i],
                               State::from_vector(traj.states[i].col(k)), plan.phases[i].number,
                               dyn));
    }
  }
  return out;
}

}  // namespace ascent
