#include "ascent/scvx.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ascent/integrator.hpp"
#include "ascent/validate.hpp"

namespace ascent {

namespace {

constexpr double kDeg = M_PI / 180.0;

int coast_phase(const PhasePlan& plan) { return plan.first_burn + 1; }

int ascent_count(const PhasePlan& plan) {
  return plan.has_return() ? static_cast<int>(plan.size()) - 1 : static_cast<int>(plan.size());
}

bool is_optimal(const Phase& p) { return p.guidance == GuidanceMode::kOptimal; }

Vec7 column7(const Eigen::MatrixXd& m, int k) { return m.col(k); }

std::string phase_tag(const char* base, int number) {
  return std::string(base) + std::to_string(number);
}

socp::ProblemBuilder::Terms merge(socp::ProblemBuilder::Terms t) {
  std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  socp::ProblemBuilder::Terms out;
  for (const auto& e : t) {
    if (!out.empty() && out.back().first == e.first) {
      out.back().second += e.second;
    } else {
      out.push_back(e);
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const auto& e) { return e.second == 0.0; }),
            out.end());
  return out;
}

void check_layout(const Trajectory& traj, const PhasePlan& plan) {
  if (traj.states.size() != plan.size() || traj.controls.size() != plan.size() ||
      traj.durations.size() != plan.size()) {
    throw std::invalid_argument("trajectory has " + std::to_string(traj.states.size()) +
                                " phases, plan has " + std::to_string(plan.size()));
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Phase& p = plan.phases[i];
    const int n = p.mesh.nodes();
    if (traj.states[i].rows() != 7 || traj.states[i].cols() != n) {
      throw std::invalid_argument("state block of phase " + std::to_string(p.number) +
                                  " does not match its mesh");
    }
    const int nc = is_optimal(p) ? n - 1 : 0;
    if (traj.controls[i].cols() != nc || (nc > 0 && traj.controls[i].rows() != 4)) {
      throw std::invalid_argument("control block of phase " + std::to_string(p.number) +
                                  " does not match its mesh");
    }
  }
}

}  // namespace

void ScvxConfig::check() const {
  if (!(lambda_delta_coast > 0.0 && lambda_delta_burn > 0.0 && lambda_q > 0.0 && lambda_w > 0.0)) {
    throw ConfigError("penalty weights must be positive");
  }
  if (!(tol > 0.0)) throw ConfigError("convergence tolerance must be positive");
  if (filter_weights.empty()) throw ConfigError("filter needs at least one weight");
  double sum = 0.0;
  for (double a : filter_weights) {
    if (!(a > 0.0)) throw ConfigError("filter weights must be positive");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("filter weights must sum to one");
  for (double d : {delta_max_coast, delta_max_burn}) {
    if (!(d >= 0.01 && d <= 0.10)) throw ConfigError("trust radius caps must lie in [0.01, 0.10]");
  }
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(reference_mass > 0.0)) throw ConfigError("reference mass must be positive");
}

std::vector<double> Trajectory::phase_start_times(const PhasePlan& plan) const {
  std::vector<double> t0(plan.size(), 0.0);
  const int na = ascent_count(plan);
  for (int i = 1; i < na; ++i) t0[i] = t0[i - 1] + durations[i - 1];
  if (plan.has_return()) {
    t0[plan.return_phase] = t0[plan.return_anchor] + durations[plan.return_anchor];
  }
  return t0;
}

std::vector<PhaseMesh> build_meshes(const PhasePlan& plan) {
  std::vector<PhaseMesh> m;
  m.reserve(plan.size());
  for (const Phase& p : plan.phases) m.emplace_back(p.mesh);
  return m;
}

double ignition_clock(const Phase& phase, double tau, double duration, const Dynamics& dynamics) {
  if (!phase.powered() || !phase.stage) return 0.0;
  const double tb = dynamics.vehicle().stages.at(*phase.stage).burn_time;
  return std::clamp(phase.burn_clock_offset + tau * duration, 0.0, tb);
}

// ---------------------------------------------------------------- guess

namespace {

Vec3 pitch_over_direction(const Vec3& r, double elevation, double azimuth) {
  const Vec3 up = r.normalized();
  Vec3 east = Vec3::UnitZ().cross(up);
  if (east.norm() < 1e-12) east = Vec3::UnitY();
  east.normalize();
  const Vec3 north = up.cross(east);
  return std::sin(elevation) * up +
         std::cos(elevation) * (std::sin(azimuth) * east + std::cos(azimuth) * north);
}

void sample_phase(const Dynamics& dyn, const Phase& phase, const PhaseMesh& mesh, double duration,
                  const std::function<std::optional<Vec3>(double, const State&)>& law,
                  State& x, Eigen::MatrixXd& states, Eigen::MatrixXd& controls, double t_start) {
  const int n = mesh.nodes();
  states.resize(7, n);
  controls.resize(is_optimal(phase) ? 4 : 0, is_optimal(phase) ? n - 1 : 0);
  auto rhs = [&](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    const State s = State::from_vector(y);
    const double tau = duration > 0.0 ? t / duration : 0.0;
    return dyn.eom(s, law(tau, s), phase, ignition_clock(phase, tau, duration, dyn));
  };
  OdeOptions opt;
  opt.rtol = 1e-10;
  Eigen::VectorXd atol(7);
  atol << 1e-4, 1e-4, 1e-4, 1e-7, 1e-7, 1e-7, 1e-6;
  opt.atol = atol;
  double min_alt = std::numeric_limits<double>::infinity();
  double t_min = 0.0;
  const StepObserver watch = [&](const DenseStep& st) {
    const double alt = dyn.earth().altitude(st.y1.head<3>());
    if (alt < min_alt) {
      min_alt = alt;
      t_min = st.t1;
    }
    return false;
  };
  const auto& tau = mesh.tau();
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      const OdeResult res = integrate(rhs, tau[k - 1] * duration, x.to_vector(),
                                      tau[k] * duration, opt, watch);
      if (res.status != OdeStatus::kOk) {
        throw GuessRejected("guess propagation failed in phase " + std::to_string(phase.number));
      }
      x = State::from_vector(res.y);
    }
    states.col(k) = x.to_vector();
    if (is_optimal(phase) && k < n - 1) {
      const Vec3 u = *law(tau[k], x);
      controls.col(k) << u, u.norm();
    }
  }
  if (min_alt < -1.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "guess trajectory below sea level in phase %d at t = %.3f s (altitude %.1f m)",
                  phase.number, t_start + t_min, min_alt);
    throw GuessRejected(buf);
  }
}

}  // namespace

ReferenceTrajectory generate_initial_guess(const PhasePlan& plan, const Dynamics& dynamics,
                                           const GuessParams& gp) {
  if (!(gp.payload_mass >= 0.0) || !(gp.coast_duration > 0.0) ||
      !(gp.second_burn_duration > 0.0)) {
    throw ConfigError("guess masses and durations must be positive");
  }
  if (!(gp.kick_angle > 0.0 && gp.kick_angle < 90.0)) {
    throw ConfigError("kick angle must lie in (0, 90) deg");
  }
  if (!(gp.second_burn_duration < plan.upper_stage_burn_time)) {
    throw ConfigError("second burn guess exceeds the upper-stage burn time");
  }
  const Dynamics vac(dynamics.earth(), dynamics.vehicle(), false);
  const double azimuth = pitch_over_azimuth(plan.target.inclination, plan.site.latitude);
  const std::vector<PhaseMesh> meshes = build_meshes(plan);

  Trajectory traj;
  traj.states.resize(plan.size());
  traj.controls.resize(plan.size());
  traj.durations.resize(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) traj.durations[i] = plan.phases[i].duration;
  traj.durations[coast_phase(plan)] = gp.coast_duration;
  traj.durations[plan.second_burn] = gp.second_burn_duration;
  traj.durations[plan.first_burn] = plan.upper_stage_burn_time - gp.second_burn_duration;

  const auto [r0, v0] = initial_state(dynamics.earth(), plan.site);
  State x{r0, v0, liftoff_mass(dynamics.vehicle(), gp.payload_mass)};
  std::optional<Vec3> plane;
  double t_start = 0.0;
  for (int i = 0; i < ascent_count(plan); ++i) {
    const Phase& ph = plan.phases[i];
    const double dur = traj.durations[i];
    x.m -= ph.mass_drop;
    std::function<std::optional<Vec3>(double, const State&)> law =
        [](double, const State&) -> std::optional<Vec3> { return std::nullopt; };
    if (is_optimal(ph)) {
      if (i <= 1) {
        const double kick = gp.kick_angle * kDeg;
        law = [&, dur, kick](double tau, const State& s) -> std::optional<Vec3> {
          const double el = M_PI / 2 + (kick - M_PI / 2) * tau;
          const double t = vac.thrust(ph, ignition_clock(ph, tau, dur, vac), 0.0);
          return Vec3(t / s.m * pitch_over_direction(s.r, el, azimuth));
        };
      } else {
        if (!plane) plane = x.r.cross(x.v).normalized();
        const Vec3 n = *plane;
        law = [&, dur, n](double tau, const State& s) -> std::optional<Vec3> {
          const double t = vac.thrust(ph, ignition_clock(ph, tau, dur, vac), 0.0);
          return Vec3(t / s.m * n.cross(s.r).normalized());
        };
      }
    }
    sample_phase(vac, ph, meshes[i], dur, law, x, traj.states[i], traj.controls[i], t_start);
    t_start += dur;
  }
  if (plan.has_return()) seed_return_phase(traj, plan, dynamics);
  return ReferenceTrajectory{std::move(traj), "initial_guess"};
}

void seed_return_phase(Trajectory& traj, const PhasePlan& plan, const Dynamics& dynamics) {
  if (!plan.has_return()) return;
  const int ri = plan.return_phase;
  if (static_cast<int>(traj.states.size()) <= ri) {
    traj.states.resize(ri + 1);
    traj.controls.resize(ri + 1);
    traj.durations.resize(ri + 1);
  }
  const Eigen::MatrixXd& anchor = traj.states[plan.return_anchor];
  State x0 = State::from_vector(column7(anchor, static_cast<int>(anchor.cols()) - 1));
  ReturnSimulation sim;
  try {
    sim = simulate_return(x0, plan.return_mass, dynamics);
  } catch (const NoImpactError& e) {
    throw GuessRejected(std::string("return seed: ") + e.what());
  }
  const PhaseMesh mesh(plan.phases[ri].mesh);
  Eigen::MatrixXd states(7, mesh.nodes());
  for (int k = 0; k < mesh.nodes(); ++k) {
    Eigen::VectorXd y = sim.path(mesh.tau()[k] * sim.duration);
    if (k == mesh.nodes() - 1) y = sim.impact.to_vector();
    states.col(k) = y;
  }
  traj.states[ri] = states;
  traj.controls[ri] = Eigen::MatrixXd(0, 0);
  traj.durations[ri] = sim.duration;
}

Trajectory strip_return_phase(const Trajectory& traj, const PhasePlan& plan) {
  Trajectory out = traj;
  if (plan.has_return() && static_cast<int>(out.states.size()) > plan.return_phase) {
    out.states.resize(plan.return_phase);
    out.controls.resize(plan.return_phase);
    out.durations.resize(plan.return_phase);
  }
  return out;
}

// ---------------------------------------------------------------- linearization

Vec7 scaled_rhs(const Vec7& xs, const Vec3& us, double sigma_s, const Phase& phase, double t_ign,
                const Dynamics& dyn, const Scaling& sc) {
  const Vec7 su = sc.state_units();
  const State x = State::from_vector(xs.cwiseProduct(su));
  std::optional<Vec3> u;
  if (is_optimal(phase)) u = Vec3(us * sc.accel());
  const Vec7 f = dyn.eom(x, u, phase, t_ign);
  return sigma_s * sc.units.time * f.cwiseQuotient(su);
}

Linearization linearize(const ReferenceTrajectory& ref, const PhasePlan& plan,
                        const Dynamics& dyn, const Scaling& sc) {
  const Trajectory& tr = ref.traj;
  check_layout(tr, plan);
  const Vec7 su = sc.state_units();
  const double tu = sc.units.time;
  const std::vector<PhaseMesh> meshes = build_meshes(plan);
  Linearization lin(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Phase& ph = plan.phases[i];
    const PhaseMesh& mesh = meshes[i];
    const double dur = tr.durations[i];
    const double sigma_s = dur / tu;
    const int nc = mesh.collocation_nodes();
    lin[i].resize(nc);
    for (int k = 0; k < nc; ++k) {
      const double tau = mesh.tau()[k];
      const Vec7 x_phys = column7(tr.states[i], k);
      const State x = State::from_vector(x_phys);
      std::optional<Vec3> u;
      Vec3 us = Vec3::Zero();
      if (is_optimal(ph)) {
        u = Vec3(tr.controls[i].block<3, 1>(0, k));
        us = *u / sc.accel();
      }
      const DynamicsJacobians j = dyn.state_jacobian(x, u, ph, ignition_clock(ph, tau, dur, dyn));
      const Mat7 a_s = tu * su.cwiseInverse().asDiagonal() * j.a_mat * su.asDiagonal();
      const Vec7 f_s = tu * j.f_val.cwiseQuotient(su);
      NodeLinearization& nl = lin[i][k];
      const Vec7 xs = x_phys.cwiseQuotient(su);
      nl.a = sigma_s * a_s;
      if (is_optimal(ph)) nl.b = sigma_s * j.b_mat;
      if (ph.free_time) {
        nl.s = f_s;
        nl.c = -(nl.a * xs + nl.b * us);
      } else {
        const Vec7 drift = f_s - j.b_mat * us;
        nl.c = sigma_s * drift - nl.a * xs;
      }
    }
  }
  return lin;
}

// ---------------------------------------------------------------- assembly

RowCounts expected_row_counts(const PhasePlan& plan) {
  RowCounts r;
  int nc_total = 0;
  for (const Phase& p : plan.phases) {
    const int nc = p.mesh.collocation_nodes();
    nc_total += nc;
    if (is_optimal(p)) {
      r.thrust_tie += nc;
      r.cone_blocks += nc;
    }
    if (p.heat_flux_constrained) r.heat_flux += p.mesh.nodes();
  }
  const int nbuf = plan.has_return() ? 6 : 4;
  r.initial = 6;
  r.collocation = 7 * nc_total;
  r.linkage = 7 * (ascent_count(plan) - 1) + (plan.has_return() ? 7 : 0);
  r.duration_sum = 1;
  r.terminal = nbuf;
  r.trust = 8;
  r.nonneg = 14 * nc_total + 2 * nbuf + (plan.has_return() ? 2 : 1);
  return r;
}

int expected_num_vars(const PhasePlan& plan) {
  int n = 0;
  for (const Phase& p : plan.phases) {
    const int nc = p.mesh.collocation_nodes();
    n += 7 * p.mesh.nodes() + 14 * nc;
    if (is_optimal(p)) n += 4 * nc;
    if (p.free_time) n += 1;
  }
  const int nbuf = plan.has_return() ? 6 : 4;
  return n + 2 + 2 * nbuf;
}

Subproblem assemble_subproblem(const ReferenceTrajectory& ref, const Linearization& lin,
                               const PhasePlan& plan, const Dynamics& dyn, const Scaling& sc,
                               const ScvxConfig& cfg) {
  using Terms = socp::ProblemBuilder::Terms;
  const Trajectory& tr = ref.traj;
  check_layout(tr, plan);
  if (lin.size() != plan.size()) throw std::logic_error("linearization does not match the plan");
  const Vec7 su = sc.state_units();
  const double du = sc.units.length, vu = sc.units.velocity, tu = sc.units.time,
               mu_ = sc.units.mass, acc = sc.accel();
  const std::vector<PhaseMesh> meshes = build_meshes(plan);
  const int np = static_cast<int>(plan.size());

  Subproblem sub;
  VariableIndexMap& m = sub.map;
  RowCounts& rc = sub.rows;
  socp::ProblemBuilder b;
  m.state.assign(np, -1);
  m.control.assign(np, -1);
  m.sigma.assign(np, -1);
  m.q_pos.assign(np, -1);
  m.q_neg.assign(np, -1);
  for (int i = 0; i < np; ++i) {
    const Phase& ph = plan.phases[i];
    const int n = meshes[i].nodes(), nc = meshes[i].collocation_nodes();
    m.state[i] = b.add_variables(phase_tag("x", ph.number), 7 * n);
    if (is_optimal(ph)) m.control[i] = b.add_variables(phase_tag("u", ph.number), 4 * nc);
    if (ph.free_time) m.sigma[i] = b.add_variable(phase_tag("sigma", ph.number));
    m.q_pos[i] = b.add_variables(phase_tag("qp", ph.number), 7 * nc);
    m.q_neg[i] = b.add_variables(phase_tag("qn", ph.number), 7 * nc);
  }
  m.delta_coast = b.add_variable("delta_coast");
  m.delta_burn = b.add_variable("delta_burn");
  m.num_buffers = plan.has_return() ? 6 : 4;
  m.w_pos = b.add_variables("wp", m.num_buffers);
  m.w_neg = b.add_variables("wn", m.num_buffers);
  m.num_vars = b.num_vars();

  auto X = [&](int i, int k, int c) { return m.state[i] + 7 * k + c; };
  auto U = [&](int i, int k, int c) { return m.control[i] + 4 * k + c; };
  auto xbar = [&](int i, int k) -> Vec7 { return column7(tr.states[i], k).cwiseQuotient(su); };

  // Objective.
  const int fin = plan.final_phase;
  const int n_fin = meshes[fin].nodes();
  b.add_cost(X(fin, n_fin - 1, 6), -1.0);
  b.add_cost(m.delta_coast, cfg.lambda_delta_coast);
  b.add_cost(m.delta_burn, cfg.lambda_delta_burn);
  for (int i = 0; i < np; ++i) {
    for (int k = 0; k < 7 * meshes[i].collocation_nodes(); ++k) {
      b.add_cost(m.q_pos[i] + k, cfg.lambda_q);
      b.add_cost(m.q_neg[i] + k, cfg.lambda_q);
    }
  }
  for (int k = 0; k < m.num_buffers; ++k) {
    b.add_cost(m.w_pos + k, cfg.lambda_w);
    b.add_cost(m.w_neg + k, cfg.lambda_w);
  }

  // Initial position and velocity.
  {
    const auto [r0, v0] = initial_state(dyn.earth(), plan.site);
    for (int c = 0; c < 3; ++c) {
      b.add_equality({{X(0, 0, c), 1.0}}, r0(c) / du);
      b.add_equality({{X(0, 0, 3 + c), 1.0}}, v0(c) / vu);
    }
    rc.initial = 6;
  }

  // Collocation of the linearized dynamics with virtual control.
  for (int i = 0; i < np; ++i) {
    const PhaseMesh& mesh = meshes[i];
    const bool opt = is_optimal(plan.phases[i]);
    for (int s = 0; s < mesh.segments(); ++s) {
      const SegmentGrid& g = mesh.grid(s);
      const int first = mesh.first_node(s);
      const double h = mesh.half_width(s);
      for (int r = 0; r < g.order; ++r) {
        const int k = first + r;
        const NodeLinearization& nl = lin[i][k];
        for (int c = 0; c < 7; ++c) {
          Terms t;
          for (int j = 0; j <= g.order; ++j) t.emplace_back(X(i, first + j, c), g.diff(r, j));
          for (int cc = 0; cc < 7; ++cc) {
            if (nl.a(c, cc) != 0.0) t.emplace_back(X(i, k, cc), -h * nl.a(c, cc));
          }
          if (opt) {
            for (int d = 0; d < 3; ++d) {
              if (nl.b(c, d) != 0.0) t.emplace_back(U(i, k, d), -h * nl.b(c, d));
            }
          }
          if (m.sigma[i] >= 0 && nl.s(c) != 0.0) t.emplace_back(m.sigma[i], -h * nl.s(c));
          t.emplace_back(m.q_pos[i] + 7 * k + c, -h);
          t.emplace_back(m.q_neg[i] + 7 * k + c, h);
          b.add_equality(merge(std::move(t)), h * nl.c(c));
          ++rc.collocation;
        }
      }
    }
  }

  // Phase linkage with mass drops.
  const int na = ascent_count(plan);
  for (int i = 1; i < na; ++i) {
    const int last = meshes[i - 1].nodes() - 1;
    for (int c = 0; c < 7; ++c) {
      const double rhs = c == 6 ? -plan.phases[i].mass_drop / mu_ : 0.0;
      b.add_equality({{X(i, 0, c), 1.0}, {X(i - 1, last, c), -1.0}}, rhs);
      ++rc.linkage;
    }
  }
  if (plan.has_return()) {
    const int ri = plan.return_phase, an = plan.return_anchor;
    const int last = meshes[an].nodes() - 1;
    for (int c = 0; c < 6; ++c) {
      b.add_equality({{X(ri, 0, c), 1.0}, {X(an, last, c), -1.0}}, 0.0);
    }
    b.add_equality({{X(ri, 0, 6), 1.0}}, plan.return_mass / mu_);
    rc.linkage += 7;
  }

  // Upper-stage burn split.
  b.add_equality({{m.sigma[plan.first_burn], 1.0}, {m.sigma[plan.second_burn], 1.0}},
                 plan.upper_stage_burn_time / tu);
  rc.duration_sum = 1;

  // Terminal orbit rows, buffered.
  auto wp = [&](int k) { return m.w_pos + k; };
  auto wn = [&](int k) { return m.w_neg + k; };
  {
    const Vec7 xf = xbar(fin, n_fin - 1);
    const Vec3 rb = xf.head<3>(), vb = xf.segment<3>(3);
    const double a_s = plan.target.semi_major_axis / du;
    const double mu_s = dyn.earth().mu / (du * vu * vu);
    const double hz_s = plan.target.angular_momentum_z(dyn.earth().mu) / (du * vu);
    const int l = n_fin - 1;
    Terms t0, t1, t2, t3;
    for (int c = 0; c < 3; ++c) {
      t0.emplace_back(X(fin, l, c), 2.0 * rb(c));
      t1.emplace_back(X(fin, l, 3 + c), 2.0 * vb(c));
      t2.emplace_back(X(fin, l, c), vb(c));
      t2.emplace_back(X(fin, l, 3 + c), rb(c));
    }
    t3 = {{X(fin, l, 0), vb(1)}, {X(fin, l, 1), -vb(0)}, {X(fin, l, 3), -rb(1)},
          {X(fin, l, 4), rb(0)}};
    std::vector<Terms> rows = {t0, t1, t2, t3};
    const double rhs[4] = {a_s * a_s + rb.squaredNorm(), mu_s / a_s + vb.squaredNorm(),
                           rb.dot(vb), hz_s + vb(1) * rb(0) - vb(0) * rb(1)};
    for (int q = 0; q < 4; ++q) {
      rows[q].emplace_back(wp(q), -1.0);
      rows[q].emplace_back(wn(q), 1.0);
      b.add_equality(rows[q], rhs[q]);
    }
    rc.terminal = 4;
  }
  if (plan.has_return()) {
    const int ri = plan.return_phase;
    const int l = meshes[ri].nodes() - 1;
    const Vec3 rb = xbar(ri, l).head<3>();
    const double re_s = dyn.earth().r_earth / du;
    Terms t0;
    for (int c = 0; c < 3; ++c) t0.emplace_back(X(ri, l, c), 2.0 * rb(c));
    t0.emplace_back(wp(4), -1.0);
    t0.emplace_back(wn(4), 1.0);
    b.add_equality(t0, re_s * re_s + rb.squaredNorm());
    b.add_equality({{X(ri, l, 2), 1.0}, {wp(5), -1.0}, {wn(5), 1.0}},
                   re_s * std::sin(plan.splash.latitude));
    rc.terminal += 2;
  }

  // Thrust-acceleration ties and relaxed cones.
  for (int i = 0; i < np; ++i) {
    const Phase& ph = plan.phases[i];
    if (!is_optimal(ph)) continue;
    const int nc = meshes[i].collocation_nodes();
    for (int k = 0; k < nc; ++k) {
      const State xr = State::from_vector(column7(tr.states[i], k));
      const ThrustAccelModel tm = dyn.u_n_linear_coefficients(
          xr, ph, ignition_clock(ph, meshes[i].tau()[k], tr.durations[i], dyn));
      const double dm = tm.d_mass * mu_ / acc;
      const Vec3 dr = tm.d_r * du / acc;
      const Vec7 xb = xbar(i, k);
      Terms t = {{U(i, k, 3), 1.0}, {X(i, k, 6), -dm}};
      for (int c = 0; c < 3; ++c) {
        if (dr(c) != 0.0) t.emplace_back(X(i, k, c), -dr(c));
      }
      b.add_equality(t, tm.value / acc - dm * xb(6) - dr.dot(xb.head<3>()));
      ++rc.thrust_tie;
      b.add_norm_bound(U(i, k, 3), {U(i, k, 0), U(i, k, 1), U(i, k, 2)});
      ++rc.cone_blocks;
    }
  }

  // Linearized heat flux at every node of the constrained phases.
  for (int i = 0; i < np; ++i) {
    if (!plan.phases[i].heat_flux_constrained) continue;
    const double qmax = plan.heat_flux_max;
    for (int k = 0; k < meshes[i].nodes(); ++k) {
      const State xr = State::from_vector(column7(tr.states[i], k));
      const HeatFluxSample hf = dyn.heat_flux(xr);
      const Vec3 gr = hf.d_qdot_d_r * du / qmax, gv = hf.d_qdot_d_v * vu / qmax;
      const Vec7 xb = xbar(i, k);
      Terms t;
      for (int c = 0; c < 3; ++c) {
        if (gr(c) != 0.0) t.emplace_back(X(i, k, c), gr(c));
        if (gv(c) != 0.0) t.emplace_back(X(i, k, 3 + c), gv(c));
      }
      b.add_less_equal(t, 1.0 - hf.qdot / qmax + gr.dot(xb.head<3>()) + gv.dot(xb.segment<3>(3)));
      ++rc.heat_flux;
    }
  }

  // Trust regions on the coast and the second burn.
  {
    const int idx[2] = {coast_phase(plan), plan.second_burn};
    const int del[2] = {m.delta_coast, m.delta_burn};
    const double cap[2] = {cfg.delta_max_coast, cfg.delta_max_burn};
    for (int q = 0; q < 2; ++q) {
      const double sb = tr.durations[idx[q]] / tu;
      const int sv = m.sigma[idx[q]];
      b.add_less_equal({{sv, 1.0}, {del[q], -1.0}}, sb);
      b.add_less_equal({{sv, -1.0}, {del[q], -1.0}}, -sb);
      b.add_less_equal({{del[q], 1.0}}, cap[q] * sb);
      b.add_less_equal({{del[q], -1.0}}, 0.0);
    }
    rc.trust = 8;
  }

  // Sign constraints of the split penalties and untrusted durations.
  for (int i = 0; i < np; ++i) {
    for (int k = 0; k < 7 * meshes[i].collocation_nodes(); ++k) {
      b.add_less_equal({{m.q_pos[i] + k, -1.0}}, 0.0);
      b.add_less_equal({{m.q_neg[i] + k, -1.0}}, 0.0);
      rc.nonneg += 2;
    }
  }
  for (int k = 0; k < m.num_buffers; ++k) {
    b.add_less_equal({{wp(k), -1.0}}, 0.0);
    b.add_less_equal({{wn(k), -1.0}}, 0.0);
    rc.nonneg += 2;
  }
  for (int i = 0; i < np; ++i) {
    if (m.sigma[i] >= 0 && i != coast_phase(plan) && i != plan.second_burn) {
      b.add_less_equal({{m.sigma[i], -1.0}}, 0.0);
      ++rc.nonneg;
    }
  }

  sub.problem = b.build();
  if (sub.problem.num_rows != rc.total_rows() || b.num_vars() != m.num_vars) {
    throw std::logic_error("subproblem assembly: row tally mismatch");
  }
  return sub;
}

ScvxIterate extract_iterate(const socp::ConicSolution& sol, const Subproblem& sub,
                            const PhasePlan& plan, const Scaling& sc, const ScvxConfig& cfg) {
  const VariableIndexMap& m = sub.map;
  const Eigen::VectorXd& x = sol.x;
  if (x.size() != m.num_vars) throw std::logic_error("solution size does not match the index map");
  const Vec7 su = sc.state_units();
  const double tu = sc.units.time, acc = sc.accel();
  const int np = static_cast<int>(plan.size());
  ScvxIterate it;
  it.status = sol.status;
  it.solver_iterations = sol.iterations;
  it.traj.states.resize(np);
  it.traj.controls.resize(np);
  it.traj.durations.resize(np);
  it.virtual_controls.resize(np);
  for (int i = 0; i < np; ++i) {
    const Phase& ph = plan.phases[i];
    const int n = ph.mesh.nodes(), nc = n - 1;
    Eigen::MatrixXd s = Eigen::Map<const Eigen::MatrixXd>(x.data() + m.state[i], 7, n);
    it.traj.states[i] = su.asDiagonal() * s;
    if (m.control[i] >= 0) {
      it.traj.controls[i] = acc * Eigen::Map<const Eigen::MatrixXd>(x.data() + m.control[i], 4, nc);
    } else {
      it.traj.controls[i] = Eigen::MatrixXd(0, 0);
    }
    it.traj.durations[i] = m.sigma[i] >= 0 ? x(m.sigma[i]) * tu : ph.duration;
    it.virtual_controls[i] = Eigen::Map<const Eigen::MatrixXd>(x.data() + m.q_pos[i], 7, nc) -
                             Eigen::Map<const Eigen::MatrixXd>(x.data() + m.q_neg[i], 7, nc);
    it.q_l1 += it.virtual_controls[i].cwiseAbs().sum();
  }
  it.buffers = x.segment(m.w_pos, m.num_buffers) - x.segment(m.w_neg, m.num_buffers);
  it.w_l1 = it.buffers.cwiseAbs().sum();
  it.delta_coast = x(m.delta_coast) * tu;
  it.delta_burn = x(m.delta_burn) * tu;
  const int fin = plan.final_phase;
  it.objective.mass = -x(m.state[fin] + 7 * (plan.phases[fin].mesh.nodes() - 1) + 6);
  it.objective.delta =
      cfg.lambda_delta_coast * x(m.delta_coast) + cfg.lambda_delta_burn * x(m.delta_burn);
  double qs = 0.0;
  for (int i = 0; i < np; ++i) {
    const int len = 7 * (plan.phases[i].mesh.nodes() - 1);
    qs += x.segment(m.q_pos[i], len).sum() + x.segment(m.q_neg[i], len).sum();
  }
  it.objective.virtual_control = cfg.lambda_q * qs;
  it.objective.buffer = cfg.lambda_w * (x.segment(m.w_pos, m.num_buffers).sum() +
                                        x.segment(m.w_neg, m.num_buffers).sum());
  return it;
}

// ---------------------------------------------------------------- reference update

ReferenceTrajectory filter_update(const std::vector<Trajectory>& solved, const Trajectory& guess,
                                  const std::vector<double>& weights) {
  if (solved.empty()) throw std::invalid_argument("filter_update needs a solved iterate");
  if (weights.empty()) throw std::invalid_argument("filter_update needs weights");
  const int i = static_cast<int>(solved.size());
  ReferenceTrajectory out;
  std::ostringstream prov;
  prov << "filtered(";
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const int idx = std::max(0, i - static_cast<int>(k));
    const Trajectory& src = idx == 0 ? guess : solved[idx - 1];
    const double a = weights[k];
    prov << (k ? "," : "") << idx;
    if (k == 0) {
      out.traj = src;
      for (auto& s : out.traj.states) s *= a;
      for (auto& c : out.traj.controls) c *= a;
      for (auto& d : out.traj.durations) d *= a;
      continue;
    }
    if (src.states.size() != out.traj.states.size()) {
      throw std::invalid_argument("filter_update: trajectories with different phase counts");
    }
    for (std::size_t p = 0; p < src.states.size(); ++p) {
      if (src.states[p].cols() != out.traj.states[p].cols() ||
          src.controls[p].cols() != out.traj.controls[p].cols()) {
        throw std::invalid_argument("filter_update: trajectories on different meshes");
      }
      out.traj.states[p] += a * src.states[p];
      if (src.controls[p].size() > 0) out.traj.controls[p] += a * src.controls[p];
      out.traj.durations[p] += a * src.durations[p];
    }
  }
  prov << ")";
  out.provenance = prov.str();
  return out;
}

ConvergenceReport check_convergence(const Trajectory& cur, const Trajectory& ref,
                                    const Scaling& sc, double tol) {
  if (cur.states.size() != ref.states.size()) {
    throw std::invalid_argument("check_convergence: layouts differ");
  }
  const Vec7 inv = sc.state_units().cwiseInverse();
  ConvergenceReport r;
  for (std::size_t p = 0; p < cur.states.size(); ++p) {
    if (cur.states[p].cols() != ref.states[p].cols()) {
      throw std::invalid_argument("check_convergence: layouts differ");
    }
    const Eigen::MatrixXd d = inv.asDiagonal() * (cur.states[p] - ref.states[p]);
    if (d.size() > 0) r.state_norm = std::max(r.state_norm, d.cwiseAbs().maxCoeff());
    r.duration_change = std::max(r.duration_change, std::abs(cur.durations[p] - ref.durations[p]));
  }
  r.converged = r.state_norm < tol;
  return r;
}

double relaxation_error(const Trajectory& traj, const PhasePlan& plan, const Scaling& sc) {
  double e = 0.0;
  for (std::size_t i = 0; i < plan.size() && i < traj.controls.size(); ++i) {
    if (!is_optimal(plan.phases[i])) continue;
    const Eigen::MatrixXd& u = traj.controls[i];
    for (int k = 0; k < u.cols(); ++k) {
      e = std::max(e, std::abs(u.block<3, 1>(0, k).norm() - u(3, k)) / sc.accel());
    }
  }
  return e;
}

double payload_mass(const Trajectory& traj, const VehicleModel& vehicle) {
  return traj.states.front()(6, 0) - liftoff_mass(vehicle, 0.0);
}

// ---------------------------------------------------------------- driver

const char* to_string(ScvxStatus s) {
  switch (s) {
    case ScvxStatus::kConverged: return "converged";
    case ScvxStatus::kMaxIterations: return "max_iterations";
    case ScvxStatus::kSolverFailure: return "solver_failure";
  }
  return "unknown";
}

void write_iteration_header(std::ostream& out) {
  out << "iter,objective,mass_term,delta_term,q_term,w_term,q_l1,w_l1,w_terminal_l1,w_return_l1,"
         "state_norm,"
         "duration_change_s,relaxation_error,payload_kg,solver_iters,solver_status,retried,"
         "wall_time_s\n";
}

void write_iteration_record(std::ostream& out, const IterationRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,"
                "%s,%d,%.6f\n",
                r.iter, r.objective.total(), r.objective.mass, r.objective.delta,
                r.objective.virtual_control, r.objective.buffer, r.q_l1, r.w_l1, r.w_terminal_l1,
                r.w_return_l1, r.state_norm,
                r.duration_change, r.relaxation_error, r.payload, r.solver_iterations,
                r.solver_status.c_str(), r.retried ? 1 : 0, r.wall_time);
  out << buf;
}

ScvxResult run(const PhasePlan& plan, const Dynamics& dyn, const ScvxConfig& cfg,
               const ReferenceTrajectory& guess, socp::ConicSolver& solver, std::ostream* log) {
  using clock = std::chrono::steady_clock;
  cfg.check();
  check_layout(guess.traj, plan);
  const Scaling sc(dyn.earth(), cfg.reference_mass);
  const auto t_run = clock::now();
  ScvxResult res;
  res.status = ScvxStatus::kMaxIterations;
  if (log) write_iteration_header(*log);

  ReferenceTrajectory ref = guess;
  std::vector<Trajectory> solved;
  const int trusted[2] = {coast_phase(plan), plan.second_burn};
  double shrink[2] = {1.0, 1.0};
  int last_sign[2] = {0, 0};
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const auto t0 = clock::now();
    ScvxConfig step_cfg = cfg;
    step_cfg.delta_max_coast *= shrink[0];
    step_cfg.delta_max_burn *= shrink[1];
    Subproblem sub;
    try {
      const Linearization lin = linearize(ref, plan, dyn, sc);
      sub = assemble_subproblem(ref, lin, plan, dyn, sc, step_cfg);
    } catch (const std::exception& e) {
      res.status = ScvxStatus::kSolverFailure;
      res.message = "reference " + std::to_string(iter) + " cannot be linearized: " + e.what();
      break;
    }
    socp::SolverSettings settings = cfg.solver;
    socp::ConicSolution sol = solver.solve(sub.problem, settings);
    bool retried = false;
    if (sol.status != socp::SolveStatus::kOptimal) {
      settings.static_regularization *= 2.0;
      sol = solver.solve(sub.problem, settings);
      retried = true;
    }
    IterationRecord rec;
    rec.iter = iter;
    rec.retried = retried;
    rec.solver_status = socp::to_string(sol.status);
    rec.solver_iterations = sol.iterations;
    if (sol.status != socp::SolveStatus::kOptimal) {
      rec.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
      res.history.push_back(rec);
      if (log) write_iteration_record(*log, rec);
      res.status = ScvxStatus::kSolverFailure;
      res.message = "subproblem " + std::to_string(iter) + " failed after retry: " +
                    socp::to_string(sol.status) + " (" + sol.message + ")";
      break;
    }
    ScvxIterate it = extract_iterate(sol, sub, plan, sc, step_cfg);
    if (cfg.trust_contraction) {
      const double caps[2] = {step_cfg.delta_max_coast, step_cfg.delta_max_burn};
      for (int q = 0; q < 2; ++q) {
        const double sb = ref.traj.durations[trusted[q]];
        const double step = it.traj.durations[trusted[q]] - sb;
        const int sign = std::abs(step) > 1e-9 * sb ? (step > 0.0 ? 1 : -1) : 0;
        if (sign == 0) continue;
        const bool at_cap = std::abs(step) >= 0.99 * caps[q] * sb;
        if (last_sign[q] != 0 && sign != last_sign[q]) {
          shrink[q] *= 0.5;
        } else if (sign == last_sign[q] && at_cap) {
          shrink[q] = std::min(1.0, 2.0 * shrink[q]);
        }
        last_sign[q] = sign;
      }
    }
    const ConvergenceReport conv = check_convergence(it.traj, ref.traj, sc, cfg.tol);
    rec.objective = it.objective;
    rec.q_l1 = it.q_l1;
    rec.w_l1 = it.w_l1;
    rec.w_terminal_l1 = it.buffers.head(4).cwiseAbs().sum();
    rec.w_return_l1 = it.buffers.size() > 4 ? it.buffers.tail(it.buffers.size() - 4).cwiseAbs().sum() : 0.0;
    rec.state_norm = conv.state_norm;
    rec.duration_change = conv.duration_change;
    rec.relaxation_error = relaxation_error(it.traj, plan, sc);
    rec.payload = payload_mass(it.traj, dyn.vehicle());
    rec.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
    res.history.push_back(rec);
    if (log) {
      write_iteration_record(*log, rec);
      log->flush();
    }
    solved.push_back(it.traj);
    res.solution = std::move(it);
    if (conv.converged) {
      res.status = ScvxStatus::kConverged;
      break;
    }
    ref = filter_update(solved, guess.traj, cfg.filter_weights);
  }
  if (res.status == ScvxStatus::kMaxIterations) {
    res.message = "no convergence within " + std::to_string(cfg.max_iters) + " iterations";
  }
  res.penalties_clean = !res.history.empty() && res.solution.q_l1 <= 1e-8 &&
                        res.solution.w_l1 <= 1e-8;
  res.wall_time = std::chrono::duration<double>(clock::now() - t_run).count();
  return res;
}

ScvxResult run(const PhasePlan& plan, const Dynamics& dyn, const ScvxConfig& cfg,
               const ReferenceTrajectory& guess, std::ostream* log) {
  socp::InteriorPointSolver solver;
  return run(plan, dyn, cfg, guess, solver, log);
}

}  // namespace ascent
