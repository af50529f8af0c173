#include "ascent/dynamics.hpp"

#include <cmath>

namespace ascent {

namespace {

constexpr double kMinRelativeSpeed = 1e-6;  // [m/s]

}  // namespace

AtmosphereSample Dynamics::air(const Vec3& r) const {
  if (!atmosphere_enabled_) return AtmosphereSample{};
  return atmosphere(earth_.altitude(r));
}

Vec3 Dynamics::relative_velocity(const State& x) const {
  return x.v - earth_.omega_vector().cross(x.r);
}

Vec3 Dynamics::drag_force(const State& x, const AtmosphereSample& a) const {
  const Vec3 w = relative_velocity(x);
  const double k = 0.5 * vehicle_.drag_coefficient * vehicle_.reference_area;
  return -k * a.density * w.norm() * w;
}

double Dynamics::thrust(const Phase& phase, double t_ign, double pressure) const {
  if (!phase.powered() || !phase.stage) return 0.0;
  const Stage& s = vehicle_.stages.at(*phase.stage);
  return s.vacuum_thrust(t_ign) - pressure * s.nozzle_exit_area;
}

double Dynamics::mass_flow(const Phase& phase, double t_ign) const {
  if (!phase.powered() || !phase.stage) return 0.0;
  return vehicle_.stages.at(*phase.stage).mass_flow(t_ign);
}

void Dynamics::check_inputs(const State& x, const std::optional<Vec3>& control,
                            const Phase& phase) const {
  if (!(x.m > 0.0)) throw DynamicsError("non-positive mass in phase " + std::to_string(phase.number));
  const bool optimal = phase.guidance == GuidanceMode::kOptimal;
  if (optimal && !control) {
    throw DynamicsError("missing control in optimal-guidance phase " + std::to_string(phase.number));
  }
  if (!optimal && control) {
    throw DynamicsError("control given to prescribed-guidance phase " + std::to_string(phase.number));
  }
}

Vec7 Dynamics::eom(const State& x, const std::optional<Vec3>& control, const Phase& phase,
                   double t_ign) const {
  check_inputs(x, control, phase);
  const AtmosphereSample a = air(x.r);
  const Vec3 w = relative_velocity(x);
  const double wn = w.norm();
  const Vec3 w_hat = wn < kMinRelativeSpeed ? Vec3::Zero() : Vec3(w / wn);

  Vec3 acc = gravity_accel(earth_, x.r) + drag_force(x, a) / x.m;
  switch (phase.guidance) {
    case GuidanceMode::kVertical:
      acc += thrust(phase, t_ign, a.pressure) / x.m * x.r.normalized();
      break;
    case GuidanceMode::kGravityTurn:
      acc += thrust(phase, t_ign, a.pressure) / x.m * w_hat;
      break;
    case GuidanceMode::kOptimal:
      acc += *control;
      break;
    case GuidanceMode::kCoast:
    case GuidanceMode::kReturn:
      break;
  }
  Vec7 f;
  f << x.v, acc, -mass_flow(phase, t_ign);
  return f;
}

HeatFluxSample Dynamics::heat_flux(const State& x) const {
  HeatFluxSample out;
  const AtmosphereSample a = air(x.r);
  const Vec3 w = relative_velocity(x);
  const double wn = w.norm();
  out.qdot = 0.5 * a.density * wn * wn * wn;
  out.d_qdot_d_v = 1.5 * a.density * wn * w;
  out.d_qdot_d_r = 0.5 * a.d_density_d_alt * wn * wn * wn * x.r.normalized() +
                   1.5 * a.density * wn * earth_.omega_vector().cross(w);
  return out;
}

DynamicsJacobians Dynamics::state_jacobian(const State& x, const std::optional<Vec3>& control,
                                           const Phase& phase, double t_ign) const {
  DynamicsJacobians j;
  j.f_val = eom(x, control, phase, t_ign);
  j.b_mat.block<3, 3>(3, 0).setIdentity();

  const AtmosphereSample a = air(x.r);
  const double rn = x.r.norm();
  const Vec3 r_hat = x.r / rn;
  const Mat3 eye = Mat3::Identity();
  const Mat3 omega_cross = skew(earth_.omega_vector());
  const Vec3 w = relative_velocity(x);
  const double wn = w.norm();
  const double m = x.m;

  Mat3 dv_dr = -earth_.mu / (rn * rn * rn) * (eye - 3.0 * r_hat * r_hat.transpose());
  Mat3 dv_dv = Mat3::Zero();
  Vec3 dv_dm = Vec3::Zero();

  // Drag: -k rho |w| w / m with w = v - omega x r.
  const double k = 0.5 * vehicle_.drag_coefficient * vehicle_.reference_area;
  if (a.density > 0.0) {
    const Mat3 dww = wn < kMinRelativeSpeed ? Mat3::Zero()
                                            : Mat3(wn * eye + w * w.transpose() / wn);
    dv_dv += -k * a.density / m * dww;
    dv_dr += -k / m * (wn * w * a.d_density_d_alt * r_hat.transpose() - a.density * dww * omega_cross);
    dv_dm += k * a.density * wn * w / (m * m);
  }

  if (phase.guidance == GuidanceMode::kVertical || phase.guidance == GuidanceMode::kGravityTurn) {
    const Stage& s = vehicle_.stages.at(*phase.stage);
    const double t = thrust(phase, t_ign, a.pressure);
    const Vec3 dt_dr = -s.nozzle_exit_area * a.d_pressure_d_alt * r_hat;
    if (phase.guidance == GuidanceMode::kVertical) {
      dv_dr += r_hat * dt_dr.transpose() / m + t / m * (eye - r_hat * r_hat.transpose()) / rn;
      dv_dm += -t / (m * m) * r_hat;
    } else if (wn >= kMinRelativeSpeed) {
      const Vec3 w_hat = w / wn;
      const Mat3 dwhat = (eye - w_hat * w_hat.transpose()) / wn;
      dv_dv += t / m * dwhat;
      dv_dr += w_hat * dt_dr.transpose() / m - t / m * dwhat * omega_cross;
      dv_dm += -t / (m * m) * w_hat;
    }
  }

  j.a_mat.block<3, 3>(0, 3) = eye;
  j.a_mat.block<3, 3>(3, 0) = dv_dr;
  j.a_mat.block<3, 3>(3, 3) = dv_dv;
  j.a_mat.block<3, 1>(3, 6) = dv_dm;
  return j;
}

ThrustAccelModel Dynamics::u_n_linear_coefficients(const State& ref, const Phase& phase,
                                                   double t_ign) const {
  if (phase.guidance != GuidanceMode::kOptimal) {
    throw DynamicsError("thrust acceleration model requested outside an optimal phase");
  }
  if (!(ref.m > 0.0)) throw DynamicsError("non-positive reference mass");
  const AtmosphereSample a = air(ref.r);
  const Stage& s = vehicle_.stages.at(*phase.stage);
  const double t = thrust(phase, t_ign, a.pressure);
  ThrustAccelModel model;
  model.value = t / ref.m;
  model.d_mass = -t / (ref.m * ref.m);
  model.d_r = -s.nozzle_exit_area * a.d_pressure_d_alt / ref.m * ref.r.normalized();
  return model;
}

}  // namespace ascent
