#pragma once

#include <Eigen/Dense>

namespace ascent {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

/// Point-mass state in the Earth-centered inertial frame.
struct State {
  Vec3 r = Vec3::Zero();  // [m]
  Vec3 v = Vec3::Zero();  // [m/s]
  double m = 0.0;         // [kg]

  Vec7 to_vector() const {
    Vec7 x;
    x << r, v, m;
    return x;
  }

  static State from_vector(const Vec7& x) {
    return State{x.segment<3>(0), x.segment<3>(3), x(6)};
  }
};

/// Commanded acceleration of the convexified problem and its magnitude slack.
struct ControlSample {
  Vec3 u = Vec3::Zero();  // [m/s^2]
  double u_n = 0.0;       // [m/s^2]
};

inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return s;
}

}  // namespace ascent
