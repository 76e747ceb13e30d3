#pragma once

// Planar wheeled-base kinematics. Frames: body-frame twist, theta measured
// counterclockwise from +x.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "rems/error.hpp"

namespace rems {

template <typename Scalar>
struct Pose2 {
  Scalar x{0};
  Scalar y{0};
  Scalar theta{0};
};

template <typename Scalar>
struct Twist2 {
  Scalar vx{0};
  Scalar vy{0};
  Scalar wz{0};

  Eigen::Matrix<Scalar, 3, 1> vector() const { return {vx, vy, wz}; }
  static Twist2 from_vector(const Eigen::Matrix<Scalar, 3, 1>& v) { return {v(0), v(1), v(2)}; }
};

using Pose2d = Pose2<double>;
using Twist2d = Twist2<double>;

/// Wheel speeds (left, right) in rad/s.
template <typename Scalar>
using DiffWheels = Eigen::Matrix<Scalar, 2, 1>;
/// Wheel speeds (front-left, front-right, rear-left, rear-right) in rad/s.
template <typename Scalar>
using MecanumWheels = Eigen::Matrix<Scalar, 4, 1>;

/// Maps an angle into (-pi, pi].
template <typename Scalar>
Scalar normalize_angle(Scalar a) {
  using std::remainder;
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar r = remainder(a, two_pi);
  if (r <= -std::numbers::pi_v<Scalar>) r += two_pi;
  return r;
}

template <typename Scalar>
class DiffDriveParams {
 public:
  DiffDriveParams(Scalar wheel_radius, Scalar track_width) : r_(wheel_radius), d_(track_width) {
    if (!(r_ > 0) || !(d_ > 0)) {
      throw Error(ErrorKind::invalid_argument, "differential drive needs positive wheel radius and track width");
    }
  }
  Scalar wheel_radius() const noexcept { return r_; }
  Scalar track_width() const noexcept { return d_; }

 private:
  Scalar r_;
  Scalar d_;
};

/// Standard X-configuration, 45 degree rollers.
template <typename Scalar>
class MecanumParams {
 public:
  MecanumParams(Scalar wheel_radius, Scalar half_length, Scalar half_width)
      : r_(wheel_radius), lx_(half_length), ly_(half_width) {
    if (!(r_ > 0) || !(lx_ > 0) || !(ly_ > 0)) {
      throw Error(ErrorKind::invalid_argument, "mecanum base needs positive radius, half length and half width");
    }
  }
  Scalar wheel_radius() const noexcept { return r_; }
  Scalar half_length() const noexcept { return lx_; }
  Scalar half_width() const noexcept { return ly_; }
  Scalar lever() const noexcept { return lx_ + ly_; }

 private:
  Scalar r_;
  Scalar lx_;
  Scalar ly_;
};

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 2> diffdrive_jacobian(const DiffDriveParams<Scalar>& p) {
  const Scalar r = p.wheel_radius();
  const Scalar d = p.track_width();
  Eigen::Matrix<Scalar, 3, 2> j;
  j << r / 2, r / 2,
       0, 0,
      -r / d, r / d;
  return j;
}

template <typename Scalar>
Twist2<Scalar> diffdrive_fk(const DiffWheels<Scalar>& wheels, const DiffDriveParams<Scalar>& p) {
  const Scalar r = p.wheel_radius();
  return {r * (wheels(0) + wheels(1)) / 2, Scalar(0), r * (wheels(1) - wheels(0)) / p.track_width()};
}

/// Throws NonholonomicViolation when the twist asks for sideways motion.
template <typename Scalar>
DiffWheels<Scalar> diffdrive_ik(const Twist2<Scalar>& t, const DiffDriveParams<Scalar>& p) {
  using std::abs;
  if (abs(t.vy) > Scalar(1e-9)) {
    throw Error(ErrorKind::nonholonomic_violation, "differential drive cannot move sideways");
  }
  const Scalar half = t.wz * p.track_width() / 2;
  return {(t.vx - half) / p.wheel_radius(), (t.vx + half) / p.wheel_radius()};
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 4> mecanum_jacobian(const MecanumParams<Scalar>& p) {
  const Scalar q = p.wheel_radius() / 4;
  const Scalar k = p.lever();
  Eigen::Matrix<Scalar, 3, 4> j;
  j << q, q, q, q,
      -q, q, q, -q,
      -q / k, q / k, -q / k, q / k;
  return j;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 3> mecanum_inverse_jacobian(const MecanumParams<Scalar>& p) {
  const Scalar ir = Scalar(1) / p.wheel_radius();
  const Scalar k = p.lever();
  Eigen::Matrix<Scalar, 4, 3> j;
  j << ir, -ir, -k * ir,
       ir, ir, k * ir,
       ir, ir, -k * ir,
       ir, -ir, k * ir;
  return j;
}

template <typename Scalar>
Twist2<Scalar> mecanum_fk(const MecanumWheels<Scalar>& w, const MecanumParams<Scalar>& p) {
  const Scalar r = p.wheel_radius();
  return {r * (w(0) + w(1) + w(2) + w(3)) / 4, r * (-w(0) + w(1) + w(2) - w(3)) / 4,
          r * (-w(0) + w(1) - w(2) + w(3)) / (4 * p.lever())};
}

template <typename Scalar>
MecanumWheels<Scalar> mecanum_ik(const Twist2<Scalar>& t, const MecanumParams<Scalar>& p) {
  const Scalar r = p.wheel_radius();
  const Scalar kw = p.lever() * t.wz;
  return {(t.vx - t.vy - kw) / r, (t.vx + t.vy + kw) / r, (t.vx + t.vy - kw) / r, (t.vx - t.vy + kw) / r};
}

/// Exact SE(2) exponential of a constant body twist held for `dt` seconds.
template <typename Scalar>
Pose2<Scalar> integrate_pose(const Pose2<Scalar>& pose, const Twist2<Scalar>& t, Scalar dt) {
  using std::abs;
  using std::cos;
  using std::sin;
  if (!(dt > 0)) throw Error(ErrorKind::invalid_argument, "integration step must be positive");
  const Scalar angle = t.wz * dt;
  Scalar along;   // integral of cos(theta(s)) ds
  Scalar across;  // integral of sin(theta(s)) ds
  if (abs(t.wz) < Scalar(1e-9)) {
    along = cos(pose.theta) * dt;
    across = sin(pose.theta) * dt;
  } else {
    // Half-angle form avoids cancellation as wz -> 0.
    const Scalar chord = Scalar(2) * sin(angle / 2) / t.wz;
    const Scalar mid = pose.theta + angle / 2;
    along = cos(mid) * chord;
    across = sin(mid) * chord;
  }
  return {pose.x + t.vx * along - t.vy * across, pose.y + t.vx * across + t.vy * along,
          normalize_angle(pose.theta + angle)};
}

/// Forward Euler step, kept for classroom comparison against the exact flow.
template <typename Scalar>
Pose2<Scalar> integrate_pose_euler(const Pose2<Scalar>& pose, const Twist2<Scalar>& t, Scalar dt) {
  using std::cos;
  using std::sin;
  if (!(dt > 0)) throw Error(ErrorKind::invalid_argument, "integration step must be positive");
  const Scalar c = cos(pose.theta);
  const Scalar s = sin(pose.theta);
  return {pose.x + (t.vx * c - t.vy * s) * dt, pose.y + (t.vx * s + t.vy * c) * dt,
          normalize_angle(pose.theta + t.wz * dt)};
}

enum class Integrator { exact, euler };

template <typename Scalar>
Pose2<Scalar> integrate_pose(const Pose2<Scalar>& pose, const Twist2<Scalar>& t, Scalar dt, Integrator method) {
  return method == Integrator::exact ? integrate_pose(pose, t, dt) : integrate_pose_euler(pose, t, dt);
}

}  // namespace rems
