#pragma once

// Shared scalar/linear-algebra helpers and the joint configuration type used
// across the library. The robot is a planar mobile base with two virtual
// joints (forward travel d, heading phi) followed by an n_m revolute arm, so
// the stacked generalized velocity is [d_dot, phi_dot, qdot_arm...].

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wbc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;

inline constexpr int kBaseDof = 2;    // virtual joints: travel d, heading phi
inline constexpr int kTaskDim = 6;    // spatial velocity / slack dimension
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * M_PI;
  a = std::fmod(a + M_PI, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - M_PI;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

/// Rigid transform with a rotation matrix and a translation vector.
struct Transform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Transform identity() { return {}; }

  Transform operator*(const Transform& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Transform inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  /// True when the rotation block is orthonormal with determinant +1.
  bool is_orthonormal(double tol = 1e-9) const {
    const Mat3 e = rotation.transpose() * rotation - Mat3::Identity();
    return e.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

inline Transform rotation_x(double a) {
  Transform t;
  t.rotation = Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix();
  return t;
}

inline Transform rotation_y(double a) {
  Transform t;
  t.rotation = Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix();
  return t;
}

inline Transform rotation_z(double a) {
  Transform t;
  t.rotation = Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
  return t;
}

inline Transform translation(const Vec3& p) {
  Transform t;
  t.translation = p;
  return t;
}

/// Rotation from roll-pitch-yaw (extrinsic x-y-z, i.e. Rz(yaw)*Ry(pitch)*Rx(roll)).
inline Mat3 rpy_to_rotation(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
          Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

/// Logarithm of a rotation matrix as an angle-scaled axis vector.
/// Stable for small angles and for angles near pi.
inline Vec3 rotation_log(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double angle = std::acos(c);
  Vec3 v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (angle < 1e-9) return 0.5 * v;  // first-order expansion
  if (angle < M_PI - 1e-6) return (angle / (2.0 * std::sin(angle))) * v;
  // Near pi the off-diagonal difference vanishes; recover the axis from the
  // dominant diagonal entry of R + I.
  const Mat3 s = r + Mat3::Identity();
  int k = 0;
  s.diagonal().maxCoeff(&k);
  Vec3 axis = s.col(k) / std::sqrt(2.0 * s(k, k));
  // Fix the sign so the axis agrees with the (possibly tiny) skew part.
  if (axis.dot(v) < 0.0) axis = -axis;
  return angle * axis;
}

/// Generalized configuration: world base pose plus arm joint angles.
///
/// The virtual travel joint d accumulates signed forward motion; the world
/// position (base_x, base_y) is carried alongside because d alone does not
/// determine it for a unicycle.
struct JointConfig {
  double base_x = 0.0;
  double base_y = 0.0;
  double base_heading = 0.0;
  double base_travel = 0.0;
  VecX arm;

  int arm_dof() const { return static_cast<int>(arm.size()); }
  int dof() const { return kBaseDof + arm_dof(); }

  /// Stacked generalized coordinates [d, phi, q_arm...]; length equals dof().
  VecX stacked() const {
    VecX q(dof());
    q(0) = base_travel;
    q(1) = base_heading;
    q.tail(arm_dof()) = arm;
    return q;
  }

  /// Perturbs one generalized coordinate by h, keeping the unicycle model
  /// consistent: travel moves the world position along the current heading.
  JointConfig perturbed(int joint, double h) const {
    JointConfig out = *this;
    if (joint == 0) {
      out.base_travel += h;
      out.base_x += h * std::cos(base_heading);
      out.base_y += h * std::sin(base_heading);
    } else if (joint == 1) {
      out.base_heading += h;
    } else {
      out.arm(joint - kBaseDof) += h;
    }
    return out;
  }

  /// Integrates a generalized velocity for dt (explicit Euler).
  JointConfig integrated(const VecX& qdot, double dt) const {
    if (qdot.size() != dof())
      throw std::invalid_argument("integrated: velocity length mismatch");
    JointConfig out = *this;
    out.base_travel += qdot(0) * dt;
    out.base_x += qdot(0) * dt * std::cos(base_heading);
    out.base_y += qdot(0) * dt * std::sin(base_heading);
    out.base_heading += qdot(1) * dt;
    out.arm += qdot.tail(arm_dof()) * dt;
    return out;
  }

  bool finite() const {
    return std::isfinite(base_x) && std::isfinite(base_y) &&
           std::isfinite(base_heading) && std::isfinite(base_travel) &&
           arm.allFinite();
  }

  void validate() const {
    if (!finite()) throw std::invalid_argument("JointConfig: non-finite entry");
  }
};

/// Spatial velocity with linear components first, angular second.
struct SpatialVelocity {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 v;
    v << linear, angular;
    return v;
  }

  static SpatialVelocity from_stacked(const Vec6& v) {
    return {v.head<3>(), v.tail<3>()};
  }
};

/// Smooth lower approximation of the minimum of a set of values:
/// softmin <= min, and min - softmin <= ln(count)/sharpness.
inline double softmin(const std::vector<double>& values, double sharpness) {
  if (values.empty()) throw std::invalid_argument("softmin: empty input");
  if (sharpness <= 0.0) throw std::invalid_argument("softmin: sharpness <= 0");
  const double m = *std::min_element(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += std::exp(-sharpness * (v - m));
  return m - std::log(acc) / sharpness;
}

}  // namespace wbc
