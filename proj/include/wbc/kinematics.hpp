#pragma once

// Forward kinematics and differential kinematics for the base+arm chain.
//
// Generalized coordinates are [d, phi, q_arm...]: the travel column of every
// Jacobian points along the current heading and the heading column is a
// rotation about the vertical axis through the chassis center, so the base
// contributes exactly the unicycle twist.

#include <wbc/core.hpp>
#include <wbc/robot_model.hpp>

namespace wbc {

/// World-frame transforms of every frame in the chain, computed in one pass.
struct FrameSet {
  Transform base;                    // chassis frame
  Transform mount;                   // arm mount frame
  std::vector<Transform> links;      // arm link frames (after each joint)
  std::vector<Vec3> joint_origins;   // world joint positions
  std::vector<Vec3> joint_axes;      // world joint axes (unit)
  Transform ee;                      // end-effector frame
};

inline Transform base_transform(const JointConfig& q) {
  Transform t = rotation_z(q.base_heading);
  t.translation = Vec3(q.base_x, q.base_y, 0.0);
  return t;
}

inline FrameSet compute_frames(const RobotModel& model, const JointConfig& q) {
  if (q.arm_dof() != model.arm_dof())
    throw std::invalid_argument("compute_frames: arm dof mismatch");
  FrameSet fs;
  fs.base = base_transform(q);
  fs.mount = fs.base * model.mount;
  const int n = model.arm_dof();
  fs.links.reserve(n);
  fs.joint_origins.reserve(n);
  fs.joint_axes.reserve(n);
  Transform f = fs.mount;
  for (int j = 0; j < n; ++j) {
    f = f * model.joints[j].origin;
    fs.joint_origins.push_back(f.translation);
    fs.joint_axes.push_back(f.rotation * model.joints[j].axis);
    Transform rot;
    rot.rotation =
        Eigen::AngleAxisd(q.arm(j), model.joints[j].axis).toRotationMatrix();
    f = f * rot;
    fs.links.push_back(f);
  }
  fs.ee = f * model.tool;
  return fs;
}

inline Transform forward_kinematics(const RobotModel& model, const JointConfig& q) {
  return compute_frames(model, q).ee;
}

/// 6 x n Jacobian of the end-effector spatial velocity (linear rows first)
/// with respect to the stacked generalized velocity.
inline MatX extended_jacobian(const RobotModel& model, const JointConfig& q) {
  const FrameSet fs = compute_frames(model, q);
  const int n = model.dof();
  MatX j = MatX::Zero(kTaskDim, n);
  const Vec3 p_ee = fs.ee.translation;
  // Travel: pure translation along the heading.
  j.block<3, 1>(0, 0) = Vec3(std::cos(q.base_heading), std::sin(q.base_heading), 0.0);
  // Heading: rotation about the vertical axis through the chassis center.
  const Vec3 z = Vec3::UnitZ();
  j.block<3, 1>(0, 1) = z.cross(p_ee - fs.base.translation);
  j.block<3, 1>(3, 1) = z;
  for (int k = 0; k < model.arm_dof(); ++k) {
    const Vec3& a = fs.joint_axes[k];
    j.block<3, 1>(0, kBaseDof + k) = a.cross(p_ee - fs.joint_origins[k]);
    j.block<3, 1>(3, kBaseDof + k) = a;
  }
  return j;
}

/// 3 x (2 + arm_link + 1) Jacobian of a point rigidly attached to an arm
/// link (local coordinates in that link's frame). Columns cover the base
/// joints and arm joints up to and including arm_link; joints further down
/// the chain cannot move the point.
inline MatX point_jacobian(const RobotModel& model, const JointConfig& q,
                           int arm_link, const Vec3& local_point) {
  if (arm_link < 0 || arm_link >= model.arm_dof())
    throw std::invalid_argument("point_jacobian: link out of range");
  const FrameSet fs = compute_frames(model, q);
  const Vec3 p = fs.links[arm_link].apply(local_point);
  const int cols = kBaseDof + arm_link + 1;
  MatX j = MatX::Zero(3, cols);
  j.col(0) = Vec3(std::cos(q.base_heading), std::sin(q.base_heading), 0.0);
  j.col(1) = Vec3::UnitZ().cross(p - fs.base.translation);
  for (int k = 0; k <= arm_link; ++k)
    j.col(kBaseDof + k) = fs.joint_axes[k].cross(p - fs.joint_origins[k]);
  return j;
}

/// World-frame position of a point attached to an arm link.
inline Vec3 link_point(const RobotModel& model, const JointConfig& q,
                       int arm_link, const Vec3& local_point) {
  return compute_frames(model, q).links.at(arm_link).apply(local_point);
}

/// Task-space error from current to goal pose: translation difference and
/// the rotation log of goal * current^-1, stacked linear-first. Commanding
/// the spatial velocity equal to this error decays both parts to zero.
inline Vec6 pose_error(const Transform& current, const Transform& goal) {
  Vec6 e;
  e.head<3>() = goal.translation - current.translation;
  e.tail<3>() = rotation_log(goal.rotation * current.rotation.transpose());
  return e;
}

/// Arm-only spatial Jacobian (6 x n_m) with world-frame axes. Used for the
/// manipulability measure, which is invariant to the frame choice.
inline MatX arm_jacobian(const RobotModel&, const FrameSet& fs) {
  const int n = static_cast<int>(fs.joint_axes.size());
  MatX j(kTaskDim, n);
  const Vec3 p_ee = fs.ee.translation;
  for (int k = 0; k < n; ++k) {
    const Vec3& a = fs.joint_axes[k];
    j.block<3, 1>(0, k) = a.cross(p_ee - fs.joint_origins[k]);
    j.block<3, 1>(3, k) = a;
  }
  return j;
}

/// Yoshikawa manipulability of the arm sub-chain: sqrt(det(J J^T)).
inline double manipulability(const RobotModel& model, const JointConfig& q) {
  const FrameSet fs = compute_frames(model, q);
  const MatX j = arm_jacobian(model, fs);
  const double det = (j * j.transpose()).determinant();
  return det > 0.0 ? std::sqrt(det) : 0.0;
}

struct ManipulabilityGradient {
  VecX gradient;   // length n_m, d m / d q_arm
  double value = 0.0;
  bool singular = false;
};

/// Analytic gradient of the manipulability measure with respect to the arm
/// joints, via the chain's geometric Hessian:
///   d a_j / d q_i = a_i x a_j             (i < j)
///   d p_j / d q_i = a_i x (p_j - p_i)     (i < j)
/// and d m / d q_i = m * tr((J J^T)^-1 dJ_i J^T).
/// Near a singular arm configuration the gradient is returned as zero with
/// the singular flag set.
inline ManipulabilityGradient manipulability_gradient(const RobotModel& model,
                                                      const JointConfig& q) {
  const FrameSet fs = compute_frames(model, q);
  const MatX j = arm_jacobian(model, fs);
  const int n = model.arm_dof();
  ManipulabilityGradient out;
  out.gradient = VecX::Zero(n);
  const MatX a = j * j.transpose();
  const double det = a.determinant();
  if (!(det > 1e-12)) {
    out.singular = true;
    return out;
  }
  out.value = std::sqrt(det);
  const MatX a_inv = a.inverse();
  const Vec3 p_ee = fs.ee.translation;
  for (int i = 0; i < n; ++i) {
    const Vec3& ai = fs.joint_axes[i];
    const Vec3& pi = fs.joint_origins[i];
    const Vec3 dp_ee = ai.cross(p_ee - pi);
    MatX dj = MatX::Zero(kTaskDim, n);
    for (int k = 0; k < n; ++k) {
      const Vec3& ak = fs.joint_axes[k];
      Vec3 da = Vec3::Zero();
      Vec3 dp = Vec3::Zero();
      if (k > i) {
        da = ai.cross(ak);
        dp = ai.cross(fs.joint_origins[k] - pi);
      }
      dj.block<3, 1>(0, k) = da.cross(p_ee - fs.joint_origins[k]) + ak.cross(dp_ee - dp);
      dj.block<3, 1>(3, k) = da;
    }
    out.gradient(i) = out.value * (a_inv * (dj * j.transpose())).trace();
  }
  return out;
}

}  // namespace wbc
