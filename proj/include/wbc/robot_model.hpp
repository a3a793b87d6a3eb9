#pragma once

// Robot description: a differential-drive base disc carrying a serial
// revolute arm. Geometry, joint limits and collision capsules live here;
// all kinematic computation is in kinematics.hpp.

#include <wbc/core.hpp>

#include <string>
#include <vector>

namespace wbc {

/// One revolute arm joint: fixed origin transform from the parent link frame,
/// rotation axis in the local frame, position and speed limits.
struct ArmJoint {
  Transform origin;
  Vec3 axis = Vec3::UnitZ();
  double pos_lower = -kInf;
  double pos_upper = kInf;
  double vel_limit = kInf;
};

/// Collision capsule attached to an arm link, expressed in that link's frame.
/// arm_link is the 0-based arm joint index the capsule moves with.
/// p0 == p1 degenerates to a sphere.
struct LinkCapsule {
  int arm_link = 0;
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.0;
};

struct RobotModel {
  std::string name;

  // Base: a vertical disc of base_disc_radius around the chassis center.
  double base_disc_radius = 0.3;
  double base_linear_vel_max = 1.0;    // |d_dot| bound
  double base_angular_vel_max = 1.5;   // |phi_dot| bound
  Vec2 travel_limits = Vec2(-1e3, 1e3);
  Vec2 heading_limits = Vec2(-1e3, 1e3);

  Transform mount;  // chassis frame -> arm mount frame
  Transform tool;   // last link frame -> end effector frame

  std::vector<ArmJoint> joints;
  std::vector<LinkCapsule> capsules;

  // Horizontal end-effector reach bound, measured from the chassis center.
  double max_reach = 0.85;

  int arm_dof() const { return static_cast<int>(joints.size()); }
  int dof() const { return kBaseDof + arm_dof(); }

  /// Limits indexed by generalized coordinate (0 = travel, 1 = heading).
  double position_lower(int i) const {
    if (i == 0) return travel_limits(0);
    if (i == 1) return heading_limits(0);
    return joints.at(i - kBaseDof).pos_lower;
  }
  double position_upper(int i) const {
    if (i == 0) return travel_limits(1);
    if (i == 1) return heading_limits(1);
    return joints.at(i - kBaseDof).pos_upper;
  }
  double velocity_limit(int i) const {
    if (i == 0) return base_linear_vel_max;
    if (i == 1) return base_angular_vel_max;
    return joints.at(i - kBaseDof).vel_limit;
  }

  void validate() const {
    if (joints.empty()) throw std::invalid_argument("RobotModel: no arm joints");
    if (base_disc_radius <= 0.0)
      throw std::invalid_argument("RobotModel: base_disc_radius <= 0");
    if (base_linear_vel_max <= 0.0 || base_angular_vel_max <= 0.0)
      throw std::invalid_argument("RobotModel: base velocity limit <= 0");
    if (max_reach <= 0.0) throw std::invalid_argument("RobotModel: max_reach <= 0");
    if (!mount.is_orthonormal(1e-9) || !tool.is_orthonormal(1e-9))
      throw std::invalid_argument("RobotModel: mount/tool rotation not orthonormal");
    for (const auto& j : joints) {
      if (!j.origin.is_orthonormal(1e-9))
        throw std::invalid_argument("RobotModel: joint origin rotation not orthonormal");
      if (std::abs(j.axis.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("RobotModel: joint axis not unit length");
      if (!(j.pos_lower < j.pos_upper))
        throw std::invalid_argument("RobotModel: joint position limits inverted");
      if (!(j.vel_limit > 0.0))
        throw std::invalid_argument("RobotModel: joint velocity limit <= 0");
    }
    for (const auto& c : capsules) {
      if (c.arm_link < 0 || c.arm_link >= arm_dof())
        throw std::invalid_argument("RobotModel: capsule link out of range");
      if (c.radius <= 0.0) throw std::invalid_argument("RobotModel: capsule radius <= 0");
    }
  }

  /// Built-in platform: a 7-dof arm (Panda-style geometry) on a disc base.
  static RobotModel builtin_panda_base() {
    RobotModel m;
    m.name = "panda_disc_base";
    m.base_disc_radius = 0.30;
    m.base_linear_vel_max = 1.0;
    m.base_angular_vel_max = 1.5;
    m.mount = translation(Vec3(0.17, 0.0, 0.39));
    m.tool = translation(Vec3(0.0, 0.0, 0.107));
    m.max_reach = 0.85;

    auto joint = [](const Vec3& xyz, double roll, double lo, double hi, double vel) {
      ArmJoint j;
      j.origin.rotation = rotation_x(roll).rotation;
      j.origin.translation = xyz;
      j.axis = Vec3::UnitZ();
      j.pos_lower = lo;
      j.pos_upper = hi;
      j.vel_limit = vel;
      return j;
    };
    m.joints = {
        joint({0.0, 0.0, 0.333}, 0.0, -2.8973, 2.8973, 2.1750),
        joint({0.0, 0.0, 0.0}, -M_PI_2, -1.7628, 1.7628, 2.1750),
        joint({0.0, -0.316, 0.0}, M_PI_2, -2.8973, 2.8973, 2.1750),
        joint({0.0825, 0.0, 0.0}, M_PI_2, -3.0718, -0.0698, 2.1750),
        joint({-0.0825, 0.384, 0.0}, -M_PI_2, -2.8973, 2.8973, 2.6100),
        joint({0.0, 0.0, 0.0}, M_PI_2, -0.0175, 3.7525, 2.6100),
        joint({0.088, 0.0, 0.0}, M_PI_2, -2.8973, 2.8973, 2.6100),
    };

    // The fixed shoulder column (planar footprint: 0.17 m offset + 0.09 m
    // radius = 0.26 m, inside the 0.30 m disc) carries no capsule: the
    // planar base barrier already dominates any 3D distance to it, and a
    // witness point there cannot move independently of the chassis.
    m.capsules = {
        {1, {0.0, 0.0, 0.0}, {0.0, -0.316, 0.0}, 0.09},  // upper arm
        {2, {0.0, 0.0, 0.0}, {0.0825, 0.0, 0.0}, 0.08},  // elbow
        {3, {0.0, 0.0, 0.0}, {-0.0825, 0.384, 0.0}, 0.075},  // forearm
        {4, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.075},    // wrist ball
        {5, {0.0, 0.0, 0.0}, {0.088, 0.0, 0.0}, 0.07},   // wrist flange
        {6, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.16}, 0.07},    // hand + tool
    };
    return m;
  }
};

}  // namespace wbc
