#pragma once

// Signed clearances between the robot and spherical obstacles, with the
// closest-point data the constraint builders need. The base is a planar
// disc; arm links are capsules; the arm clearance is smoothed with a
// softmin while the closest point itself comes from the hard minimum.

#include <wbc/kinematics.hpp>
#include <wbc/obstacles.hpp>

namespace wbc {

enum class BodyPart { Base, Arm };

/// Clearance between one robot body set and one obstacle.
/// normal is the unit vector from the obstacle toward the robot, i.e. the
/// gradient of the clearance with respect to the robot's closest point.
struct DistanceReport {
  double value = kInf;      // smoothed clearance b (softmin for the arm)
  double hard_min = kInf;   // unsmoothed minimum candidate
  Vec3 robot_point = Vec3::Zero();  // witness point on the robot surface
  Vec3 normal = Vec3::UnitX();
  BodyPart part = BodyPart::Base;
  int arm_link = -1;       // closest capsule's arm joint index (arm case)
  int capsule_index = -1;  // index into model.capsules (arm case)
  Vec3 local_point = Vec3::Zero();  // robot_point in the link frame (arm case)
  std::vector<double> raw_candidates;  // per-capsule clearances (arm case)
  bool degenerate = false;
  bool penetrating = false;
  std::string obstacle_id;
};

/// Closest point on segment [a, b] to point p.
inline Vec3 closest_point_on_segment(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

/// Planar clearance between the base disc and an obstacle (z dropped).
inline DistanceReport base_distance(const RobotModel& model, const JointConfig& q,
                                    const ObstacleState& ob) {
  DistanceReport r;
  r.part = BodyPart::Base;
  r.obstacle_id = ob.id;
  const Vec2 center(q.base_x, q.base_y);
  const Vec2 ob_xy(ob.position.x(), ob.position.y());
  const Vec2 diff = center - ob_xy;
  const double dist = diff.norm();
  r.value = dist - model.base_disc_radius - ob.radius;
  r.hard_min = r.value;
  r.raw_candidates = {r.value};
  if (dist < 1e-12) {
    r.degenerate = true;
    r.penetrating = true;
    r.normal = Vec3::UnitX();
    r.robot_point = Vec3(center.x(), center.y(), 0.0);
    return r;
  }
  const Vec2 n = diff / dist;
  r.normal = Vec3(n.x(), n.y(), 0.0);
  r.robot_point = Vec3(center.x() - model.base_disc_radius * n.x(),
                       center.y() - model.base_disc_radius * n.y(), 0.0);
  r.penetrating = r.value < 0.0;
  return r;
}

/// Whole-arm clearance: per-capsule surface distance to the obstacle sphere,
/// softmin over capsules; closest point, link and normal from the hard-min
/// capsule.
inline DistanceReport arm_distance(const RobotModel& model, const JointConfig& q,
                                   const ObstacleState& ob, double softmin_k) {
  if (!(softmin_k > 0.0)) throw std::invalid_argument("arm_distance: softmin_k <= 0");
  if (model.capsules.empty()) throw std::invalid_argument("arm_distance: no capsules");
  const FrameSet fs = compute_frames(model, q);
  DistanceReport r;
  r.part = BodyPart::Arm;
  r.obstacle_id = ob.id;
  r.raw_candidates.reserve(model.capsules.size());
  Vec3 best_seg_point = Vec3::Zero();
  for (size_t ci = 0; ci < model.capsules.size(); ++ci) {
    const LinkCapsule& c = model.capsules[ci];
    const Transform& link = fs.links[c.arm_link];
    const Vec3 a = link.apply(c.p0);
    const Vec3 b = link.apply(c.p1);
    const Vec3 s = closest_point_on_segment(a, b, ob.position);
    const double center_dist = (s - ob.position).norm();
    const double clearance = center_dist - c.radius - ob.radius;
    r.raw_candidates.push_back(clearance);
    if (clearance < r.hard_min) {
      r.hard_min = clearance;
      r.capsule_index = static_cast<int>(ci);
      r.arm_link = c.arm_link;
      best_seg_point = s;
    }
  }
  r.value = softmin(r.raw_candidates, softmin_k);
  const LinkCapsule& c = model.capsules[r.capsule_index];
  const Vec3 delta = best_seg_point - ob.position;
  const double center_dist = delta.norm();
  if (center_dist < 1e-12) {
    r.degenerate = true;
    r.normal = Vec3::UnitX();
    r.robot_point = best_seg_point;
  } else {
    r.normal = delta / center_dist;
    r.robot_point = best_seg_point - c.radius * r.normal;
  }
  r.local_point = fs.links[r.arm_link].inverse().apply(r.robot_point);
  r.penetrating = r.hard_min < 0.0;
  return r;
}

/// Drift of the clearance due to obstacle motion: the clearance gradient with
/// respect to the obstacle center is -normal, so an approaching obstacle
/// gives a negative drift (tightening the barrier condition).
inline double dcbf_drift(const DistanceReport& report, const ObstacleState& ob) {
  if (report.degenerate) return 0.0;
  return -report.normal.dot(ob.velocity);
}

/// Proximity gate: the obstacle generates constraints only while
/// b <= min(k_ot, k_ro * relative_speed), where relative_speed is the speed
/// of the reported closest robot point relative to the obstacle.
inline bool operating_set_test(const DistanceReport& report, double relative_speed,
                               double k_ot, double k_ro) {
  if (!(k_ot > 0.0) || !(k_ro > 0.0))
    throw std::invalid_argument("operating_set_test: thresholds must be positive");
  return report.value <= std::min(k_ot, k_ro * relative_speed);
}

/// World-frame velocity of the reported closest robot point under a
/// generalized velocity (used for the operating-set relative speed).
inline Vec3 report_point_velocity(const RobotModel& model, const JointConfig& q,
                                  const DistanceReport& report, const VecX& qdot) {
  if (qdot.size() != model.dof())
    throw std::invalid_argument("report_point_velocity: qdot length mismatch");
  if (report.part == BodyPart::Base) {
    const Vec3 h(std::cos(q.base_heading), std::sin(q.base_heading), 0.0);
    const Vec3 rel = report.robot_point - Vec3(q.base_x, q.base_y, 0.0);
    return qdot(0) * h + qdot(1) * Vec3::UnitZ().cross(rel);
  }
  const MatX j = point_jacobian(model, q, report.arm_link, report.local_point);
  return j * qdot.head(j.cols());
}

}  // namespace wbc
