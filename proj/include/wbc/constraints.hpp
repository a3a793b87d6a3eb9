#pragma once

// Safety constraint rows over the decision variable u = [qdot; slack]:
// clearance barriers (base and arm), the cyclic-inequality dodge rows with
// their tangent-direction sub-optimization, joint-bound barriers and the
// max-reach barrier, plus the per-cycle assembly loop.

#include <wbc/distance.hpp>

#include <map>
#include <optional>
#include <span>

namespace wbc {

enum class RowKind { Equality, Inequality };  // inequality means coeffs*u <= bound

enum class RowTag {
  VelocityExpectation,
  BaseDcbf,
  BaseAci,
  ArmDcbf,
  ArmAci,
  JointBound,
  MaxReach,
};

inline const char* row_tag_name(RowTag t) {
  switch (t) {
    case RowTag::VelocityExpectation: return "velocity-expectation";
    case RowTag::BaseDcbf: return "base-dcbf";
    case RowTag::BaseAci: return "base-aci";
    case RowTag::ArmDcbf: return "arm-dcbf";
    case RowTag::ArmAci: return "arm-aci";
    case RowTag::JointBound: return "joint-bound";
    case RowTag::MaxReach: return "max-reach";
  }
  return "?";
}

struct ConstraintRow {
  VecX coeffs;  // length n + 6; the 6 slack columns are zero for safety rows
  double bound = 0.0;
  RowKind kind = RowKind::Inequality;
  RowTag tag = RowTag::BaseDcbf;
  std::string obstacle_id;
  int joint = -1;  // joint-bound rows: which generalized coordinate
};

/// Result of one tangent-direction sub-optimization.
struct AciResult {
  Vec3 direction = Vec3::UnitX();  // l*, unit, tangent to the clearance normal
  double objective = 0.0;
  int candidate_count = 0;
  BodyPart part = BodyPart::Base;
  std::string obstacle_id;
  int turn_sign = 0;  // base only: +1 counterclockwise of heading, -1 clockwise
};

struct SafetyParams {
  double k_ot = 0.6;   // proximity gate cap (m)
  double k_ro = 0.7;   // proximity gate speed factor (s)
  double alpha_gain = 1.0;  // class-K gain on clearance barriers
  double d_b = 0.25;   // base dodge activation distance (m)
  double d_m = 0.25;   // arm dodge activation distance (m)
  double cap_m = 0.5;  // arm dodge speed cap D_m (m/s)
  double k_b1 = 1.0, k_b2 = 0.3, k_b3 = 0.5;  // base tangent objective gains
  double k_m1 = 1.0, k_m2 = 0.3, k_m3 = 1.0;  // arm tangent objective gains
  double gamma_jb = 0.1;  // joint-bound barrier decay
  double gamma_mr = 0.1;  // max-reach barrier decay
  int tangent_samples = 36;
  double softmin_sharpness = 50.0;
  // Minimum |Jp^T l*| for an arm dodge row to be emitted. Below this the
  // chosen tangent is essentially unactuatable at the witness point (e.g.
  // a point near the shoulder axes) and the linearized demand degenerates
  // into an arbitrarily large joint-rate request; zero disables the gate.
  double aci_gain_floor = 0.2;

  void validate() const {
    const double positives[] = {k_ot, k_ro, alpha_gain, d_b, d_m, cap_m,
                                k_b1, k_b2, k_b3, k_m1, k_m2, k_m3,
                                gamma_jb, gamma_mr, softmin_sharpness};
    for (double v : positives)
      if (!(v > 0.0)) throw std::invalid_argument("SafetyParams: nonpositive gain");
    if (!(aci_gain_floor >= 0.0))
      throw std::invalid_argument("SafetyParams: negative aci_gain_floor");
    if (tangent_samples < 8)
      throw std::invalid_argument("SafetyParams: tangent_samples < 8");
  }
};

inline VecX zero_row(const RobotModel& model) {
  return VecX::Zero(model.dof() + kTaskDim);
}

/// Barrier row keeping the base disc clear of one obstacle:
/// -(d b / d qdot) u <= drift + alpha * b. Returns nullopt on a degenerate
/// report (coincident centers), where no gradient direction exists.
inline std::optional<ConstraintRow> base_dcbf_row(const RobotModel& model,
                                                  const JointConfig& q,
                                                  const DistanceReport& report,
                                                  const ObstacleState& ob,
                                                  const SafetyParams& params) {
  if (report.degenerate) return std::nullopt;
  ConstraintRow row;
  row.coeffs = zero_row(model);
  const Vec2 h(std::cos(q.base_heading), std::sin(q.base_heading));
  const Vec2 n(report.normal.x(), report.normal.y());
  row.coeffs(0) = -n.dot(h);  // travel moves the disc along the heading
  row.bound = dcbf_drift(report, ob) + params.alpha_gain * report.value;
  row.tag = RowTag::BaseDcbf;
  row.obstacle_id = ob.id;
  return row;
}

namespace detail {
inline int ccw_sign(const Vec2& heading, const Vec2& l) {
  const double cross = heading.x() * l.y() - heading.y() * l.x();
  return cross < 0.0 ? -1 : 1;  // ties count as counterclockwise
}
}  // namespace detail

/// Chooses the base dodge tangent: evaluates the objective on both planar
/// tangents of the clearance normal and returns the minimizer.
///   M(l) = -k_b1 * (db/dphi) * s(l) - k_b2 * sum(l . prior) + k_b3 * |v_ob . l|
/// where db/dphi is the heading sensitivity of the travel clearance rate
/// (n . d/dphi(cos phi, sin phi)) and s(l) classifies l as counterclockwise
/// (+1) or clockwise (-1) of the current heading. Ties prefer the
/// counterclockwise candidate.
inline AciResult base_aci_direction(const JointConfig& q, const DistanceReport& report,
                                    const ObstacleState& ob,
                                    std::span<const Vec3> prior_tangents,
                                    const SafetyParams& params) {
  const Vec2 n(report.normal.x(), report.normal.y());
  const Vec2 h(std::cos(q.base_heading), std::sin(q.base_heading));
  const Vec2 h_perp(-h.y(), h.x());
  const double db_dphi = n.dot(h_perp);
  const Vec2 candidates[2] = {Vec2(-n.y(), n.x()), Vec2(n.y(), -n.x())};
  AciResult best;
  best.part = BodyPart::Base;
  best.obstacle_id = ob.id;
  best.candidate_count = 2;
  double best_m = kInf;
  for (const Vec2& l : candidates) {
    const int s = detail::ccw_sign(h, l);
    double m = -params.k_b1 * db_dphi * s;
    for (const Vec3& prior : prior_tangents)
      m -= params.k_b2 * (l.x() * prior.x() + l.y() * prior.y());
    m += params.k_b3 * std::abs(ob.velocity.x() * l.x() + ob.velocity.y() * l.y());
    const bool better =
        m < best_m - 1e-12 || (std::abs(m - best_m) <= 1e-12 && s > best.turn_sign);
    if (better) {
      best_m = m;
      best.direction = Vec3(l.x(), l.y(), 0.0);
      best.turn_sign = s;
      best.objective = m;
    }
  }
  return best;
}

/// Dodge row for the base. The tangent demand l* . v >= psi_b cannot be met
/// by the travel rate alone when the heading is nearly aligned with the
/// clearance normal (exactly the stall geometry), and binding it to travel
/// would contradict the barrier row; the row therefore drives the heading
/// rate, turning the base toward the dodge side:
///   -(l* . heading) * phidot <= -psi_b,
///   psi_b = min(d_b - b, |qdot_0_max * cos tau|), cos tau = l* . heading.
/// The speed cap keeps the required |phidot| at or below qdot_0_max, so the
/// row is always satisfiable within the base rate limits.
inline ConstraintRow base_aci_row(const RobotModel& model, const JointConfig& q,
                                  const Vec3& l_star, const DistanceReport& report,
                                  const SafetyParams& params) {
  ConstraintRow row;
  row.coeffs = zero_row(model);
  const Vec2 h(std::cos(q.base_heading), std::sin(q.base_heading));
  const double cos_tau = l_star.x() * h.x() + l_star.y() * h.y();
  const double psi_b =
      std::min(params.d_b - report.value, std::abs(model.base_linear_vel_max * cos_tau));
  row.coeffs(1) = -cos_tau;
  row.bound = -psi_b;
  row.tag = RowTag::BaseAci;
  row.obstacle_id = report.obstacle_id;
  return row;
}

/// Barrier row keeping the arm capsules clear of one obstacle, anchored at
/// the reported closest point. Joint columns beyond the closest link are
/// zero by construction.
inline std::optional<ConstraintRow> arm_dcbf_row(const RobotModel& model,
                                                 const JointConfig& q,
                                                 const DistanceReport& report,
                                                 const ObstacleState& ob,
                                                 const SafetyParams& params) {
  if (report.degenerate) return std::nullopt;
  ConstraintRow row;
  row.coeffs = zero_row(model);
  const MatX jp = point_jacobian(model, q, report.arm_link, report.local_point);
  row.coeffs.head(jp.cols()) = -(report.normal.transpose() * jp).transpose();
  row.bound = dcbf_drift(report, ob) + params.alpha_gain * report.value;
  row.tag = RowTag::ArmDcbf;
  row.obstacle_id = ob.id;
  return row;
}

/// Chooses the arm dodge tangent from tangent_samples evenly spaced unit
/// directions on the circle orthogonal to the clearance normal:
///   M(l) = -k_m1 |z . l| - k_m2 sum(l . prior) + k_m3 |v_ob . l|
/// Ties break to the lowest candidate index.
inline AciResult arm_aci_direction(const JointConfig&, const DistanceReport& report,
                                   const ObstacleState& ob,
                                   std::span<const Vec3> prior_tangents,
                                   const SafetyParams& params) {
  const Vec3& n = report.normal;
  Vec3 e1 = Vec3::UnitZ().cross(n);
  if (e1.norm() < 1e-9) e1 = Vec3::UnitX();  // normal is vertical
  e1.normalize();
  const Vec3 e2 = n.cross(e1).normalized();
  AciResult best;
  best.part = BodyPart::Arm;
  best.obstacle_id = ob.id;
  best.candidate_count = params.tangent_samples;
  double best_m = kInf;
  for (int i = 0; i < params.tangent_samples; ++i) {
    const double ang = 2.0 * M_PI * i / params.tangent_samples;
    const Vec3 l = std::cos(ang) * e1 + std::sin(ang) * e2;
    double m = -params.k_m1 * std::abs(l.z());
    for (const Vec3& prior : prior_tangents) m -= params.k_m2 * l.dot(prior);
    m += params.k_m3 * std::abs(ob.velocity.dot(l));
    if (m < best_m - 1e-12) {
      best_m = m;
      best.direction = l;
      best.objective = m;
    }
  }
  return best;
}

/// Dodge row for the arm: l* . (closest point velocity) >= psi_m with
/// psi_m = min(d_m - b, D_m), written as -(l*^T Jp) qdot <= -psi_m.
inline ConstraintRow arm_aci_row(const RobotModel& model, const JointConfig& q,
                                 const Vec3& l_star, const DistanceReport& report,
                                 const SafetyParams& params) {
  ConstraintRow row;
  row.coeffs = zero_row(model);
  const MatX jp = point_jacobian(model, q, report.arm_link, report.local_point);
  row.coeffs.head(jp.cols()) = -(l_star.transpose() * jp).transpose();
  row.bound = -std::min(params.d_m - report.value, params.cap_m);
  row.tag = RowTag::ArmAci;
  row.obstacle_id = report.obstacle_id;
  return row;
}

/// Quadratic joint-range barrier value for one generalized coordinate.
inline double joint_bound_barrier(const RobotModel& model, const JointConfig& q, int i) {
  const double lo = model.position_lower(i);
  const double hi = model.position_upper(i);
  const double qi = q.stacked()(i);
  return (hi - qi) * (qi - lo) / (hi - lo);
}

/// One barrier row per generalized coordinate keeping it inside its range.
inline std::vector<ConstraintRow> joint_bound_rows(const RobotModel& model,
                                                   const JointConfig& q,
                                                   const SafetyParams& params) {
  std::vector<ConstraintRow> rows;
  const VecX qs = q.stacked();
  rows.reserve(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    const double lo = model.position_lower(i);
    const double hi = model.position_upper(i);
    const double b = (hi - qs(i)) * (qs(i) - lo) / (hi - lo);
    const double db_dq = (hi + lo - 2.0 * qs(i)) / (hi - lo);
    ConstraintRow row;
    row.coeffs = zero_row(model);
    row.coeffs(i) = -db_dq;
    row.bound = params.gamma_jb * b;
    row.tag = RowTag::JointBound;
    row.joint = i;
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Horizontal overextension barrier value: max_reach^2 minus the squared
/// planar distance from chassis center to end effector.
inline double max_reach_barrier(const RobotModel& model, const JointConfig& q) {
  const Vec3 r = forward_kinematics(model, q).translation - Vec3(q.base_x, q.base_y, 0.0);
  return model.max_reach * model.max_reach - r.head<2>().squaredNorm();
}

/// Single barrier row limiting horizontal end-effector reach from the base.
/// The travel and heading columns vanish: the base carries the end effector
/// with it, so only arm motion changes the planar offset.
inline ConstraintRow max_reach_row(const RobotModel& model, const JointConfig& q,
                                   const SafetyParams& params) {
  const MatX je = extended_jacobian(model, q);
  const Vec3 p_e = forward_kinematics(model, q).translation;
  const Vec3 p_b(q.base_x, q.base_y, 0.0);
  Vec3 r = p_e - p_b;
  r.z() = 0.0;  // planar projection
  MatX jb = MatX::Zero(3, model.dof());
  jb.col(0) = Vec3(std::cos(q.base_heading), std::sin(q.base_heading), 0.0);
  ConstraintRow row;
  row.coeffs = zero_row(model);
  row.coeffs.head(model.dof()) =
      2.0 * ((je.topRows<3>() - jb).transpose() * r);
  row.bound = params.gamma_mr * max_reach_barrier(model, q);
  row.tag = RowTag::MaxReach;
  return row;
}

/// Hysteresis memory for the proximity gate, keyed by obstacle id. An
/// obstacle enters on the gate test and stays active until its clearance
/// exceeds k_ot, preventing on/off chatter when the robot slows down near
/// a static obstacle (the gate threshold scales with relative speed).
struct OperatingLatch {
  std::map<std::string, bool> base;
  std::map<std::string, bool> arm;
};

struct SafetyConstraintSet {
  std::vector<ConstraintRow> rows;
  std::vector<AciResult> tangents;
  std::vector<DistanceReport> base_reports;  // one per obstacle, id order
  std::vector<DistanceReport> arm_reports;
  int base_active = 0;
  int arm_active = 0;
  int skipped_degenerate = 0;
  int arm_aci_suppressed = 0;  // dodge rows withheld by the gain floor
};

/// Per-cycle assembly: obstacles in id order, emitting base barrier + base
/// dodge then arm barrier + arm dodge for each obstacle inside the
/// respective proximity gate, followed by all joint-bound rows and the
/// max-reach row. Dodge tangents chosen earlier in the loop feed the
/// objective of later ones; the prior lists start empty every cycle.
/// prev_qdot supplies the closest-point velocities for the gate test;
/// include_aci = false suppresses the dodge rows (plain-barrier baseline).
inline SafetyConstraintSet assemble_safety_constraints(
    const RobotModel& model, const JointConfig& q,
    std::span<const ObstacleState> obstacles, const SafetyParams& params,
    const VecX& prev_qdot, bool include_aci = true,
    OperatingLatch* latch = nullptr) {
  params.validate();
  SafetyConstraintSet out;
  std::vector<const ObstacleState*> ordered;
  ordered.reserve(obstacles.size());
  for (const auto& ob : obstacles) ordered.push_back(&ob);
  std::sort(ordered.begin(), ordered.end(),
            [](const ObstacleState* a, const ObstacleState* b) { return a->id < b->id; });

  std::vector<Vec3> base_priors, arm_priors;
  for (const ObstacleState* ob : ordered) {
    DistanceReport base_rep = base_distance(model, q, *ob);
    DistanceReport arm_rep = arm_distance(model, q, *ob, params.softmin_sharpness);

    auto gate = [&](const DistanceReport& rep, std::map<std::string, bool>* memory) {
      const double speed =
          (report_point_velocity(model, q, rep, prev_qdot) - ob->velocity).norm();
      bool active = operating_set_test(rep, speed, params.k_ot, params.k_ro);
      if (memory) {
        const bool was = (*memory)[ob->id];
        active = active || (was && rep.value <= params.k_ot);
        (*memory)[ob->id] = active;
      }
      return active;
    };
    const bool base_on = gate(base_rep, latch ? &latch->base : nullptr);
    const bool arm_on = gate(arm_rep, latch ? &latch->arm : nullptr);

    if (base_on) {
      ++out.base_active;
      if (auto row = base_dcbf_row(model, q, base_rep, *ob, params)) {
        out.rows.push_back(std::move(*row));
        if (include_aci) {
          AciResult aci = base_aci_direction(q, base_rep, *ob, base_priors, params);
          out.rows.push_back(base_aci_row(model, q, aci.direction, base_rep, params));
          base_priors.push_back(aci.direction);
          out.tangents.push_back(std::move(aci));
        }
      } else {
        ++out.skipped_degenerate;
      }
    }
    if (arm_on) {
      ++out.arm_active;
      if (auto row = arm_dcbf_row(model, q, arm_rep, *ob, params)) {
        out.rows.push_back(std::move(*row));
        if (include_aci) {
          AciResult aci = arm_aci_direction(q, arm_rep, *ob, arm_priors, params);
          ConstraintRow dodge = arm_aci_row(model, q, aci.direction, arm_rep, params);
          // A tangent the witness point cannot actually follow (tiny
          // Jacobian gain) would translate into an unbounded joint-rate
          // demand; the barrier row above still guards the clearance.
          if (dodge.coeffs.head(model.dof()).norm() >= params.aci_gain_floor)
            out.rows.push_back(std::move(dodge));
          else
            ++out.arm_aci_suppressed;
          arm_priors.push_back(aci.direction);
          out.tangents.push_back(std::move(aci));
        }
      } else {
        ++out.skipped_degenerate;
      }
    }
    out.base_reports.push_back(std::move(base_rep));
    out.arm_reports.push_back(std::move(arm_rep));
  }

  auto jb = joint_bound_rows(model, q, params);
  out.rows.insert(out.rows.end(), std::make_move_iterator(jb.begin()),
                  std::make_move_iterator(jb.end()));
  out.rows.push_back(max_reach_row(model, q, params));
  return out;
}

}  // namespace wbc
