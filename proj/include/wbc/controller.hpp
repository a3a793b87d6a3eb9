#pragma once

// Per-cycle whole-body velocity controller. Each cycle builds a strictly
// convex QP over u = [qdot; slack]: an adaptive diagonal cost that shifts
// effort between base, arm and slack depending on goal error and obstacle
// proximity, a six-row equality tying the end-effector twist plus slack to
// the servo velocity, the safety rows from constraints.hpp, and joint rate
// box bounds. Modes: the full controller, a plain-barrier baseline without
// dodge rows, and an unconstrained variant for tests.

#include <wbc/constraints.hpp>
#include <wbc/qp.hpp>

namespace wbc {

enum class ControlMode { Sewb, CbfOnly, Unconstrained };

inline const char* control_mode_name(ControlMode m) {
  switch (m) {
    case ControlMode::Sewb: return "sewb";
    case ControlMode::CbfOnly: return "cbf-only";
    case ControlMode::Unconstrained: return "unconstrained";
  }
  return "?";
}

inline ControlMode control_mode_from_string(const std::string& s) {
  if (s == "sewb") return ControlMode::Sewb;
  if (s == "cbf-only") return ControlMode::CbfOnly;
  if (s == "unconstrained") return ControlMode::Unconstrained;
  throw std::invalid_argument("unknown control mode: " + s);
}

struct ControllerParams {
  ControlMode mode = ControlMode::Sewb;
  Vec6 servo_gain = (Vec6() << 1.5, 1.5, 1.5, 1.0, 1.0, 1.0).finished();
  double k_sigma = 10.0;   // sigmoid sharpness of the weight blend
  double t_sigma = 1.0;    // sigmoid midpoint (m)
  double k_lambda_m = 0.1; // far-field arm weight
  double eps_floor = 1e-3; // floor for the 1/error weight terms
  double k_manip = 0.05;   // manipulability ascent gain in the linear cost
  double k_head = 0.5;     // heading alignment gain in the linear cost
  double linear_cap = 1.5;   // servo velocity clamp, translational (m/s)
  double angular_cap = 2.0;  // servo velocity clamp, rotational (rad/s)
  double far_field_clearance = 1e3;  // clearance stand-in with no obstacles
  double weight_floor = 1e-9;
  SafetyParams safety;
  double qp_tol = 1e-6;
  int qp_max_iter = 4000;

  void validate() const {
    if ((servo_gain.array() <= 0.0).any())
      throw std::invalid_argument("ControllerParams: servo gains must be positive");
    const double positives[] = {k_sigma,    eps_floor,  linear_cap, angular_cap,
                                weight_floor, qp_tol,   far_field_clearance};
    for (double v : positives)
      if (!(v > 0.0)) throw std::invalid_argument("ControllerParams: nonpositive value");
    safety.validate();
  }
};

struct CostWeights {
  double base = 1.0;
  double arm = 1.0;
  double slack = 1.0;
};

/// Sigmoid blend between near-obstacle and far-field cost behavior.
inline double weight_sigmoid(double x, const ControllerParams& p) {
  return 1.0 / (1.0 + std::exp(-p.k_sigma * (x - p.t_sigma)));
}

/// Adaptive diagonal cost weights.
///   base:  blends 1/error (far field) with the base clearance (near field),
///          freezing the base when the end effector is nearly on target and
///          making base motion cheap next to obstacles;
///   arm:   blends the constant far-field weight with the whole clearance;
///   slack: blends 1/error with the minimum clearance, so tracking is rigid
///          in free space and softens under obstacle pressure.
inline CostWeights cost_weights(double eps_norm, double base_clearance,
                                double whole_clearance, const ControllerParams& p) {
  const auto capped = [&](double x) {
    return std::isfinite(x) ? std::min(x, p.far_field_clearance)
                            : p.far_field_clearance;
  };
  const double inv_eps = 1.0 / std::max(eps_norm, p.eps_floor);
  CostWeights w;
  const double xb = capped(base_clearance);
  const double sb = weight_sigmoid(xb, p);
  w.base = sb * inv_eps + (1.0 - sb) * xb;
  const double xm = capped(whole_clearance);
  const double sm = weight_sigmoid(xm, p);
  w.arm = sm * p.k_lambda_m + (1.0 - sm) * xm;
  const double xd = capped(std::min(base_clearance, whole_clearance));
  const double sd = weight_sigmoid(xd, p);
  w.slack = sd * inv_eps + (1.0 - sd) * xd;
  w.base = std::max(w.base, p.weight_floor);
  w.arm = std::max(w.arm, p.weight_floor);
  w.slack = std::max(w.slack, p.weight_floor);
  return w;
}

/// Quadratic and linear cost over u = [qdot; slack]. The linear part pulls
/// the heading toward the goal bearing and ascends the arm manipulability.
inline void build_cost(const RobotModel& model, const JointConfig& q,
                       const Vec3& goal_position, const CostWeights& w,
                       const ControllerParams& p, VecX& h_diag, VecX& g) {
  const int n = model.dof();
  h_diag.resize(n + kTaskDim);
  h_diag.head(kBaseDof).setConstant(w.base);
  h_diag.segment(kBaseDof, model.arm_dof()).setConstant(w.arm);
  h_diag.tail(kTaskDim).setConstant(w.slack);
  g = VecX::Zero(n + kTaskDim);
  const double bearing =
      std::atan2(goal_position.y() - q.base_y, goal_position.x() - q.base_x);
  g(1) = -p.k_head * wrap_angle(bearing - q.base_heading);
  const ManipulabilityGradient mg = manipulability_gradient(model, q);
  if (!mg.singular)
    g.segment(kBaseDof, model.arm_dof()) = -p.k_manip * mg.gradient;
}

/// Servo velocity toward the goal pose, with translational and rotational
/// magnitudes clamped separately.
inline Vec6 servo_velocity(const Vec6& pose_err, const ControllerParams& p) {
  Vec6 v = p.servo_gain.asDiagonal() * pose_err;
  const double ln = v.head<3>().norm();
  if (ln > p.linear_cap) v.head<3>() *= p.linear_cap / ln;
  const double an = v.tail<3>().norm();
  if (an > p.angular_cap) v.tail<3>() *= p.angular_cap / an;
  return v;
}

/// The six equality rows [J | I] u = v* coupling the end-effector twist and
/// slack to the servo velocity.
inline std::vector<ConstraintRow> expectation_rows(const RobotModel& model,
                                                   const JointConfig& q,
                                                   const Transform& goal,
                                                   const ControllerParams& p,
                                                   Vec6* pose_err_out = nullptr,
                                                   Vec6* v_star_out = nullptr) {
  const MatX j = extended_jacobian(model, q);
  const Vec6 eps = pose_error(forward_kinematics(model, q), goal);
  const Vec6 v_star = servo_velocity(eps, p);
  if (pose_err_out) *pose_err_out = eps;
  if (v_star_out) *v_star_out = v_star;
  std::vector<ConstraintRow> rows(kTaskDim);
  for (int r = 0; r < kTaskDim; ++r) {
    rows[r].coeffs = VecX::Zero(model.dof() + kTaskDim);
    rows[r].coeffs.head(model.dof()) = j.row(r).transpose();
    rows[r].coeffs(model.dof() + r) = 1.0;
    rows[r].bound = v_star(r);
    rows[r].kind = RowKind::Equality;
    rows[r].tag = RowTag::VelocityExpectation;
  }
  return rows;
}

/// Goal-error energy V = 1/2 ||eps||^2 and its discrete rate.
inline std::pair<double, double> lyapunov_diagnostic(const Vec6& prev_eps,
                                                     const Vec6& curr_eps,
                                                     double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("lyapunov_diagnostic: dt <= 0");
  const double v_prev = 0.5 * prev_eps.squaredNorm();
  const double v_curr = 0.5 * curr_eps.squaredNorm();
  return {v_curr, (v_curr - v_prev) / dt};
}

struct ControlOutput {
  VecX qdot;
  Vec6 slack = Vec6::Zero();
  Vec6 v_star = Vec6::Zero();
  Vec6 pose_err = Vec6::Zero();
  double pos_err_norm = 0.0;
  double rot_err_norm = 0.0;
  CostWeights weights;
  double base_clearance = kInf;   // min over obstacles, base report
  double whole_clearance = kInf;  // min over base and arm reports
  int active_obstacles = 0;       // obstacles inside any proximity gate
  QpStatus qp_status = QpStatus::Optimal;
  int qp_iterations = 0;
  double qp_ms = 0.0;
  double lyapunov = 0.0;
  double lyapunov_rate = 0.0;
  bool infeasible = false;
  std::vector<int> conflict_rows;
  SafetyConstraintSet constraints;  // rows in QP inequality order
  QpProblem problem;                // the solved instance (diagnostics)
  QpSolution solution;
};

/// Stateful per-cycle controller. State across cycles: previous goal error
/// (Lyapunov rate), previous command (proximity-gate velocities), the
/// proximity latch, and the previous active set (warm start).
class Controller {
 public:
  Controller(RobotModel model, ControllerParams params)
      : model_(std::move(model)), params_(std::move(params)) {
    model_.validate();
    params_.validate();
    reset();
  }

  const RobotModel& model() const { return model_; }
  const ControllerParams& params() const { return params_; }

  void reset() {
    has_prev_ = false;
    prev_eps_.setZero();
    prev_qdot_ = VecX::Zero(model_.dof());
    latch_ = OperatingLatch{};
    warm_keys_.clear();
  }

  ControlOutput step(const JointConfig& q, const Transform& goal,
                     std::span<const ObstacleState> obstacles, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("Controller::step: dt <= 0");
    q.validate();
    if (!goal.is_orthonormal(1e-6))
      throw std::invalid_argument("Controller::step: invalid goal rotation");
    for (const auto& ob : obstacles) ob.validate();
    const int n = model_.dof();

    ControlOutput out;
    const bool with_aci = params_.mode == ControlMode::Sewb;
    out.constraints = assemble_safety_constraints(
        model_, q, obstacles, params_.safety, prev_qdot_, with_aci, &latch_);
    for (const auto& rep : out.constraints.base_reports)
      out.base_clearance = std::min(out.base_clearance, rep.value);
    for (const auto& rep : out.constraints.arm_reports)
      out.whole_clearance = std::min(out.whole_clearance, rep.value);
    out.whole_clearance = std::min(out.whole_clearance, out.base_clearance);
    {
      // Count obstacles inside at least one gate (base or arm).
      const auto live = [&](const std::map<std::string, bool>& m, const std::string& id) {
        auto it = m.find(id);
        return it != m.end() && it->second;
      };
      for (const auto& rep : out.constraints.base_reports)
        if (live(latch_.base, rep.obstacle_id) || live(latch_.arm, rep.obstacle_id))
          ++out.active_obstacles;
    }

    const auto eq_rows =
        expectation_rows(model_, q, goal, params_, &out.pose_err, &out.v_star);
    out.pos_err_norm = out.pose_err.head<3>().norm();
    out.rot_err_norm = out.pose_err.tail<3>().norm();

    out.weights = cost_weights(out.pose_err.norm(), out.base_clearance,
                               out.whole_clearance, params_);

    QpProblem qp;
    build_cost(model_, q, goal.translation, out.weights, params_, qp.h_diag, qp.g);
    qp.eq_a = MatX::Zero(kTaskDim, n + kTaskDim);
    qp.eq_b = VecX::Zero(kTaskDim);
    for (int r = 0; r < kTaskDim; ++r) {
      qp.eq_a.row(r) = eq_rows[r].coeffs.transpose();
      qp.eq_b(r) = eq_rows[r].bound;
    }
    const bool with_safety = params_.mode != ControlMode::Unconstrained;
    const auto& rows = out.constraints.rows;
    const int m_in = with_safety ? static_cast<int>(rows.size()) : 0;
    qp.in_a = MatX::Zero(m_in, n + kTaskDim);
    qp.in_b = VecX::Zero(m_in);
    for (int i = 0; i < m_in; ++i) {
      qp.in_a.row(i) = rows[i].coeffs.transpose();
      qp.in_b(i) = rows[i].bound;
    }
    qp.lower = VecX::Constant(n + kTaskDim, -kInf);
    qp.upper = VecX::Constant(n + kTaskDim, kInf);
    for (int i = 0; i < n; ++i) {
      qp.lower(i) = -model_.velocity_limit(i);
      qp.upper(i) = model_.velocity_limit(i);
    }

    QpOptions opt;
    opt.tol = params_.qp_tol;
    opt.max_iter = params_.qp_max_iter;
    opt.warm_rows = map_warm_keys(rows, m_in);
    const QpSolution sol = qp_solve(qp, opt);
    out.qp_status = sol.status;
    out.qp_iterations = sol.iterations;
    out.qp_ms = sol.solve_ms;

    if (sol.status == QpStatus::Infeasible) {
      // Safe stop: no defensible command exists this cycle.
      out.qdot = VecX::Zero(n);
      out.slack.setZero();
      out.infeasible = true;
      out.conflict_rows = sol.conflict;
      warm_keys_.clear();
    } else {
      out.qdot = sol.u.head(n);
      out.slack = sol.u.tail(kTaskDim);
      warm_keys_.clear();
      for (int idx : sol.active) warm_keys_.push_back(row_key(rows, m_in, idx));
    }
    out.problem = std::move(qp);
    out.solution = sol;

    const auto [v, vdot] =
        lyapunov_diagnostic(has_prev_ ? prev_eps_ : out.pose_err, out.pose_err, dt);
    out.lyapunov = v;
    out.lyapunov_rate = vdot;
    prev_eps_ = out.pose_err;
    has_prev_ = true;
    prev_qdot_ = out.qdot;
    return out;
  }

 private:
  // Active rows are remembered across cycles by identity, not index: the
  // row set changes as obstacles enter and leave the gates.
  static std::string row_key(const std::vector<ConstraintRow>& rows, int m_in,
                             int combined_idx) {
    if (combined_idx < m_in) {
      const ConstraintRow& r = rows[combined_idx];
      return std::string(row_tag_name(r.tag)) + "|" + r.obstacle_id + "|" +
             std::to_string(r.joint);
    }
    return "box|" + std::to_string(combined_idx - m_in);
  }

  std::vector<int> map_warm_keys(const std::vector<ConstraintRow>& rows,
                                 int m_in) const {
    std::vector<int> out;
    // Box rows sit after the safety rows and keep stable relative order, so
    // keys map back by offset; safety rows are matched by key.
    for (const auto& key : warm_keys_) {
      if (key.rfind("box|", 0) == 0) {
        out.push_back(m_in + std::stoi(key.substr(4)));
        continue;
      }
      for (int i = 0; i < m_in; ++i)
        if (row_key(rows, m_in, i) == key) {
          out.push_back(i);
          break;
        }
    }
    return out;
  }

  RobotModel model_;
  ControllerParams params_;
  bool has_prev_ = false;
  Vec6 prev_eps_ = Vec6::Zero();
  VecX prev_qdot_;
  OperatingLatch latch_;
  std::vector<std::string> warm_keys_;
};

}  // namespace wbc
