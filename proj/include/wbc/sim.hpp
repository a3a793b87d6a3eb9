#pragma once

// Deterministic fixed-step kinematic world: explicit Euler on the robot,
// scripted obstacles, hard-minimum collision monitoring, per-step traces
// and the scenario run loop (goal waypoints, success dwell, stall
// detection).

#include <wbc/controller.hpp>

namespace wbc {

struct WorldState {
  double time = 0.0;
  JointConfig q;
  std::vector<ObstacleState> obstacles;  // live obstacles at `time`
  bool payload_attached = false;
};

struct MinDistanceResult {
  double value = kInf;
  BodyPart part = BodyPart::Base;
  std::string obstacle_id;
  int capsule_index = -1;
};

/// Hard minimum clearance over {base disc, every capsule} x every obstacle.
inline MinDistanceResult min_distance(const RobotModel& model, const JointConfig& q,
                                      std::span<const ObstacleState> obstacles) {
  MinDistanceResult out;
  for (const auto& ob : obstacles) {
    const DistanceReport base = base_distance(model, q, ob);
    if (base.value < out.value) {
      out.value = base.value;
      out.part = BodyPart::Base;
      out.obstacle_id = ob.id;
      out.capsule_index = -1;
    }
    const DistanceReport arm = arm_distance(model, q, ob, 1.0);
    if (arm.hard_min < out.value) {
      out.value = arm.hard_min;
      out.part = BodyPart::Arm;
      out.obstacle_id = ob.id;
      out.capsule_index = arm.capsule_index;
    }
  }
  return out;
}

/// Advances the robot by one Euler step and re-evaluates obstacle scripts at
/// the new time. Arm joints are clamped to their position limits; returns
/// the number of clamped joints (the barrier rows should keep this at zero).
inline int world_step(WorldState& world, const RobotModel& model, const VecX& qdot,
                      double dt, std::span<const ScriptedObstacle> scripts) {
  if (!(dt > 0.0)) throw std::invalid_argument("world_step: dt <= 0");
  if (!qdot.allFinite()) throw std::invalid_argument("world_step: non-finite command");
  world.q = world.q.integrated(qdot, dt);
  int clamped = 0;
  for (int i = 0; i < model.arm_dof(); ++i) {
    const double lo = model.joints[i].pos_lower;
    const double hi = model.joints[i].pos_upper;
    if (world.q.arm(i) < lo || world.q.arm(i) > hi) {
      world.q.arm(i) = std::clamp(world.q.arm(i), lo, hi);
      ++clamped;
    }
  }
  world.time += dt;
  world.obstacles.clear();
  for (const auto& s : scripts)
    if (auto ob = s.state_at(world.time)) world.obstacles.push_back(std::move(*ob));
  return clamped;
}

struct StepTrace {
  double time = 0.0;
  VecX q;       // stacked [d, phi, arm...]
  double base_x = 0.0, base_y = 0.0;
  VecX qdot;
  Vec6 slack = Vec6::Zero();
  Vec6 pose_err = Vec6::Zero();
  double pos_err = 0.0, rot_err = 0.0;
  double lyapunov = 0.0, lyapunov_rate = 0.0;
  double min_dist = kInf;
  double base_clearance = kInf, whole_clearance = kInf;
  int active_obstacles = 0;
  int rows = 0;
  int emitted[4] = {0, 0, 0, 0};  // base-dcbf, base-aci, arm-dcbf, arm-aci
  int tight[4] = {0, 0, 0, 0};
  double jb_min = kInf;   // min joint-bound barrier over joints
  double mr = kInf;       // max-reach barrier
  QpStatus qp_status = QpStatus::Optimal;
  int qp_iterations = 0;
  double qp_ms = 0.0;
  double control_ms = 0.0;
  int clamped = 0;
  bool infeasible = false;
};

struct GoalWaypoint {
  Transform pose;
  double dwell = 0.5;  // seconds the tolerance must hold before advancing
};

struct SuccessSpec {
  double pos_tol = 0.02;  // m
  double rot_tol = 0.05;  // rad
};

struct RunConfig {
  std::string name;
  RobotModel model;
  ControllerParams params;
  JointConfig start;
  std::vector<GoalWaypoint> waypoints;
  double goal_speed = 0.0;  // m/s carrot speed along waypoint legs; 0 = jump
  SuccessSpec success;
  std::vector<ScriptedObstacle> obstacles;
  double dt = 0.01;
  double horizon = 40.0;
};

struct RunSummary {
  std::string scenario;
  std::string mode;
  std::string param_hash;
  bool success = false;
  double completion_time = -1.0;
  int waypoints_reached = 0;
  int steps = 0;
  double min_dist = kInf;
  double min_dist_time = -1.0;
  double first_activation_time = -1.0;  // first cycle with external rows
  double jb_min = kInf;
  double mr_min = kInf;
  int clamp_events = 0;
  int infeasible_cycles = 0;
  int maxiter_cycles = 0;
  double mean_qp_ms = 0.0, max_qp_ms = 0.0;
  double mean_control_ms = 0.0, max_control_ms = 0.0;
  VecX max_abs_qdot;
  bool stalled = false;  // base quiescent over the final second without success
};

struct RunResult {
  std::vector<StepTrace> trace;
  RunSummary summary;
};

namespace detail {

/// Carrot goal: the commanded pose travels along the current waypoint leg at
/// goal_speed, or sits on the waypoint when the speed is zero.
struct GoalSchedule {
  const RunConfig* cfg;
  size_t index = 0;        // current waypoint
  Vec3 leg_start;          // position the current leg started from
  double leg_start_time = 0.0;
  double dwell_elapsed = 0.0;

  explicit GoalSchedule(const RunConfig& c, const Vec3& ee_start) : cfg(&c) {
    leg_start = ee_start;
  }

  Transform current(double t) const {
    const GoalWaypoint& wp = cfg->waypoints[index];
    if (cfg->goal_speed <= 0.0) return wp.pose;
    const Vec3 span = wp.pose.translation - leg_start;
    const double len = span.norm();
    const double travelled = cfg->goal_speed * (t - leg_start_time);
    Transform goal = wp.pose;
    if (travelled < len && len > 1e-12)
      goal.translation = leg_start + span * (travelled / len);
    return goal;
  }

  /// Advances the waypoint when the true waypoint pose has been held within
  /// tolerance for its dwell. Returns true when the last waypoint completes.
  bool update(const Transform& ee, double t, double dt, int* reached) {
    const GoalWaypoint& wp = cfg->waypoints[index];
    const Vec6 err = pose_error(ee, wp.pose);
    const bool within = err.head<3>().norm() < cfg->success.pos_tol &&
                        err.tail<3>().norm() < cfg->success.rot_tol;
    dwell_elapsed = within ? dwell_elapsed + dt : 0.0;
    if (dwell_elapsed >= wp.dwell) {
      ++*reached;
      if (index + 1 == cfg->waypoints.size()) return true;
      leg_start = wp.pose.translation;
      leg_start_time = t;
      ++index;
      dwell_elapsed = 0.0;
    }
    return false;
  }
};

}  // namespace detail

/// Runs one scenario to success or horizon. Deterministic: identical
/// configurations produce identical traces.
inline RunResult run_scenario(const RunConfig& cfg) {
  if (cfg.waypoints.empty())
    throw std::invalid_argument("run_scenario: no goal waypoints");
  if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0))
    throw std::invalid_argument("run_scenario: dt and horizon must be positive");
  RunResult result;
  RunSummary& sum = result.summary;
  sum.scenario = cfg.name;
  sum.mode = control_mode_name(cfg.params.mode);
  sum.max_abs_qdot = VecX::Zero(cfg.model.dof());

  WorldState world;
  world.q = cfg.start;
  for (const auto& s : cfg.obstacles)
    if (auto ob = s.state_at(0.0)) world.obstacles.push_back(std::move(*ob));

  Controller controller(cfg.model, cfg.params);
  detail::GoalSchedule goals(cfg, forward_kinematics(cfg.model, cfg.start).translation);

  const int max_steps = static_cast<int>(std::ceil(cfg.horizon / cfg.dt));
  result.trace.reserve(max_steps);
  double qp_ms_total = 0.0, control_ms_total = 0.0;

  for (int step_i = 0; step_i < max_steps; ++step_i) {
    const double t = world.time;
    const Transform goal = goals.current(t);
    const auto t0 = std::chrono::steady_clock::now();
    const ControlOutput out = controller.step(world.q, goal, world.obstacles, cfg.dt);
    const double control_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();

    StepTrace tr;
    tr.time = t;
    tr.q = world.q.stacked();
    tr.base_x = world.q.base_x;
    tr.base_y = world.q.base_y;
    tr.qdot = out.qdot;
    tr.slack = out.slack;
    tr.pose_err = out.pose_err;
    tr.pos_err = out.pos_err_norm;
    tr.rot_err = out.rot_err_norm;
    tr.lyapunov = out.lyapunov;
    tr.lyapunov_rate = out.lyapunov_rate;
    tr.min_dist = min_distance(cfg.model, world.q, world.obstacles).value;
    tr.base_clearance = out.base_clearance;
    tr.whole_clearance = out.whole_clearance;
    tr.active_obstacles = out.active_obstacles;
    tr.rows = static_cast<int>(out.constraints.rows.size());
    for (size_t i = 0; i < out.constraints.rows.size(); ++i) {
      const RowTag tag = out.constraints.rows[i].tag;
      const int bucket = tag == RowTag::BaseDcbf   ? 0
                         : tag == RowTag::BaseAci  ? 1
                         : tag == RowTag::ArmDcbf  ? 2
                         : tag == RowTag::ArmAci   ? 3
                                                   : -1;
      if (bucket >= 0) ++tr.emitted[bucket];
    }
    for (int idx : out.solution.active) {
      if (idx < static_cast<int>(out.constraints.rows.size())) {
        const RowTag tag = out.constraints.rows[idx].tag;
        const int bucket = tag == RowTag::BaseDcbf   ? 0
                           : tag == RowTag::BaseAci  ? 1
                           : tag == RowTag::ArmDcbf  ? 2
                           : tag == RowTag::ArmAci   ? 3
                                                     : -1;
        if (bucket >= 0) ++tr.tight[bucket];
      }
    }
    for (int i = 0; i < cfg.model.dof(); ++i)
      tr.jb_min = std::min(tr.jb_min, joint_bound_barrier(cfg.model, world.q, i));
    tr.mr = max_reach_barrier(cfg.model, world.q);
    tr.qp_status = out.qp_status;
    tr.qp_iterations = out.qp_iterations;
    tr.qp_ms = out.qp_ms;
    tr.control_ms = control_ms;
    tr.infeasible = out.infeasible;

    tr.clamped = world_step(world, cfg.model, out.qdot, cfg.dt, cfg.obstacles);
    result.trace.push_back(tr);

    // Summary accumulation.
    ++sum.steps;
    if (tr.min_dist < sum.min_dist) {
      sum.min_dist = tr.min_dist;
      sum.min_dist_time = t;
    }
    if (sum.first_activation_time < 0.0 &&
        (tr.emitted[0] + tr.emitted[1] + tr.emitted[2] + tr.emitted[3]) > 0)
      sum.first_activation_time = t;
    sum.jb_min = std::min(sum.jb_min, tr.jb_min);
    sum.mr_min = std::min(sum.mr_min, tr.mr);
    sum.clamp_events += tr.clamped;
    if (tr.infeasible) ++sum.infeasible_cycles;
    if (tr.qp_status == QpStatus::MaxIterations) ++sum.maxiter_cycles;
    qp_ms_total += tr.qp_ms;
    control_ms_total += tr.control_ms;
    sum.max_qp_ms = std::max(sum.max_qp_ms, tr.qp_ms);
    sum.max_control_ms = std::max(sum.max_control_ms, tr.control_ms);
    sum.max_abs_qdot = sum.max_abs_qdot.cwiseMax(out.qdot.cwiseAbs());

    // Success bookkeeping uses the post-step state time (t + dt).
    const Transform ee = forward_kinematics(cfg.model, world.q);
    if (goals.update(ee, world.time, cfg.dt, &sum.waypoints_reached)) {
      sum.success = true;
      sum.completion_time = world.time;
      break;
    }
  }

  if (sum.steps > 0) {
    sum.mean_qp_ms = qp_ms_total / sum.steps;
    sum.mean_control_ms = control_ms_total / sum.steps;
  }
  if (!sum.success) {
    // Stall: base quiescent over the final second of the run.
    const int window = std::min<int>(sum.steps, std::max(1, static_cast<int>(1.0 / cfg.dt)));
    bool quiet = window > 0;
    for (int i = sum.steps - window; i < sum.steps; ++i)
      if (result.trace[i].qdot.head<2>().norm() >= 1e-3) quiet = false;
    sum.stalled = quiet;
  }
  return result;
}

}  // namespace wbc
