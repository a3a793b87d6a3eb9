// World integration, clearance bookkeeping and scenario runs.

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wbc;

namespace {

const RobotModel& model() {
  static const RobotModel m = RobotModel::builtin_panda_base();
  return m;
}

JointConfig ready_pose() {
  JointConfig q;
  q.arm = VecX::Zero(model().arm_dof());
  q.arm(3) = -1.5;
  q.arm(5) = 1.8;
  return q;
}

ScriptedObstacle static_ball(const std::string& id, const Vec3& pos, double r) {
  ScriptedObstacle s;
  s.id = id;
  s.radius = r;
  s.script.motion = MotionScript::Static{pos};
  return s;
}

RunConfig reach_config(const Vec3& offset, double horizon = 25.0) {
  RunConfig cfg;
  cfg.name = "reach";
  cfg.model = model();
  cfg.start = ready_pose();
  GoalWaypoint wp;
  wp.pose = forward_kinematics(model(), cfg.start);
  wp.pose.translation += offset;
  cfg.waypoints.push_back(wp);
  cfg.horizon = horizon;
  return cfg;
}

}  // namespace

TEST(MinDistance, MatchesGeometricOracle) {
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> pos(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const JointConfig q = oracles::random_config(model(), rng);
    std::vector<ObstacleState> obs;
    for (int k = 0; k < 3; ++k) {
      ObstacleState ob;
      ob.id = "ob" + std::to_string(k);
      ob.position = Vec3(q.base_x + pos(rng), q.base_y + pos(rng), 0.4 + 0.3 * pos(rng));
      ob.radius = 0.05 + 0.05 * (k + 1);
      obs.push_back(ob);
    }
    const MinDistanceResult got = min_distance(model(), q, obs);

    double expect = kInf;
    const FrameSet frames = compute_frames(model(), q);
    for (const auto& ob : obs) {
      const double planar =
          (Eigen::Vector2d(q.base_x, q.base_y) - ob.position.head<2>()).norm() -
          model().base_disc_radius - ob.radius;
      expect = std::min(expect, planar);
      for (const auto& cap : model().capsules) {
        const Transform& link = frames.links[cap.arm_link];
        const Vec3 a = link.apply(cap.p0);
        const Vec3 b = link.apply(cap.p1);
        const double axis = oracles::segment_point_distance_search(a, b, ob.position);
        expect = std::min(expect, axis - cap.radius - ob.radius);
      }
    }
    ASSERT_NEAR(got.value, expect, 1e-8) << "trial " << trial;
  }
}

TEST(MinDistance, AttributesClosestBody) {
  const JointConfig q = ready_pose();
  std::vector<ObstacleState> obs;
  ObstacleState near_base;
  near_base.id = "floor_ball";
  near_base.position = Vec3(q.base_x + 0.5, q.base_y, 0.1);
  near_base.radius = 0.1;
  obs.push_back(near_base);
  MinDistanceResult r = min_distance(model(), q, obs);
  EXPECT_EQ(r.part, BodyPart::Base);
  EXPECT_EQ(r.capsule_index, -1);
  EXPECT_EQ(r.obstacle_id, "floor_ball");

  const Vec3 ee = forward_kinematics(model(), q).translation;
  ObstacleState near_arm;
  near_arm.id = "head";
  near_arm.position = ee + Vec3(0.0, 0.0, 0.25);
  near_arm.radius = 0.05;
  obs = {near_arm};
  r = min_distance(model(), q, obs);
  EXPECT_EQ(r.part, BodyPart::Arm);
  EXPECT_GE(r.capsule_index, 0);
  EXPECT_EQ(r.obstacle_id, "head");
}

TEST(WorldStep, IntegratesAndClampsJoints) {
  WorldState world;
  world.q = ready_pose();
  const int j = 0;
  world.q.arm(j) = model().joints[j].pos_upper - 0.001;

  VecX qdot = VecX::Zero(model().dof());
  qdot(0) = 0.5;           // travel
  qdot(1) = 0.2;           // heading
  qdot(2 + j) = 1.0;       // drives joint j past its limit in one tick
  const JointConfig expected = world.q.integrated(qdot, 0.01);

  const int clamped = world_step(world, model(), qdot, 0.01, {});
  EXPECT_EQ(clamped, 1);
  EXPECT_EQ(world.q.arm(j), model().joints[j].pos_upper);
  EXPECT_NEAR(world.q.base_x, expected.base_x, 1e-15);
  EXPECT_NEAR(world.q.base_y, expected.base_y, 1e-15);
  EXPECT_NEAR(world.q.base_heading, expected.base_heading, 1e-15);
  EXPECT_NEAR(world.time, 0.01, 1e-15);

  EXPECT_THROW(world_step(world, model(), qdot, 0.0, {}), std::invalid_argument);
  qdot(0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(world_step(world, model(), qdot, 0.01, {}), std::invalid_argument);
}

TEST(WorldStep, RefreshesObstacleScripts) {
  ScriptedObstacle mover;
  mover.id = "mover";
  mover.radius = 0.1;
  mover.script.motion = MotionScript::ConstVel{Vec3(1, 0, 0.5), Vec3(-1, 0, 0), 0.0};

  ScriptedObstacle brief = static_ball("brief", Vec3(3, 3, 0.5), 0.1);
  brief.script.active_until = 0.015;

  ScriptedObstacle faller;
  faller.id = "faller";
  faller.radius = 0.1;
  faller.script.motion = MotionScript::ConstVel{Vec3(2, 2, 0.02), Vec3(0, 0, -2), 0.0};
  faller.z_floor = 0.0;

  const std::vector<ScriptedObstacle> scripts = {mover, brief, faller};
  WorldState world;
  world.q = ready_pose();
  const VecX still = VecX::Zero(model().dof());

  world_step(world, model(), still, 0.01, scripts);
  ASSERT_EQ(world.obstacles.size(), 3u);
  EXPECT_LT((world.obstacles[0].position - Vec3(0.99, 0, 0.5)).norm(), 1e-12);
  EXPECT_LT((world.obstacles[0].velocity - Vec3(-1, 0, 0)).norm(), 1e-12);

  world_step(world, model(), still, 0.01, scripts);
  // "brief" expired, "faller" dropped through its floor.
  ASSERT_EQ(world.obstacles.size(), 1u);
  EXPECT_EQ(world.obstacles[0].id, "mover");
}

TEST(RunScenario, ReachesStaticGoalInFreeSpace) {
  const RunConfig cfg = reach_config(Vec3(1.0, 0.4, 0.0));
  const RunResult res = run_scenario(cfg);
  const RunSummary& s = res.summary;
  EXPECT_TRUE(s.success);
  EXPECT_GT(s.completion_time, 0.0);
  EXPECT_EQ(s.waypoints_reached, 1);
  EXPECT_FALSE(s.stalled);
  EXPECT_EQ(s.clamp_events, 0);
  EXPECT_EQ(s.infeasible_cycles, 0);
  EXPECT_EQ(s.min_dist, kInf);
  EXPECT_GT(s.jb_min, 0.0);
  EXPECT_GT(s.mr_min, 0.0);
  ASSERT_EQ(static_cast<int>(res.trace.size()), s.steps);
  for (int i = 0; i < s.steps; ++i) {
    EXPECT_NEAR(res.trace[i].time, i * cfg.dt, 1e-9);
    EXPECT_EQ(res.trace[i].rows, model().dof() + 1);  // joint bounds + reach only
  }
  for (int i = 0; i < model().dof(); ++i)
    EXPECT_LE(s.max_abs_qdot(i), model().velocity_limit(i) + 1e-9);
}

TEST(RunScenario, DeterministicTraces) {
  RunConfig cfg = reach_config(Vec3(1.5, 0.0, 0.0), 6.0);
  ScriptedObstacle pole;
  pole.id = "pole";
  pole.radius = 0.12;
  pole.script.motion =
      MotionScript::Oscillation{Vec3(1.0, 0.0, 0.0), Vec3::UnitX(), Vec3::UnitY(),
                                0.8, M_PI / 2.0, 0.9, 1.2, 0.0};
  cfg.obstacles.push_back(pole);

  const RunResult a = run_scenario(cfg);
  const RunResult b = run_scenario(cfg);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    ASSERT_EQ((a.trace[i].q - b.trace[i].q).cwiseAbs().maxCoeff(), 0.0) << "step " << i;
    ASSERT_EQ((a.trace[i].qdot - b.trace[i].qdot).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_EQ(a.trace[i].min_dist, b.trace[i].min_dist);
    ASSERT_EQ(a.trace[i].rows, b.trace[i].rows);
  }
  EXPECT_EQ(a.summary.success, b.summary.success);
  EXPECT_EQ(a.summary.min_dist, b.summary.min_dist);
  EXPECT_EQ(a.summary.steps, b.summary.steps);
}

TEST(RunScenario, CountsMultipleWaypoints) {
  RunConfig cfg = reach_config(Vec3(0.6, 0.0, 0.0), 30.0);
  GoalWaypoint second = cfg.waypoints[0];
  second.pose.translation += Vec3(0.0, 0.5, 0.0);
  cfg.waypoints.push_back(second);
  const RunResult res = run_scenario(cfg);
  EXPECT_TRUE(res.summary.success);
  EXPECT_EQ(res.summary.waypoints_reached, 2);
}

TEST(RunScenario, HorizonExpiryLeavesFailure) {
  const RunConfig cfg = reach_config(Vec3(8.0, 0.0, 0.0), 1.0);
  const RunResult res = run_scenario(cfg);
  EXPECT_FALSE(res.summary.success);
  EXPECT_EQ(res.summary.completion_time, -1.0);
  EXPECT_EQ(res.summary.steps, 100);
  EXPECT_FALSE(res.summary.stalled);  // still driving when time ran out
}

TEST(RunScenario, RejectsDegenerateConfigs) {
  RunConfig cfg = reach_config(Vec3(1, 0, 0));
  cfg.waypoints.clear();
  EXPECT_THROW(run_scenario(cfg), std::invalid_argument);
  RunConfig bad_dt = reach_config(Vec3(1, 0, 0));
  bad_dt.dt = 0.0;
  EXPECT_THROW(run_scenario(bad_dt), std::invalid_argument);
}

TEST(GoalSchedule, CarrotWalksTheLegAtCommandedSpeed) {
  RunConfig cfg = reach_config(Vec3(2.0, 0.0, 0.0));
  cfg.goal_speed = 0.5;
  const Vec3 ee0 = forward_kinematics(model(), cfg.start).translation;
  detail::GoalSchedule sched(cfg, ee0);

  const Transform g0 = sched.current(0.0);
  EXPECT_LT((g0.translation - ee0).norm(), 1e-12);
  const Transform g1 = sched.current(1.0);
  EXPECT_NEAR((g1.translation - ee0).norm(), 0.5, 1e-12);
  // Once the carrot has covered the leg it parks on the waypoint.
  const Transform g9 = sched.current(9.0);
  EXPECT_LT((g9.translation - cfg.waypoints[0].pose.translation).norm(), 1e-12);

  // Zero speed means the goal is the waypoint from the outset.
  cfg.goal_speed = 0.0;
  detail::GoalSchedule jump(cfg, ee0);
  EXPECT_LT((jump.current(0.0).translation - cfg.waypoints[0].pose.translation).norm(),
            1e-12);
}

TEST(GoalSchedule, DwellGatesAdvancement) {
  RunConfig cfg = reach_config(Vec3(1.0, 0.0, 0.0));
  GoalWaypoint second = cfg.waypoints[0];
  second.pose.translation += Vec3(0.0, 1.0, 0.0);
  cfg.waypoints.push_back(second);
  cfg.waypoints[0].dwell = 0.05;

  const Vec3 ee0 = forward_kinematics(model(), cfg.start).translation;
  detail::GoalSchedule sched(cfg, ee0);
  int reached = 0;

  // Holding the first waypoint pose accumulates dwell and then advances.
  const Transform at_first = cfg.waypoints[0].pose;
  for (int i = 0; i < 4; ++i)
    EXPECT_FALSE(sched.update(at_first, 0.01 * (i + 1), 0.01, &reached));
  EXPECT_EQ(reached, 0);
  EXPECT_FALSE(sched.update(at_first, 0.05, 0.01, &reached));
  EXPECT_EQ(reached, 1);
  EXPECT_EQ(sched.index, 1u);
  // The next leg starts from the first waypoint, not from the robot.
  EXPECT_LT((sched.leg_start - cfg.waypoints[0].pose.translation).norm(), 1e-12);

  // Leaving the tolerance resets the dwell accumulator.
  Transform away = second.pose;
  away.translation += Vec3(0.5, 0, 0);
  sched.dwell_elapsed = 0.3;
  EXPECT_FALSE(sched.update(away, 1.0, 0.01, &reached));
  EXPECT_EQ(sched.dwell_elapsed, 0.0);

  // Completing the final waypoint reports success.
  bool done = false;
  for (int i = 0; i < 60 && !done; ++i)
    done = sched.update(second.pose, 2.0 + 0.01 * i, 0.01, &reached);
  EXPECT_TRUE(done);
  EXPECT_EQ(reached, 2);
}

TEST(RunScenario, StaticObstacleRunStaysClear) {
  RunConfig cfg = reach_config(Vec3(2.2, 0.0, 0.0), 30.0);
  // A pillar near the straight-line path; the controller must skirt it.
  cfg.obstacles.push_back(static_ball("pillar", Vec3(1.2, 0.08, 0.45), 0.22));
  const RunResult res = run_scenario(cfg);
  EXPECT_TRUE(res.summary.success);
  EXPECT_GT(res.summary.min_dist, 0.0);
  EXPECT_GE(res.summary.first_activation_time, 0.0);
  EXPECT_EQ(res.summary.infeasible_cycles, 0);
  EXPECT_EQ(res.summary.clamp_events, 0);
  EXPECT_GT(res.summary.jb_min, -1e-6);
  EXPECT_GT(res.summary.mr_min, -1e-6);
}
