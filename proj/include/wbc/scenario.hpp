#pragma once

// Structured-text scenario and robot descriptions. The on-disk format is
// JSON with explicit schema ids ("scenario-v1", "robot-v1", "suite-v1"),
// parsed strictly: unknown keys are rejected so typos fail loudly instead
// of silently falling back to defaults.

#include <wbc/sim.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

namespace wbc {

using Json = nlohmann::json;

/// Any scenario, robot or suite file problem. CLI maps this to exit code 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

inline void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  if (!j.is_object()) config_fail(where, "expected an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) config_fail(where, "unknown key '" + item.key() + "'");
}

inline const Json& require(const Json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) config_fail(where, "missing key '" + key + "'");
  return *it;
}

inline double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) config_fail(where, "expected a number");
  return j.get<double>();
}

inline double get_number(const Json& j, const std::string& key, const std::string& where,
                         double fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : get_number(*it, where + "." + key);
}

inline int get_int(const Json& j, const std::string& key, const std::string& where,
                   int fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer()) config_fail(where + "." + key, "expected an integer");
  return it->get<int>();
}

inline std::string get_string(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_string()) config_fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

inline Vec3 get_vec3(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) config_fail(where, "expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v(i) = get_number(j[i], where);
  if (!v.allFinite()) config_fail(where, "non-finite entry");
  return v;
}

inline Vec3 get_vec3(const Json& j, const std::string& key, const std::string& where) {
  return get_vec3(require(j, key, where), where + "." + key);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Robot description files ("robot-v1").

inline RobotModel robot_from_json(const Json& j, const std::string& where = "robot") {
  using namespace detail;
  reject_unknown_keys(j,
                      {"schema", "name", "base", "mount", "tool", "joints", "capsules",
                       "max_reach"},
                      where);
  if (get_string(j, "schema", where) != "robot-v1")
    config_fail(where + ".schema", "expected \"robot-v1\"");
  RobotModel m;
  m.name = get_string(j, "name", where);

  const Json& base = require(j, "base", where);
  reject_unknown_keys(base, {"disc_radius", "linear_vel_max", "angular_vel_max"},
                      where + ".base");
  m.base_disc_radius = get_number(base, "disc_radius", where + ".base", m.base_disc_radius);
  m.base_linear_vel_max =
      get_number(base, "linear_vel_max", where + ".base", m.base_linear_vel_max);
  m.base_angular_vel_max =
      get_number(base, "angular_vel_max", where + ".base", m.base_angular_vel_max);

  auto parse_frame = [&](const Json& f, const std::string& fw) {
    reject_unknown_keys(f, {"xyz", "rpy"}, fw);
    Transform t;
    if (f.contains("xyz")) t.translation = get_vec3(f, "xyz", fw);
    if (f.contains("rpy")) {
      const Vec3 rpy = get_vec3(f, "rpy", fw);
      t.rotation = rpy_to_rotation(rpy.x(), rpy.y(), rpy.z());
    }
    return t;
  };
  if (j.contains("mount")) m.mount = parse_frame(j["mount"], where + ".mount");
  if (j.contains("tool")) m.tool = parse_frame(j["tool"], where + ".tool");

  const Json& joints = require(j, "joints", where);
  if (!joints.is_array() || joints.empty()) config_fail(where + ".joints", "expected a nonempty array");
  for (size_t i = 0; i < joints.size(); ++i) {
    const std::string jw = where + ".joints[" + std::to_string(i) + "]";
    const Json& je = joints[i];
    reject_unknown_keys(je, {"xyz", "rpy", "axis", "pos_lower", "pos_upper", "vel_limit"}, jw);
    ArmJoint joint;
    joint.origin = parse_frame(je, jw);
    if (je.contains("axis")) joint.axis = get_vec3(je, "axis", jw).normalized();
    joint.pos_lower = get_number(je, "pos_lower", jw, joint.pos_lower);
    joint.pos_upper = get_number(je, "pos_upper", jw, joint.pos_upper);
    joint.vel_limit = get_number(je, "vel_limit", jw, joint.vel_limit);
    m.joints.push_back(joint);
  }

  const Json& caps = require(j, "capsules", where);
  if (!caps.is_array()) config_fail(where + ".capsules", "expected an array");
  for (size_t i = 0; i < caps.size(); ++i) {
    const std::string cw = where + ".capsules[" + std::to_string(i) + "]";
    const Json& ce = caps[i];
    reject_unknown_keys(ce, {"link", "p0", "p1", "radius"}, cw);
    LinkCapsule cap;
    cap.arm_link = get_int(ce, "link", cw, 0);
    cap.p0 = get_vec3(ce, "p0", cw);
    cap.p1 = get_vec3(ce, "p1", cw);
    cap.radius = get_number(ce, "radius", cw, 0.0);
    m.capsules.push_back(cap);
  }

  m.max_reach = get_number(j, "max_reach", where, m.max_reach);
  try {
    m.validate();
  } catch (const std::exception& e) {
    detail::config_fail(where, e.what());
  }
  return m;
}

/// Resolves a robot reference: "builtin:<name>", a file path (relative to
/// base_dir), or an inline robot-v1 object.
inline RobotModel resolve_robot(const Json& ref, const std::filesystem::path& base_dir,
                                const std::string& where) {
  if (ref.is_object()) return robot_from_json(ref, where);
  if (!ref.is_string()) detail::config_fail(where, "expected a string or robot object");
  const std::string s = ref.get<std::string>();
  if (s.rfind("builtin:", 0) == 0) {
    const std::string name = s.substr(8);
    if (name == "panda_base") return RobotModel::builtin_panda_base();
    detail::config_fail(where, "unknown builtin robot '" + name + "'");
  }
  const std::filesystem::path path = base_dir / s;
  std::ifstream in(path);
  if (!in) detail::config_fail(where, "cannot open robot file " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    detail::config_fail(where, std::string("robot file parse error: ") + e.what());
  }
  return robot_from_json(j, path.filename().string());
}

// ---------------------------------------------------------------------------
// Motion scripts.

inline MotionScript motion_from_json(const Json& j, const std::string& where) {
  using namespace detail;
  const std::string type = get_string(j, "type", where);
  MotionScript script;
  if (type == "static") {
    reject_unknown_keys(j, {"type", "position"}, where);
    MotionScript::Static m;
    m.position = get_vec3(j, "position", where);
    script.motion = m;
  } else if (type == "const_vel") {
    reject_unknown_keys(j, {"type", "start", "velocity", "t0"}, where);
    MotionScript::ConstVel m;
    m.start = get_vec3(j, "start", where);
    m.velocity = get_vec3(j, "velocity", where);
    m.t0 = get_number(j, "t0", where, 0.0);
    script.motion = m;
  } else if (type == "waypoints") {
    reject_unknown_keys(j, {"type", "times", "points"}, where);
    MotionScript::Waypoints m;
    const Json& times = require(j, "times", where);
    const Json& points = require(j, "points", where);
    if (!times.is_array() || !points.is_array() || times.size() != points.size())
      config_fail(where, "times and points must be arrays of equal length");
    for (size_t i = 0; i < times.size(); ++i) {
      m.times.push_back(get_number(times[i], where + ".times"));
      m.points.push_back(get_vec3(points[i], where + ".points"));
    }
    script.motion = m;
  } else if (type == "oscillation") {
    reject_unknown_keys(
        j, {"type", "pivot", "axis_a", "axis_b", "length", "base_angle", "amplitude",
            "omega", "t0"},
        where);
    MotionScript::Oscillation m;
    m.pivot = get_vec3(j, "pivot", where);
    if (j.contains("axis_a")) m.axis_a = get_vec3(j, "axis_a", where).normalized();
    if (j.contains("axis_b")) m.axis_b = get_vec3(j, "axis_b", where).normalized();
    m.length = get_number(j, "length", where, m.length);
    m.base_angle = get_number(j, "base_angle", where, m.base_angle);
    m.amplitude = get_number(j, "amplitude", where, m.amplitude);
    m.omega = get_number(j, "omega", where, m.omega);
    m.t0 = get_number(j, "t0", where, m.t0);
    script.motion = m;
  } else {
    config_fail(where + ".type", "unknown motion type '" + type + "'");
  }
  return script;
}

inline Json motion_to_json(const MotionScript& s) {
  Json j;
  if (const auto* m = std::get_if<MotionScript::Static>(&s.motion)) {
    j["type"] = "static";
    j["position"] = {m->position.x(), m->position.y(), m->position.z()};
  } else if (const auto* m = std::get_if<MotionScript::ConstVel>(&s.motion)) {
    j["type"] = "const_vel";
    j["start"] = {m->start.x(), m->start.y(), m->start.z()};
    j["velocity"] = {m->velocity.x(), m->velocity.y(), m->velocity.z()};
    j["t0"] = m->t0;
  } else if (const auto* m = std::get_if<MotionScript::Waypoints>(&s.motion)) {
    j["type"] = "waypoints";
    j["times"] = m->times;
    Json pts = Json::array();
    for (const Vec3& p : m->points) pts.push_back({p.x(), p.y(), p.z()});
    j["points"] = pts;
  } else {
    const auto& osc = std::get<MotionScript::Oscillation>(s.motion);
    j["type"] = "oscillation";
    j["pivot"] = {osc.pivot.x(), osc.pivot.y(), osc.pivot.z()};
    j["axis_a"] = {osc.axis_a.x(), osc.axis_a.y(), osc.axis_a.z()};
    j["axis_b"] = {osc.axis_b.x(), osc.axis_b.y(), osc.axis_b.z()};
    j["length"] = osc.length;
    j["base_angle"] = osc.base_angle;
    j["amplitude"] = osc.amplitude;
    j["omega"] = osc.omega;
    j["t0"] = osc.t0;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Scenario files ("scenario-v1").

struct ScenarioConfig {
  std::string name;
  Json robot_ref = "builtin:panda_base";  // kept verbatim for round-tripping
  RobotModel robot;
  JointConfig start;
  std::vector<GoalWaypoint> goals;
  double goal_speed = 0.0;
  SuccessSpec success;
  std::vector<ScriptedObstacle> obstacles;
  ControllerParams params;
  double dt = 0.01;
  double horizon = 40.0;
  unsigned seed = 0;
  std::string out_dir;  // default output directory; CLI --out overrides

  void validate() const;
  RunConfig to_run_config() const;
};

/// Sets one numeric controller or safety parameter by flat key name.
/// Returns false when the key names no such parameter.
inline bool set_controller_field(ControllerParams& p, const std::string& key, double value) {
  struct Entry {
    const char* key;
    double* slot;
  };
  const Entry table[] = {
      {"k_sigma", &p.k_sigma},
      {"t_sigma", &p.t_sigma},
      {"k_lambda_m", &p.k_lambda_m},
      {"eps_floor", &p.eps_floor},
      {"k_manip", &p.k_manip},
      {"k_head", &p.k_head},
      {"linear_cap", &p.linear_cap},
      {"angular_cap", &p.angular_cap},
      {"far_field_clearance", &p.far_field_clearance},
      {"weight_floor", &p.weight_floor},
      {"qp_tol", &p.qp_tol},
      {"k_ot", &p.safety.k_ot},
      {"k_ro", &p.safety.k_ro},
      {"alpha_gain", &p.safety.alpha_gain},
      {"d_b", &p.safety.d_b},
      {"d_m", &p.safety.d_m},
      {"cap_m", &p.safety.cap_m},
      {"k_b1", &p.safety.k_b1},
      {"k_b2", &p.safety.k_b2},
      {"k_b3", &p.safety.k_b3},
      {"k_m1", &p.safety.k_m1},
      {"k_m2", &p.safety.k_m2},
      {"k_m3", &p.safety.k_m3},
      {"gamma_jb", &p.safety.gamma_jb},
      {"gamma_mr", &p.safety.gamma_mr},
      {"softmin_sharpness", &p.safety.softmin_sharpness},
      {"aci_gain_floor", &p.safety.aci_gain_floor},
  };
  for (const Entry& e : table) {
    if (key == e.key) {
      *e.slot = value;
      return true;
    }
  }
  if (key == "qp_max_iter") {
    p.qp_max_iter = static_cast<int>(value);
    return true;
  }
  if (key == "tangent_samples") {
    p.safety.tangent_samples = static_cast<int>(value);
    return true;
  }
  return false;
}

inline void controller_from_json(ControllerParams& p, const Json& j, const std::string& where) {
  if (!j.is_object()) detail::config_fail(where, "expected an object");
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const Json& v = item.value();
    if (key == "mode") {
      if (!v.is_string()) detail::config_fail(where + ".mode", "expected a string");
      try {
        p.mode = control_mode_from_string(v.get<std::string>());
      } catch (const std::exception& e) {
        detail::config_fail(where + ".mode", e.what());
      }
    } else if (key == "servo_gain") {
      if (!v.is_array() || v.size() != 6)
        detail::config_fail(where + ".servo_gain", "expected 6 numbers");
      for (int i = 0; i < 6; ++i)
        p.servo_gain(i) = detail::get_number(v[i], where + ".servo_gain");
    } else if (v.is_number()) {
      if (!set_controller_field(p, key, v.get<double>()))
        detail::config_fail(where, "unknown key '" + key + "'");
    } else {
      detail::config_fail(where + "." + key, "expected a number");
    }
  }
}

inline ScenarioConfig scenario_from_json(const Json& j, const std::filesystem::path& base_dir,
                                         const std::string& where = "scenario") {
  using namespace detail;
  reject_unknown_keys(j,
                      {"schema", "name", "robot", "start", "goals", "goal_speed", "success",
                       "obstacles", "controller", "dt", "horizon", "seed", "out_dir"},
                      where);
  if (get_string(j, "schema", where) != "scenario-v1")
    config_fail(where + ".schema", "expected \"scenario-v1\"");

  ScenarioConfig cfg;
  cfg.name = get_string(j, "name", where);
  if (j.contains("robot")) cfg.robot_ref = j["robot"];
  cfg.robot = resolve_robot(cfg.robot_ref, base_dir, where + ".robot");

  const Json& start = require(j, "start", where);
  reject_unknown_keys(start, {"base_x", "base_y", "heading", "travel", "arm"},
                      where + ".start");
  cfg.start.base_x = get_number(start, "base_x", where + ".start", 0.0);
  cfg.start.base_y = get_number(start, "base_y", where + ".start", 0.0);
  cfg.start.base_heading = get_number(start, "heading", where + ".start", 0.0);
  cfg.start.base_travel = get_number(start, "travel", where + ".start", 0.0);
  const Json& arm = require(start, "arm", where + ".start");
  if (!arm.is_array() || static_cast<int>(arm.size()) != cfg.robot.arm_dof())
    config_fail(where + ".start.arm",
                "expected " + std::to_string(cfg.robot.arm_dof()) + " joint values");
  cfg.start.arm.resize(cfg.robot.arm_dof());
  for (int i = 0; i < cfg.robot.arm_dof(); ++i)
    cfg.start.arm(i) = get_number(arm[i], where + ".start.arm");

  const Json& goals = require(j, "goals", where);
  if (!goals.is_array() || goals.empty())
    config_fail(where + ".goals", "expected a nonempty array");
  for (size_t i = 0; i < goals.size(); ++i) {
    const std::string gw = where + ".goals[" + std::to_string(i) + "]";
    const Json& ge = goals[i];
    reject_unknown_keys(ge, {"position", "rpy", "dwell"}, gw);
    GoalWaypoint wp;
    wp.pose.translation = get_vec3(ge, "position", gw);
    if (ge.contains("rpy")) {
      const Vec3 rpy = get_vec3(ge, "rpy", gw);
      wp.pose.rotation = rpy_to_rotation(rpy.x(), rpy.y(), rpy.z());
    }
    wp.dwell = get_number(ge, "dwell", gw, wp.dwell);
    if (!(wp.dwell >= 0.0)) config_fail(gw + ".dwell", "negative dwell");
    cfg.goals.push_back(wp);
  }

  cfg.goal_speed = get_number(j, "goal_speed", where, cfg.goal_speed);
  if (cfg.goal_speed < 0.0) config_fail(where + ".goal_speed", "negative speed");

  if (j.contains("success")) {
    const Json& s = j["success"];
    reject_unknown_keys(s, {"pos_tol", "rot_tol"}, where + ".success");
    cfg.success.pos_tol = get_number(s, "pos_tol", where + ".success", cfg.success.pos_tol);
    cfg.success.rot_tol = get_number(s, "rot_tol", where + ".success", cfg.success.rot_tol);
    if (!(cfg.success.pos_tol > 0.0) || !(cfg.success.rot_tol > 0.0))
      config_fail(where + ".success", "tolerances must be positive");
  }

  if (j.contains("obstacles")) {
    const Json& obs = j["obstacles"];
    if (!obs.is_array()) config_fail(where + ".obstacles", "expected an array");
    std::set<std::string> ids;
    for (size_t i = 0; i < obs.size(); ++i) {
      const std::string ow = where + ".obstacles[" + std::to_string(i) + "]";
      const Json& oe = obs[i];
      reject_unknown_keys(oe, {"id", "radius", "motion", "active_from", "active_until",
                               "z_floor"},
                          ow);
      ScriptedObstacle so;
      so.id = get_string(oe, "id", ow);
      if (!ids.insert(so.id).second) config_fail(ow + ".id", "duplicate id '" + so.id + "'");
      so.radius = get_number(require(oe, "radius", ow), ow + ".radius");
      if (!(so.radius > 0.0)) config_fail(ow + ".radius", "must be positive");
      so.script = motion_from_json(require(oe, "motion", ow), ow + ".motion");
      so.script.active_from = get_number(oe, "active_from", ow, -kInf);
      so.script.active_until = get_number(oe, "active_until", ow, kInf);
      so.z_floor = get_number(oe, "z_floor", ow, -kInf);
      try {
        so.script.validate();
      } catch (const std::exception& e) {
        config_fail(ow, e.what());
      }
      cfg.obstacles.push_back(std::move(so));
    }
  }

  if (j.contains("controller"))
    controller_from_json(cfg.params, j["controller"], where + ".controller");

  cfg.dt = get_number(j, "dt", where, cfg.dt);
  cfg.horizon = get_number(j, "horizon", where, cfg.horizon);
  cfg.seed = static_cast<unsigned>(get_int(j, "seed", where, 0));
  if (j.contains("out_dir")) cfg.out_dir = get_string(j, "out_dir", where);

  cfg.validate();
  return cfg;
}

inline void ScenarioConfig::validate() const {
  if (name.empty()) detail::config_fail("scenario", "empty name");
  if (goals.empty()) detail::config_fail("scenario", "no goals");
  if (!(dt > 0.0) || !(horizon > 0.0))
    detail::config_fail("scenario", "dt and horizon must be positive");
  if (horizon < dt) detail::config_fail("scenario", "horizon shorter than dt");
  try {
    robot.validate();
    start.validate();
    params.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    detail::config_fail("scenario", e.what());
  }
  if (start.arm_dof() != robot.arm_dof())
    detail::config_fail("scenario", "start arm size does not match robot");
  for (const auto& g : goals)
    if (!g.pose.translation.allFinite() || !g.pose.is_orthonormal(1e-6))
      detail::config_fail("scenario", "invalid goal pose");
}

inline RunConfig ScenarioConfig::to_run_config() const {
  RunConfig rc;
  rc.name = name;
  rc.model = robot;
  rc.params = params;
  rc.start = start;
  rc.waypoints = goals;
  rc.goal_speed = goal_speed;
  rc.success = success;
  rc.obstacles = obstacles;
  rc.dt = dt;
  rc.horizon = horizon;
  return rc;
}

/// Normalized serialization with every field explicit. parse -> serialize is
/// a fixed point: serializing a config parsed from this output reproduces it
/// byte for byte.
inline Json scenario_to_json(const ScenarioConfig& cfg) {
  Json j;
  j["schema"] = "scenario-v1";
  j["name"] = cfg.name;
  j["robot"] = cfg.robot_ref;
  Json start;
  start["base_x"] = cfg.start.base_x;
  start["base_y"] = cfg.start.base_y;
  start["heading"] = cfg.start.base_heading;
  start["travel"] = cfg.start.base_travel;
  start["arm"] = std::vector<double>(cfg.start.arm.data(),
                                     cfg.start.arm.data() + cfg.start.arm.size());
  j["start"] = start;
  Json goals = Json::array();
  for (const auto& g : cfg.goals) {
    Json ge;
    ge["position"] = {g.pose.translation.x(), g.pose.translation.y(),
                      g.pose.translation.z()};
    const Mat3& r = g.pose.rotation;
    // Recover roll/pitch/yaw from the rotation (Rz * Ry * Rx convention).
    const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    double roll, yaw;
    if (std::abs(std::cos(pitch)) > 1e-9) {
      roll = std::atan2(r(2, 1), r(2, 2));
      yaw = std::atan2(r(1, 0), r(0, 0));
    } else {
      roll = std::atan2(-r(1, 2), r(1, 1));
      yaw = 0.0;
    }
    ge["rpy"] = {roll, pitch, yaw};
    ge["dwell"] = g.dwell;
    goals.push_back(ge);
  }
  j["goals"] = goals;
  j["goal_speed"] = cfg.goal_speed;
  j["success"] = {{"pos_tol", cfg.success.pos_tol}, {"rot_tol", cfg.success.rot_tol}};
  Json obs = Json::array();
  for (const auto& o : cfg.obstacles) {
    Json oe;
    oe["id"] = o.id;
    oe["radius"] = o.radius;
    oe["motion"] = motion_to_json(o.script);
    if (o.script.active_from > -kInf) oe["active_from"] = o.script.active_from;
    if (o.script.active_until < kInf) oe["active_until"] = o.script.active_until;
    if (o.z_floor > -kInf) oe["z_floor"] = o.z_floor;
    obs.push_back(oe);
  }
  j["obstacles"] = obs;
  Json ctl;
  ctl["mode"] = control_mode_name(cfg.params.mode);
  ctl["servo_gain"] = std::vector<double>(cfg.params.servo_gain.data(),
                                          cfg.params.servo_gain.data() + 6);
  const ControllerParams& p = cfg.params;
  ctl["k_sigma"] = p.k_sigma;
  ctl["t_sigma"] = p.t_sigma;
  ctl["k_lambda_m"] = p.k_lambda_m;
  ctl["eps_floor"] = p.eps_floor;
  ctl["k_manip"] = p.k_manip;
  ctl["k_head"] = p.k_head;
  ctl["linear_cap"] = p.linear_cap;
  ctl["angular_cap"] = p.angular_cap;
  ctl["far_field_clearance"] = p.far_field_clearance;
  ctl["weight_floor"] = p.weight_floor;
  ctl["qp_tol"] = p.qp_tol;
  ctl["qp_max_iter"] = p.qp_max_iter;
  ctl["k_ot"] = p.safety.k_ot;
  ctl["k_ro"] = p.safety.k_ro;
  ctl["alpha_gain"] = p.safety.alpha_gain;
  ctl["d_b"] = p.safety.d_b;
  ctl["d_m"] = p.safety.d_m;
  ctl["cap_m"] = p.safety.cap_m;
  ctl["k_b1"] = p.safety.k_b1;
  ctl["k_b2"] = p.safety.k_b2;
  ctl["k_b3"] = p.safety.k_b3;
  ctl["k_m1"] = p.safety.k_m1;
  ctl["k_m2"] = p.safety.k_m2;
  ctl["k_m3"] = p.safety.k_m3;
  ctl["gamma_jb"] = p.safety.gamma_jb;
  ctl["gamma_mr"] = p.safety.gamma_mr;
  ctl["tangent_samples"] = p.safety.tangent_samples;
  ctl["softmin_sharpness"] = p.safety.softmin_sharpness;
  ctl["aci_gain_floor"] = p.safety.aci_gain_floor;
  j["controller"] = ctl;
  j["dt"] = cfg.dt;
  j["horizon"] = cfg.horizon;
  j["seed"] = cfg.seed;
  if (!cfg.out_dir.empty()) j["out_dir"] = cfg.out_dir;
  return j;
}

inline ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) detail::config_fail("scenario", "cannot open " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    detail::config_fail(path.filename().string(), std::string("parse error: ") + e.what());
  }
  return scenario_from_json(j, path.parent_path(), path.filename().string());
}

/// Applies one "key=value" override from the command line. Recognizes the
/// scenario-level keys dt, horizon, goal_speed, seed and mode, plus every
/// flat controller/safety parameter name.
inline void apply_override(ScenarioConfig& cfg, const std::string& key,
                           const std::string& value) {
  if (key == "mode") {
    try {
      cfg.params.mode = control_mode_from_string(value);
    } catch (const std::exception& e) {
      detail::config_fail("--set mode", e.what());
    }
    return;
  }
  double num = 0.0;
  try {
    size_t pos = 0;
    num = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    detail::config_fail("--set " + key, "cannot parse '" + value + "' as a number");
  }
  if (key == "dt")
    cfg.dt = num;
  else if (key == "horizon")
    cfg.horizon = num;
  else if (key == "goal_speed")
    cfg.goal_speed = num;
  else if (key == "seed")
    cfg.seed = static_cast<unsigned>(num);
  else if (!set_controller_field(cfg.params, key, num))
    detail::config_fail("--set", "unknown parameter '" + key + "'");
  cfg.validate();
}

/// FNV-1a hash over the canonical dump of every effective parameter, so two
/// runs share a hash exactly when their parameter sets agree.
inline std::string parameter_hash(const ScenarioConfig& cfg) {
  Json ctl = scenario_to_json(cfg)["controller"];
  std::string blob = ctl.dump();
  char extra[128];
  std::snprintf(extra, sizeof(extra), "|dt=%.17g|horizon=%.17g|goal_speed=%.17g|seed=%u",
                cfg.dt, cfg.horizon, cfg.goal_speed, cfg.seed);
  blob += extra;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : blob) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Suite files ("suite-v1").

struct SuiteConfig {
  std::string name;
  std::vector<std::string> scenarios;  // file paths or bundled names
  std::vector<ControlMode> modes = {ControlMode::Sewb};
};

inline SuiteConfig suite_from_json(const Json& j, const std::string& where = "suite") {
  using namespace detail;
  reject_unknown_keys(j, {"schema", "name", "scenarios", "modes"}, where);
  if (get_string(j, "schema", where) != "suite-v1")
    config_fail(where + ".schema", "expected \"suite-v1\"");
  SuiteConfig s;
  s.name = get_string(j, "name", where);
  const Json& list = require(j, "scenarios", where);
  if (!list.is_array() || list.empty())
    config_fail(where + ".scenarios", "expected a nonempty array");
  for (const auto& e : list) {
    if (!e.is_string()) config_fail(where + ".scenarios", "expected strings");
    s.scenarios.push_back(e.get<std::string>());
  }
  if (j.contains("modes")) {
    s.modes.clear();
    const Json& modes = j["modes"];
    if (!modes.is_array() || modes.empty())
      config_fail(where + ".modes", "expected a nonempty array");
    for (const auto& e : modes) {
      if (!e.is_string()) config_fail(where + ".modes", "expected strings");
      try {
        s.modes.push_back(control_mode_from_string(e.get<std::string>()));
      } catch (const std::exception& ex) {
        config_fail(where + ".modes", ex.what());
      }
    }
  }
  return s;
}

inline SuiteConfig load_suite_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) detail::config_fail("suite", "cannot open " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    detail::config_fail(path.filename().string(), std::string("parse error: ") + e.what());
  }
  return suite_from_json(j, path.filename().string());
}

}  // namespace wbc
