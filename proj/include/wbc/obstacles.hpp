#pragma once

// Spherical obstacles and the time-scripted motions that drive them in
// scenarios: static, constant velocity, piecewise-linear waypoints, and a
// swinging pole modeled by its head sphere.

#include <wbc/core.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace wbc {

/// One spherical obstacle at a time instant.
struct ObstacleState {
  std::string id;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double radius = 0.1;

  void validate() const {
    if (!(radius > 0.0)) throw std::invalid_argument("ObstacleState: radius <= 0");
    if (!position.allFinite() || !velocity.allFinite())
      throw std::invalid_argument("ObstacleState: non-finite entry");
  }
};

/// Time-parameterized obstacle motion. Evaluation is a pure function of t.
struct MotionScript {
  struct Static {
    Vec3 position = Vec3::Zero();
  };
  struct ConstVel {
    Vec3 start = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double t0 = 0.0;  // position = start + velocity * (t - t0)
  };
  struct Waypoints {
    std::vector<double> times;  // strictly increasing
    std::vector<Vec3> points;   // same length; linear between, clamped outside
  };
  /// Pole swing: a head sphere at the tip of a rigid arm of given length,
  /// angle = base_angle + amplitude * sin(omega * (t - t0)) in the plane
  /// spanned by axis_a (angle 0) and axis_b (angle pi/2) about pivot.
  struct Oscillation {
    Vec3 pivot = Vec3::Zero();
    Vec3 axis_a = Vec3::UnitX();
    Vec3 axis_b = Vec3::UnitZ();
    double length = 1.0;
    double base_angle = 0.0;
    double amplitude = 1.0;
    double omega = 1.0;
    double t0 = 0.0;
  };

  std::variant<Static, ConstVel, Waypoints, Oscillation> motion = Static{};
  double active_from = -kInf;
  double active_until = kInf;

  struct Sample {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    bool active = true;
  };

  Sample sample(double t) const {
    Sample s;
    s.active = (t >= active_from && t <= active_until);
    if (const auto* m = std::get_if<Static>(&motion)) {
      s.position = m->position;
    } else if (const auto* m = std::get_if<ConstVel>(&motion)) {
      s.position = m->start + m->velocity * (t - m->t0);
      s.velocity = m->velocity;
    } else if (const auto* m = std::get_if<Waypoints>(&motion)) {
      const auto& ts = m->times;
      const auto& ps = m->points;
      if (ts.empty()) throw std::invalid_argument("MotionScript: empty waypoint list");
      if (t <= ts.front()) {
        s.position = ps.front();
      } else if (t >= ts.back()) {
        s.position = ps.back();
      } else {
        auto it = std::upper_bound(ts.begin(), ts.end(), t);
        const size_t i = static_cast<size_t>(it - ts.begin()) - 1;
        const double span = ts[i + 1] - ts[i];
        const double w = (t - ts[i]) / span;
        s.position = (1.0 - w) * ps[i] + w * ps[i + 1];
        s.velocity = (ps[i + 1] - ps[i]) / span;
      }
    } else {
      const auto& osc = std::get<Oscillation>(motion);
      const double phase = osc.omega * (t - osc.t0);
      const double ang = osc.base_angle + osc.amplitude * std::sin(phase);
      const double rate = osc.amplitude * osc.omega * std::cos(phase);
      const Vec3 dir = std::cos(ang) * osc.axis_a + std::sin(ang) * osc.axis_b;
      const Vec3 tangent = -std::sin(ang) * osc.axis_a + std::cos(ang) * osc.axis_b;
      s.position = osc.pivot + osc.length * dir;
      s.velocity = osc.length * rate * tangent;
    }
    return s;
  }

  void validate() const {
    if (const auto* m = std::get_if<Waypoints>(&motion)) {
      if (m->times.size() != m->points.size() || m->times.empty())
        throw std::invalid_argument("MotionScript: waypoint time/point length mismatch");
      for (size_t i = 1; i < m->times.size(); ++i)
        if (!(m->times[i] > m->times[i - 1]))
          throw std::invalid_argument("MotionScript: waypoint times not increasing");
    } else if (const auto* m = std::get_if<Oscillation>(&motion)) {
      if (!(m->length > 0.0)) throw std::invalid_argument("MotionScript: pole length <= 0");
      if (std::abs(m->axis_a.norm() - 1.0) > 1e-9 || std::abs(m->axis_b.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("MotionScript: oscillation axes must be unit");
    }
  }
};

/// Scenario-level obstacle: a script plus a deactivation floor (an obstacle
/// whose scripted z drops below z_floor stops generating constraints, e.g. a
/// thrown ball that has landed).
struct ScriptedObstacle {
  std::string id;
  double radius = 0.1;
  MotionScript script;
  double z_floor = -kInf;

  /// Evaluates to a live ObstacleState, or nullopt when inactive.
  std::optional<ObstacleState> state_at(double t) const {
    const auto s = script.sample(t);
    if (!s.active || s.position.z() < z_floor) return std::nullopt;
    ObstacleState ob;
    ob.id = id;
    ob.position = s.position;
    ob.velocity = s.velocity;
    ob.radius = radius;
    return ob;
  }
};

}  // namespace wbc
