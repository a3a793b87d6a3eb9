#pragma once

// Independent re-computations used to check the library: finite
// differences, exhaustive active-set search for small QPs, brute-force
// tangent scoring and a ternary-search segment-distance oracle. Everything
// here is deliberately written from scratch rather than by calling into
// the code under test.

#include <wbc/wbc.hpp>

#include <functional>
#include <random>

namespace oracles {

using wbc::JointConfig;
using wbc::MatX;
using wbc::RobotModel;
using wbc::Vec3;
using wbc::VecX;

// ---------------------------------------------------------------------------
// Randomized states.

inline JointConfig random_config(const RobotModel& model, std::mt19937& rng,
                                 double margin = 0.15) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  JointConfig q;
  q.base_x = 2.0 * unit(rng);
  q.base_y = 2.0 * unit(rng);
  q.base_heading = 3.0 * unit(rng);
  q.base_travel = 2.0 * unit(rng);
  q.arm.resize(model.arm_dof());
  for (int i = 0; i < model.arm_dof(); ++i) {
    const double lo = model.joints[i].pos_lower;
    const double hi = model.joints[i].pos_upper;
    const double pad = margin * (hi - lo);
    std::uniform_real_distribution<double> d(lo + pad, hi - pad);
    q.arm(i) = d(rng);
  }
  return q;
}

inline Vec3 random_vec3(std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return Vec3(d(rng), d(rng), d(rng));
}

// ---------------------------------------------------------------------------
// Finite differences over generalized coordinates.

/// Central difference of a scalar function of the configuration, using the
/// same velocity semantics as the controller (travel advances the base along
/// its heading).
inline VecX fd_gradient(const std::function<double(const JointConfig&)>& f,
                        const JointConfig& q, double h = 1e-6) {
  VecX grad(q.dof());
  for (int i = 0; i < q.dof(); ++i) {
    const double fp = f(q.perturbed(i, h));
    const double fm = f(q.perturbed(i, -h));
    grad(i) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// Central difference of a vector function, one Jacobian column per joint.
inline MatX fd_jacobian(const std::function<VecX(const JointConfig&)>& f,
                        const JointConfig& q, int rows, double h = 1e-6) {
  MatX jac(rows, q.dof());
  for (int i = 0; i < q.dof(); ++i) {
    const VecX fp = f(q.perturbed(i, h));
    const VecX fm = f(q.perturbed(i, -h));
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Segment-to-point distance by ternary search (the distance is convex in the
// segment parameter).

inline double segment_point_distance_search(const Vec3& a, const Vec3& b, const Vec3& p) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const auto at = [&](double t) { return ((a + t * (b - a)) - p).norm(); };
    if (at(m1) < at(m2))
      hi = m2;
    else
      lo = m1;
  }
  return ((a + 0.5 * (lo + hi) * (b - a)) - p).norm();
}

// ---------------------------------------------------------------------------
// Exhaustive small-QP oracle. Tries every active subset of inequality rows
// (user rows followed by box rows), solves the resulting KKT system and
// keeps the best point that is primal feasible with nonnegative multipliers.

struct OracleQpResult {
  bool found = false;
  VecX u;
  double objective = std::numeric_limits<double>::infinity();
};

struct OracleRow {
  VecX a;
  double b;
};

inline std::vector<OracleRow> oracle_rows(const wbc::QpProblem& p) {
  std::vector<OracleRow> rows;
  for (int i = 0; i < p.in_a.rows(); ++i)
    rows.push_back({p.in_a.row(i).transpose(), p.in_b(i)});
  for (int i = 0; i < p.vars(); ++i) {
    if (std::isfinite(p.upper(i))) {
      VecX a = VecX::Zero(p.vars());
      a(i) = 1.0;
      rows.push_back({a, p.upper(i)});
    }
    if (std::isfinite(p.lower(i))) {
      VecX a = VecX::Zero(p.vars());
      a(i) = -1.0;
      rows.push_back({a, -p.lower(i)});
    }
  }
  return rows;
}

inline OracleQpResult qp_oracle(const wbc::QpProblem& p, double tol = 1e-7) {
  const int n = p.vars();
  const auto rows = oracle_rows(p);
  const int m = static_cast<int>(rows.size());
  const int m_eq = static_cast<int>(p.eq_a.rows());
  if (m > 20) throw std::runtime_error("qp_oracle: too many rows");

  OracleQpResult best;
  const int max_active = n - m_eq;
  std::vector<int> subset;

  const std::function<void()> evaluate = [&]() {
    const int k = static_cast<int>(subset.size());
    const int dim = n + m_eq + k;
    MatX kkt = MatX::Zero(dim, dim);
    VecX rhs = VecX::Zero(dim);
    kkt.topLeftCorner(n, n) = p.h_diag.asDiagonal();
    rhs.head(n) = -p.g;
    for (int i = 0; i < m_eq; ++i) {
      kkt.block(n + i, 0, 1, n) = p.eq_a.row(i);
      kkt.block(0, n + i, n, 1) = p.eq_a.row(i).transpose();
      rhs(n + i) = p.eq_b(i);
    }
    for (int i = 0; i < k; ++i) {
      kkt.block(n + m_eq + i, 0, 1, n) = rows[subset[i]].a.transpose();
      kkt.block(0, n + m_eq + i, n, 1) = rows[subset[i]].a;
      rhs(n + m_eq + i) = rows[subset[i]].b;
    }
    Eigen::FullPivLU<MatX> lu(kkt);
    if (!lu.isInvertible()) return;
    const VecX sol = lu.solve(rhs);
    const VecX u = sol.head(n);
    for (int i = 0; i < k; ++i)
      if (sol(n + m_eq + i) < -tol) return;  // wrong multiplier sign
    for (int i = 0; i < m_eq; ++i)
      if (std::abs(p.eq_a.row(i).dot(u) - p.eq_b(i)) > 1e-6) return;
    for (const auto& row : rows)
      if (row.a.dot(u) > row.b + 1e-6) return;  // primal infeasible
    const double obj = p.objective(u);
    if (obj < best.objective) {
      best.found = true;
      best.u = u;
      best.objective = obj;
    }
  };

  const std::function<void(int)> recurse = [&](int from) {
    evaluate();
    if (static_cast<int>(subset.size()) >= max_active) return;
    for (int i = from; i < m; ++i) {
      subset.push_back(i);
      recurse(i + 1);
      subset.pop_back();
    }
  };
  recurse(0);
  return best;
}

// ---------------------------------------------------------------------------
// Brute-force tangent objectives, recomputed from the definitions.

inline double base_tangent_objective(const wbc::Vec2& l, const JointConfig& q,
                                     const wbc::DistanceReport& report,
                                     const wbc::ObstacleState& ob,
                                     std::span<const Vec3> priors,
                                     const wbc::SafetyParams& sp) {
  const wbc::Vec2 n(report.normal.x(), report.normal.y());
  const wbc::Vec2 h(std::cos(q.base_heading), std::sin(q.base_heading));
  const wbc::Vec2 h_perp(-h.y(), h.x());
  const double cross = h.x() * l.y() - h.y() * l.x();
  const double turn = cross < 0.0 ? -1.0 : 1.0;
  double align = 0.0;
  for (const auto& prior : priors)
    align += l.x() * prior.x() + l.y() * prior.y();
  const wbc::Vec2 vob(ob.velocity.x(), ob.velocity.y());
  return -sp.k_b1 * n.dot(h_perp) * turn - sp.k_b2 * align + sp.k_b3 * std::abs(vob.dot(l));
}

inline double arm_tangent_objective(const Vec3& l, const wbc::ObstacleState& ob,
                                    std::span<const Vec3> priors,
                                    const wbc::SafetyParams& sp) {
  double align = 0.0;
  for (const auto& prior : priors) align += l.dot(prior);
  return -sp.k_m1 * std::abs(Vec3::UnitZ().dot(l)) - sp.k_m2 * align +
         sp.k_m3 * std::abs(ob.velocity.dot(l));
}

}  // namespace oracles
