#pragma once

// Dense strictly convex QP solver (dual active set). The per-cycle problems
// are small (n ~ 15 variables, tens of rows) with a diagonal positive
// definite Hessian, so every iteration refactors the active-set Schur
// complement from scratch; no incremental factorization bookkeeping.
//
//   minimize    1/2 u^T H u + g^T u
//   subject to  A_eq u = b_eq,  A_in u <= b_in,  lower <= u <= upper
//
// The method keeps u at the optimum of the equality-constrained subproblem
// over the current active set, adds the most violated row each iteration,
// and drops blockers whose multipliers would turn negative. A candidate row
// that cannot be satisfied once all blockers are exhausted certifies
// infeasibility, reported with the conflicting rows.

#include <wbc/core.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

namespace wbc {

struct QpProblem {
  VecX h_diag;  // strictly positive diagonal of H
  VecX g;
  MatX eq_a;  // m_eq x n
  VecX eq_b;
  MatX in_a;  // m_in x n, rows a^T u <= b
  VecX in_b;
  VecX lower;  // box bounds; +-inf entries mean unbounded
  VecX upper;

  int vars() const { return static_cast<int>(h_diag.size()); }

  void validate() const {
    const int n = vars();
    if (n == 0) throw std::invalid_argument("QpProblem: empty");
    if ((h_diag.array() <= 0.0).any())
      throw std::invalid_argument("QpProblem: H diagonal must be positive");
    if (g.size() != n || lower.size() != n || upper.size() != n)
      throw std::invalid_argument("QpProblem: vector size mismatch");
    if (eq_a.rows() != eq_b.size() || (eq_a.rows() > 0 && eq_a.cols() != n))
      throw std::invalid_argument("QpProblem: equality size mismatch");
    if (in_a.rows() != in_b.size() || (in_a.rows() > 0 && in_a.cols() != n))
      throw std::invalid_argument("QpProblem: inequality size mismatch");
    if (!h_diag.allFinite() || !g.allFinite() ||
        (eq_a.size() > 0 && !eq_a.allFinite()) || !eq_b.allFinite() ||
        (in_a.size() > 0 && !in_a.allFinite()) || !in_b.allFinite())
      throw std::invalid_argument("QpProblem: non-finite data");
  }

  double objective(const VecX& u) const {
    return 0.5 * u.dot(h_diag.asDiagonal() * u) + g.dot(u);
  }
};

enum class QpStatus { Optimal, MaxIterations, Infeasible };

inline const char* qp_status_name(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::MaxIterations: return "max-iterations";
    case QpStatus::Infeasible: return "infeasible";
  }
  return "?";
}

/// Inequality rows are indexed with user rows first, then the finite box
/// bounds in variable order (upper before lower per variable).
struct QpSolution {
  VecX u;
  QpStatus status = QpStatus::Optimal;
  int iterations = 0;
  double solve_ms = 0.0;
  std::vector<int> active;  // tight inequality rows at the solution
  VecX eq_duals;            // unrestricted sign
  VecX in_duals;            // >= 0, combined inequality indexing
  std::vector<int> conflict;  // infeasibility certificate rows
  double eq_residual = 0.0;
  double in_residual = 0.0;
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
};

struct QpOptions {
  double tol = 1e-6;
  int max_iter = 4000;
  std::vector<int> warm_rows;  // combined inequality indices tried first
};

namespace detail {

struct BoxRow {
  int var;
  double sign;  // +1: u_var <= upper; -1: -u_var <= -lower
  double bound;
};

inline std::vector<BoxRow> box_rows(const QpProblem& p) {
  std::vector<BoxRow> rows;
  for (int v = 0; v < p.vars(); ++v) {
    if (std::isfinite(p.upper(v))) rows.push_back({v, 1.0, p.upper(v)});
    if (std::isfinite(p.lower(v))) rows.push_back({v, -1.0, -p.lower(v)});
  }
  return rows;
}

}  // namespace detail

struct KktResiduals {
  double eq = 0.0;
  double ineq = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
};

/// Residuals for a given point and multipliers (combined inequality
/// indexing; missing trailing duals are treated as zero).
inline KktResiduals kkt_residuals_with_duals(const QpProblem& p, const VecX& u,
                                             const VecX& eq_duals,
                                             const VecX& in_duals) {
  KktResiduals r;
  if (p.eq_a.rows() > 0) r.eq = (p.eq_a * u - p.eq_b).cwiseAbs().maxCoeff();
  VecX grad = p.h_diag.asDiagonal() * u + p.g;
  if (eq_duals.size() == p.eq_a.rows() && p.eq_a.rows() > 0)
    grad += p.eq_a.transpose() * eq_duals;
  const auto box = detail::box_rows(p);
  const int m_in = static_cast<int>(p.in_a.rows());
  for (int i = 0; i < m_in; ++i) {
    const double slack = p.in_b(i) - p.in_a.row(i).dot(u);
    r.ineq = std::max(r.ineq, -slack);
    if (i < static_cast<int>(in_duals.size())) {
      grad += in_duals(i) * p.in_a.row(i).transpose();
      r.complementarity = std::max(r.complementarity, std::abs(in_duals(i) * slack));
    }
  }
  for (size_t k = 0; k < box.size(); ++k) {
    const double slack = box[k].bound - box[k].sign * u(box[k].var);
    r.ineq = std::max(r.ineq, -slack);
    const int idx = m_in + static_cast<int>(k);
    if (idx < static_cast<int>(in_duals.size())) {
      grad(box[k].var) += in_duals(idx) * box[k].sign;
      r.complementarity = std::max(r.complementarity, std::abs(in_duals(idx) * slack));
    }
  }
  r.stationarity = grad.cwiseAbs().maxCoeff();
  return r;
}

/// Diagnostic residuals for a bare point: multipliers are recovered by least
/// squares on the rows tight at u (negative inequality multipliers clamped).
inline KktResiduals kkt_residuals(const QpProblem& p, const VecX& u,
                                  double tight_tol = 1e-6) {
  const auto box = detail::box_rows(p);
  const int m_eq = static_cast<int>(p.eq_a.rows());
  const int m_in = static_cast<int>(p.in_a.rows());
  std::vector<int> tight;
  for (int i = 0; i < m_in; ++i)
    if (std::abs(p.in_b(i) - p.in_a.row(i).dot(u)) <= tight_tol) tight.push_back(i);
  for (size_t k = 0; k < box.size(); ++k)
    if (std::abs(box[k].bound - box[k].sign * u(box[k].var)) <= tight_tol)
      tight.push_back(m_in + static_cast<int>(k));

  const int cols = m_eq + static_cast<int>(tight.size());
  VecX eq_duals = VecX::Zero(m_eq);
  VecX in_duals = VecX::Zero(m_in + static_cast<int>(box.size()));
  if (cols > 0) {
    MatX at = MatX::Zero(p.vars(), cols);
    for (int j = 0; j < m_eq; ++j) at.col(j) = p.eq_a.row(j).transpose();
    for (size_t k = 0; k < tight.size(); ++k) {
      const int idx = tight[k];
      if (idx < m_in) {
        at.col(m_eq + static_cast<int>(k)) = p.in_a.row(idx).transpose();
      } else {
        at(box[idx - m_in].var, m_eq + static_cast<int>(k)) = box[idx - m_in].sign;
      }
    }
    const VecX grad = -(p.h_diag.asDiagonal() * u + p.g);
    const VecX lam = at.colPivHouseholderQr().solve(grad);
    eq_duals = lam.head(m_eq);
    for (size_t k = 0; k < tight.size(); ++k)
      in_duals(tight[k]) = std::max(0.0, lam(m_eq + static_cast<int>(k)));
  }
  return kkt_residuals_with_duals(p, u, eq_duals, in_duals);
}

/// Solves the QP. Deterministic: identical inputs (including warm hints)
/// give identical outputs.
inline QpSolution qp_solve(const QpProblem& p, const QpOptions& opt = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  p.validate();
  const int n = p.vars();
  const int m_eq = static_cast<int>(p.eq_a.rows());
  const int m_in = static_cast<int>(p.in_a.rows());
  const auto box = detail::box_rows(p);
  const int m_all = m_in + static_cast<int>(box.size());
  const VecX hi = p.h_diag.cwiseInverse();

  auto ineq_row = [&](int i) -> VecX {
    if (i < m_in) return p.in_a.row(i).transpose();
    VecX a = VecX::Zero(n);
    a(box[i - m_in].var) = box[i - m_in].sign;
    return a;
  };
  auto ineq_value = [&](int i, const VecX& u) {
    if (i < m_in) return p.in_a.row(i).dot(u) - p.in_b(i);
    return box[i - m_in].sign * u(box[i - m_in].var) - box[i - m_in].bound;
  };

  QpSolution sol;
  sol.u = -(hi.asDiagonal() * p.g);
  sol.eq_duals = VecX::Zero(m_eq);
  sol.in_duals = VecX::Zero(m_all);

  // Active set: retained equality rows occupy the prefix and never drop.
  std::vector<VecX> act_rows;
  std::vector<double> act_duals;   // aligned with act_rows
  std::vector<int> act_ineq;       // combined index per inequality member
  std::vector<int> eq_slot;        // per equality row: position or -1
  size_t n_eq = 0;

  // Step direction for a candidate row a_c against the active set:
  // solve H z + A^T nu = a_c, A z = 0 via the Schur complement A H^-1 A^T.
  auto compute_step = [&](const VecX& a_c, VecX& z, VecX& nu) {
    const int w = static_cast<int>(act_rows.size());
    if (w == 0) {
      z = hi.asDiagonal() * a_c;
      nu.resize(0);
      return;
    }
    MatX aw(w, n);
    for (int j = 0; j < w; ++j) aw.row(j) = act_rows[j].transpose();
    const MatX awhi = aw * hi.asDiagonal();
    nu = (awhi * aw.transpose()).llt().solve(awhi * a_c);
    z = hi.asDiagonal() * (a_c - aw.transpose() * nu);
  };

  bool infeasible = false;
  bool out_of_iterations = false;

  // Drives one candidate row into feasibility. The row is pre-oriented so
  // its violation is nonnegative; acc carries a multiplier accumulated in
  // earlier partial processing of the same row.
  auto drive_in = [&](const VecX& a_c, double bound, bool is_eq, int ineq_idx,
                      double acc) {
    while (true) {
      const double viol = a_c.dot(sol.u) - bound;
      if (viol <= opt.tol) {
        if (is_eq) {
          // Keep satisfied equality rows pinned unless linearly dependent
          // on the rows already active.
          VecX z, nu;
          compute_step(a_c, z, nu);
          if (a_c.dot(z) > 1e-10) {
            act_rows.insert(act_rows.begin() + n_eq, a_c);
            act_duals.insert(act_duals.begin() + n_eq, acc);
            eq_slot.push_back(static_cast<int>(n_eq));
            ++n_eq;
          } else {
            eq_slot.push_back(-1);
          }
        } else if (ineq_idx >= 0 && acc > 0.0) {
          act_rows.push_back(a_c);
          act_duals.push_back(acc);
          act_ineq.push_back(ineq_idx);
        }
        return;
      }
      if (++sol.iterations > opt.max_iter) {
        out_of_iterations = true;
        return;
      }
      VecX z, nu;
      compute_step(a_c, z, nu);
      const double curvature = a_c.dot(z);

      double t1 = kInf;
      int blocker = -1;
      for (size_t j = n_eq; j < act_rows.size(); ++j) {
        const double nu_j = nu(static_cast<int>(j));
        if (nu_j > 1e-12) {
          const double ratio = act_duals[j] / nu_j;
          if (ratio < t1) {
            t1 = ratio;
            blocker = static_cast<int>(j);
          }
        }
      }
      const double t2 = curvature > 1e-12 ? viol / curvature : kInf;
      if (!std::isfinite(std::min(t1, t2))) {
        infeasible = true;
        if (ineq_idx >= 0) sol.conflict.push_back(ineq_idx);
        for (size_t j = n_eq; j < act_rows.size(); ++j)
          if (std::abs(nu(static_cast<int>(j))) > 1e-12)
            sol.conflict.push_back(act_ineq[j - n_eq]);
        return;
      }
      const double t = std::min(t1, t2);
      sol.u -= t * z;
      for (size_t j = 0; j < act_rows.size(); ++j)
        act_duals[j] -= t * nu(static_cast<int>(j));
      acc += t;
      if (blocker >= 0 && t1 < t2) {
        const size_t j = static_cast<size_t>(blocker);
        act_rows.erase(act_rows.begin() + j);
        act_duals.erase(act_duals.begin() + j);
        act_ineq.erase(act_ineq.begin() + (j - n_eq));
        continue;  // retry the same candidate against the smaller set
      }
      // Full step: the candidate is tight; make it active.
      if (is_eq) {
        act_rows.insert(act_rows.begin() + n_eq, a_c);
        act_duals.insert(act_duals.begin() + n_eq, acc);
        eq_slot.push_back(static_cast<int>(n_eq));
        ++n_eq;
      } else {
        act_rows.push_back(a_c);
        act_duals.push_back(acc);
        act_ineq.push_back(ineq_idx);
      }
      return;
    }
  };

  // Equality rows first, each oriented so its violation is nonnegative.
  std::vector<double> eq_sign(m_eq, 1.0);
  for (int k = 0; k < m_eq && !infeasible && !out_of_iterations; ++k) {
    const VecX a = p.eq_a.row(k).transpose();
    if (a.dot(sol.u) - p.eq_b(k) < 0.0) eq_sign[k] = -1.0;
    drive_in(eq_sign[k] * a, eq_sign[k] * p.eq_b(k), true, -1, 0.0);
  }

  // Main loop: warm-hinted violated rows first, then the most violated row.
  while (!infeasible && !out_of_iterations) {
    int cand = -1;
    for (int w : opt.warm_rows) {
      if (w >= 0 && w < m_all && ineq_value(w, sol.u) > opt.tol) {
        cand = w;
        break;
      }
    }
    if (cand < 0) {
      double worst = opt.tol;
      for (int i = 0; i < m_all; ++i) {
        const double v = ineq_value(i, sol.u);
        if (v > worst) {
          worst = v;
          cand = i;
        }
      }
    }
    if (cand < 0) break;  // no violated rows: optimal
    // If the candidate is already a (numerically drifted) member, detach it
    // and resume from its stored multiplier.
    double acc = 0.0;
    for (size_t j = 0; j < act_ineq.size(); ++j)
      if (act_ineq[j] == cand) {
        acc = act_duals[n_eq + j];
        act_rows.erase(act_rows.begin() + n_eq + j);
        act_duals.erase(act_duals.begin() + n_eq + j);
        act_ineq.erase(act_ineq.begin() + j);
        break;
      }
    const double bound = cand < m_in ? p.in_b(cand) : box[cand - m_in].bound;
    drive_in(ineq_row(cand), bound, false, cand, acc);
  }

  if (infeasible)
    sol.status = QpStatus::Infeasible;
  else if (out_of_iterations)
    sol.status = QpStatus::MaxIterations;

  for (int k = 0; k < m_eq; ++k)
    if (k < static_cast<int>(eq_slot.size()) && eq_slot[k] >= 0)
      sol.eq_duals(k) = eq_sign[k] * act_duals[eq_slot[k]];
  for (size_t j = 0; j < act_ineq.size(); ++j) {
    sol.in_duals(act_ineq[j]) = act_duals[n_eq + j];
    sol.active.push_back(act_ineq[j]);
  }
  std::sort(sol.active.begin(), sol.active.end());
  std::sort(sol.conflict.begin(), sol.conflict.end());
  sol.conflict.erase(std::unique(sol.conflict.begin(), sol.conflict.end()),
                     sol.conflict.end());

  const KktResiduals r =
      kkt_residuals_with_duals(p, sol.u, sol.eq_duals, sol.in_duals);
  sol.eq_residual = r.eq;
  sol.in_residual = r.ineq;
  sol.stationarity_residual = r.stationarity;
  sol.complementarity_residual = r.complementarity;
  sol.solve_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t_start)
                     .count();
  return sol;
}

/// Plain-text dump for offline reproduction of a problem instance.
inline void dump_qp(const QpProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_qp: cannot open " + path);
  out << std::setprecision(17);
  const auto vec = [&out](const char* name, const VecX& v) {
    out << name << " " << v.size();
    for (int i = 0; i < v.size(); ++i) out << " " << v(i);
    out << "\n";
  };
  const auto mat = [&out](const char* name, const MatX& m) {
    out << name << " " << m.rows() << " " << m.cols();
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) out << " " << m(i, j);
    out << "\n";
  };
  out << "qp-dump-v1\n";
  vec("h", p.h_diag);
  vec("g", p.g);
  mat("eq_a", p.eq_a);
  vec("eq_b", p.eq_b);
  mat("in_a", p.in_a);
  vec("in_b", p.in_b);
  vec("lower", p.lower);
  vec("upper", p.upper);
}

inline QpProblem load_qp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_qp: cannot open " + path);
  std::string header;
  in >> header;
  if (header != "qp-dump-v1") throw std::runtime_error("load_qp: bad header");
  QpProblem p;
  // Stream extraction rejects "inf" tokens, which box bounds contain;
  // strtod accepts them.
  const auto num = [&in]() {
    std::string tok;
    in >> tok;
    return std::strtod(tok.c_str(), nullptr);
  };
  const auto vec = [&](VecX& v) {
    std::string name;
    int size;
    in >> name >> size;
    v.resize(size);
    for (int i = 0; i < size; ++i) v(i) = num();
  };
  const auto mat = [&](MatX& m) {
    std::string name;
    int rows, cols;
    in >> name >> rows >> cols;
    m.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = num();
  };
  vec(p.h_diag);
  vec(p.g);
  mat(p.eq_a);
  vec(p.eq_b);
  mat(p.in_a);
  vec(p.in_b);
  vec(p.lower);
  vec(p.upper);
  if (!in) throw std::runtime_error("load_qp: truncated file");
  return p;
}

}  // namespace wbc
