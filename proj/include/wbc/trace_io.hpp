#pragma once

// Output writers: per-step trace CSV with a fixed documented header, the
// run summary as key=value lines, and the suite aggregate table. Infinite
// clearances (no obstacle anywhere) are written as the token "inf".

#include <wbc/sim.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace wbc {

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::string(buf);
}

}  // namespace detail

/// Column order: time, base world pose, generalized positions, commanded
/// rates, slack, pose error, scalar diagnostics, row/activation counts,
/// solver stats. The header row names every column; joint counts follow the
/// model, everything else is fixed.
inline std::string trace_csv_header(const RobotModel& model) {
  std::ostringstream os;
  os << "time,base_x,base_y,travel,heading";
  for (int i = 0; i < model.arm_dof(); ++i) os << ",arm" << i;
  for (int i = 0; i < model.dof(); ++i) os << ",qdot" << i;
  for (int i = 0; i < kTaskDim; ++i) os << ",slack" << i;
  os << ",err_px,err_py,err_pz,err_rx,err_ry,err_rz,pos_err,rot_err"
     << ",lyapunov,lyapunov_rate,min_dist,base_clearance,whole_clearance"
     << ",active_obstacles,rows,base_dcbf,base_aci,arm_dcbf,arm_aci"
     << ",tight_base_dcbf,tight_base_aci,tight_arm_dcbf,tight_arm_aci"
     << ",jb_min,mr,qp_status,qp_iterations,qp_ms,control_ms,clamped,infeasible";
  return os.str();
}

inline void write_trace_csv(std::ostream& os, const RobotModel& model,
                            const std::vector<StepTrace>& trace) {
  os << trace_csv_header(model) << "\n";
  for (const StepTrace& t : trace) {
    os << detail::fmt_double(t.time) << ',' << detail::fmt_double(t.base_x) << ','
       << detail::fmt_double(t.base_y);
    for (int i = 0; i < t.q.size(); ++i) os << ',' << detail::fmt_double(t.q(i));
    for (int i = 0; i < t.qdot.size(); ++i) os << ',' << detail::fmt_double(t.qdot(i));
    for (int i = 0; i < kTaskDim; ++i) os << ',' << detail::fmt_double(t.slack(i));
    for (int i = 0; i < kTaskDim; ++i) os << ',' << detail::fmt_double(t.pose_err(i));
    os << ',' << detail::fmt_double(t.pos_err) << ',' << detail::fmt_double(t.rot_err)
       << ',' << detail::fmt_double(t.lyapunov) << ','
       << detail::fmt_double(t.lyapunov_rate) << ',' << detail::fmt_double(t.min_dist)
       << ',' << detail::fmt_double(t.base_clearance) << ','
       << detail::fmt_double(t.whole_clearance) << ',' << t.active_obstacles << ','
       << t.rows;
    for (int i = 0; i < 4; ++i) os << ',' << t.emitted[i];
    for (int i = 0; i < 4; ++i) os << ',' << t.tight[i];
    os << ',' << detail::fmt_double(t.jb_min) << ',' << detail::fmt_double(t.mr) << ','
       << qp_status_name(t.qp_status) << ',' << t.qp_iterations << ','
       << detail::fmt_double(t.qp_ms) << ',' << detail::fmt_double(t.control_ms) << ','
       << t.clamped << ',' << (t.infeasible ? 1 : 0) << "\n";
  }
}

inline void write_summary(std::ostream& os, const RunSummary& s) {
  os << "scenario=" << s.scenario << "\n";
  os << "mode=" << s.mode << "\n";
  os << "param_hash=" << s.param_hash << "\n";
  os << "success=" << (s.success ? 1 : 0) << "\n";
  os << "completion_time=" << detail::fmt_double(s.completion_time) << "\n";
  os << "waypoints_reached=" << s.waypoints_reached << "\n";
  os << "steps=" << s.steps << "\n";
  os << "min_dist=" << detail::fmt_double(s.min_dist) << "\n";
  os << "min_dist_time=" << detail::fmt_double(s.min_dist_time) << "\n";
  os << "first_activation_time=" << detail::fmt_double(s.first_activation_time) << "\n";
  os << "jb_min=" << detail::fmt_double(s.jb_min) << "\n";
  os << "mr_min=" << detail::fmt_double(s.mr_min) << "\n";
  os << "clamp_events=" << s.clamp_events << "\n";
  os << "infeasible_cycles=" << s.infeasible_cycles << "\n";
  os << "maxiter_cycles=" << s.maxiter_cycles << "\n";
  os << "mean_qp_ms=" << detail::fmt_double(s.mean_qp_ms) << "\n";
  os << "max_qp_ms=" << detail::fmt_double(s.max_qp_ms) << "\n";
  os << "mean_control_ms=" << detail::fmt_double(s.mean_control_ms) << "\n";
  os << "max_control_ms=" << detail::fmt_double(s.max_control_ms) << "\n";
  os << "stalled=" << (s.stalled ? 1 : 0) << "\n";
  os << "max_abs_qdot=";
  for (int i = 0; i < s.max_abs_qdot.size(); ++i)
    os << (i ? " " : "") << detail::fmt_double(s.max_abs_qdot(i));
  os << "\n";
}

inline std::string aggregate_csv_header() {
  return "scenario,mode,param_hash,success,completion_time,min_dist,mean_qp_ms,"
         "mean_control_ms,infeasible_cycles,stalled";
}

inline void append_aggregate_row(std::ostream& os, const RunSummary& s) {
  os << s.scenario << ',' << s.mode << ',' << s.param_hash << ',' << (s.success ? 1 : 0)
     << ',' << detail::fmt_double(s.completion_time) << ','
     << detail::fmt_double(s.min_dist) << ',' << detail::fmt_double(s.mean_qp_ms) << ','
     << detail::fmt_double(s.mean_control_ms) << ',' << s.infeasible_cycles << ','
     << (s.stalled ? 1 : 0) << "\n";
}

/// Writes trace + summary under dir, named after scenario and mode.
/// Returns the two paths written.
inline std::pair<std::filesystem::path, std::filesystem::path> write_run_outputs(
    const std::filesystem::path& dir, const RobotModel& model, const RunResult& result) {
  std::filesystem::create_directories(dir);
  const std::string stem = result.summary.scenario + "_" + result.summary.mode;
  const auto trace_path = dir / (stem + "_trace.csv");
  const auto summary_path = dir / (stem + "_summary.txt");
  {
    std::ofstream os(trace_path);
    if (!os) throw std::runtime_error("cannot write " + trace_path.string());
    write_trace_csv(os, model, result.trace);
  }
  {
    std::ofstream os(summary_path);
    if (!os) throw std::runtime_error("cannot write " + summary_path.string());
    write_summary(os, result.summary);
  }
  return {trace_path, summary_path};
}

}  // namespace wbc
