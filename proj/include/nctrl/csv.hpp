#pragma once

// CSV writers for trajectories, controls and sweep tables (%.17g).

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "nctrl/gramian.hpp"
#include "nctrl/mild_solver.hpp"
#include "nctrl/trajectory.hpp"

namespace nctrl::csv {

inline std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// t,left_limit_flag,component_1..M. Impulse nodes get two rows: the left
/// limit (flag 1) followed by the right limit (flag 0).
inline void write_trajectory(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index m = traj.values.empty() ? 0 : traj.values[0].size();
  os << "t,left_limit_flag";
  for (Eigen::Index c = 1; c <= m; ++c) os << ",component_" << c;
  os << "\n";
  auto row = [&](double t, int flag, const Vector& v) {
    os << real(t) << "," << flag;
    for (Eigen::Index c = 0; c < v.size(); ++c) os << "," << real(v(c));
    os << "\n";
  };
  for (int i = 0; i <= traj.grid.last(); ++i) {
    if (traj.is_impulse_node(i)) row(traj.grid[i], 1, traj.left(i));
    row(traj.grid[i], 0, traj.right(i));
  }
}

/// t,u_1..u_m.
inline void write_control(std::ostream& os, const TimeGrid& grid, const ControlSignal& u) {
  const Eigen::Index m = u.empty() ? 0 : u[0].size();
  os << "t";
  for (Eigen::Index c = 1; c <= m; ++c) os << ",u_" << c;
  os << "\n";
  for (std::size_t k = 0; k < u.size(); ++k) {
    os << real(grid[k]);
    for (Eigen::Index c = 0; c < u[k].size(); ++c) os << "," << real(u[k](c));
    os << "\n";
  }
}

/// epsilon,terminal_error,control_energy,outer_iterations.
inline void write_sweep(std::ostream& os, const SweepResult& sweep) {
  os << "epsilon,terminal_error,control_energy,outer_iterations\n";
  for (const auto& r : sweep.rows) {
    os << real(r.epsilon) << "," << real(r.terminal_error) << "," << real(r.control_energy) << ","
       << r.outer_iterations << "\n";
  }
}

/// epsilon,probe_1..probe_P,verdict with one row per ε.
inline void write_decay_table(std::ostream& os, const ControllabilityTest& test) {
  const std::size_t p = test.decay.empty() ? 0 : test.decay[0].size();
  os << "epsilon";
  for (std::size_t k = 1; k <= p; ++k) os << ",probe_" << k;
  os << ",verdict\n";
  const char* verdict = test.verdict() ? "positive" : "negative";
  for (std::size_t e = 0; e < test.epsilons.size(); ++e) {
    os << real(test.epsilons[e]);
    for (double v : test.decay[e]) os << "," << real(v);
    os << "," << verdict << "\n";
  }
}

/// Key,value summary of one synthesis; `steerable` reflects λ_min(Γ) > 0.
inline void write_control_summary(std::ostream& os, const ControlSynthesis& s, const GramianPackage& g) {
  os << "key,value\n";
  os << "epsilon," << real(s.epsilon) << "\n";
  os << "terminal_error," << real(s.terminal_error) << "\n";
  os << "control_energy," << real(s.control_energy) << "\n";
  os << "outer_iterations," << s.outer_iterations << "\n";
  os << "steering_identity_residual," << real(s.steering_identity_residual) << "\n";
  os << "lambda_min," << real(g.lambda_min()) << "\n";
  os << "lambda_max," << real(g.lambda_max()) << "\n";
  os << "verdict," << (g.positive_definite() ? "steerable" : "not steerable") << "\n";
}

template <class Writer>
void write_file(const std::string& path, Writer&& w) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  w(os);
}

}  // namespace nctrl::csv
