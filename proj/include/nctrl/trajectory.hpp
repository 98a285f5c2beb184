#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "nctrl/problem.hpp"
#include "nctrl/time_grid.hpp"
#include "nctrl/types.hpp"

namespace nctrl {

/// Which one-sided value to read at an impulse node.
enum class Side { left, right };

/// Piecewise-continuous state path on an impulse-aligned grid. At impulse
/// nodes `values` holds the right limit and `left_limits` the left limit.
struct Trajectory {
  TimeGrid grid;
  std::vector<Vector> values;
  std::map<int, Vector> left_limits;
  Vector velocity0;

  static Trajectory constant(const TimeGrid& grid, const Vector& value, const std::vector<int>& impulse_nodes = {}) {
    Trajectory t;
    t.grid = grid;
    t.values.assign(grid.size(), value);
    for (int n : impulse_nodes) t.left_limits[n] = value;
    return t;
  }

  bool is_impulse_node(int i) const { return left_limits.count(i) != 0; }

  const Vector& left(int i) const {
    auto it = left_limits.find(i);
    return it == left_limits.end() ? values[i] : it->second;
  }
  const Vector& right(int i) const { return values[i]; }
  const Vector& at_node(int i, Side side) const { return side == Side::left ? left(i) : right(i); }

  /// x(t) with the PC convention x(t_q) = x(t_q⁻); linear between nodes.
  Vector at(double t) const {
    if (const auto i = grid.node_index(t)) return left(*i);
    const int k = grid.cell(t);
    const double a = (t - grid[k]) / grid.step(k);
    return (1.0 - a) * right(k) + a * left(k + 1);
  }

  double sup_norm() const {
    double s = 0.0;
    for (const auto& v : values) s = std::max(s, v.norm());
    for (const auto& [i, v] : left_limits) s = std::max(s, v.norm());
    return s;
  }
};

/// Sup distance over all node values and left limits.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  double d = sup_distance(a.values, b.values);
  for (const auto& [i, v] : a.left_limits) d = std::max(d, (v - b.left(i)).norm());
  return d;
}

/// x_t: θ ↦ x(t+θ), trajectory for t+θ >= 0 and history Φ below 0. The anchor
/// value at θ = 0 is read from the requested side when t is an impulse node.
inline HistorySegment segment_history(const Trajectory& traj, const HistoryFunction& hist, double t,
                                      Side side = Side::right) {
  const double ell = traj.grid.horizon();
  if (!(t >= 0.0) || !(t <= ell)) throw DomainError("history segment anchor outside [0, horizon]");
  const Trajectory* tr = &traj;
  const HistoryFunction* h = &hist;
  const auto anchor_node = traj.grid.node_index(t);
  auto lookup = [tr, h, t, side, anchor_node](double theta) -> Vector {
    const double x = t + theta;
    if (theta >= 0.0) {
      if (anchor_node) return tr->at_node(*anchor_node, side);
      return tr->at(t);
    }
    if (x < 0.0) return (*h)(x);
    return tr->at(x);
  };
  auto sup = [tr, h, t, lookup]() {
    double s = h->sup_norm(65);
    for (std::size_t k = 0; k < tr->grid.size() && tr->grid[k] < t; ++k) {
      s = std::max(s, tr->values[k].norm());
      s = std::max(s, tr->left(static_cast<int>(k)).norm());
    }
    return std::max(s, lookup(0.0).norm());
  };
  return HistorySegment(t, lookup, sup);
}

}  // namespace nctrl
