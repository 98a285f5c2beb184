#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "nctrl/types.hpp"

namespace nctrl {

/// Nodes 0 = τ₀ < … < τ_K = ℓ. Impulse-aligned grids are piecewise uniform
/// between consecutive impulse times, with every impulse time a node.
class TimeGrid {
 public:
  TimeGrid() = default;

  explicit TimeGrid(std::vector<double> nodes, std::vector<double> impulse_times = {})
      : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw DomainError("time grid needs at least two nodes");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (!(nodes_[i] > nodes_[i - 1])) throw DomainError("time grid nodes must be strictly increasing");
      step_max_ = std::max(step_max_, nodes_[i] - nodes_[i - 1]);
    }
    impulse_aligned_ = true;
    for (double tq : impulse_times) {
      auto it = std::find(nodes_.begin(), nodes_.end(), tq);
      if (it == nodes_.end()) {
        impulse_aligned_ = false;
        impulse_nodes_.push_back(-1);
      } else {
        impulse_nodes_.push_back(static_cast<int>(it - nodes_.begin()));
      }
    }
  }

  /// Piecewise-uniform grid on [0, horizon] with spacing <= step_max and the
  /// given breakpoints as exact nodes.
  static TimeGrid uniform(double horizon, double step_max, const std::vector<double>& impulse_times = {}) {
    if (!(horizon > 0.0) || !(step_max > 0.0)) throw DomainError("horizon and step must be positive");
    std::vector<double> breaks{0.0};
    for (double tq : impulse_times) {
      if (!(tq > breaks.back()) || !(tq < horizon)) {
        throw DomainError("impulse times must be increasing inside (0, horizon)");
      }
      breaks.push_back(tq);
    }
    breaks.push_back(horizon);
    std::vector<double> nodes{0.0};
    for (std::size_t b = 1; b < breaks.size(); ++b) {
      const double a = breaks[b - 1];
      const double len = breaks[b] - a;
      const auto count = static_cast<long>(std::max(1.0, std::ceil(len / step_max - 1e-9)));
      for (long k = 1; k < count; ++k) nodes.push_back(a + len * static_cast<double>(k) / static_cast<double>(count));
      nodes.push_back(breaks[b]);
    }
    return TimeGrid(std::move(nodes), impulse_times);
  }

  const std::vector<double>& nodes() const { return nodes_; }
  double operator[](std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }
  /// Index of the last node, K.
  int last() const { return static_cast<int>(nodes_.size()) - 1; }
  double horizon() const { return nodes_.back(); }
  double step(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }
  double step_max() const { return step_max_; }
  bool impulse_aligned() const { return impulse_aligned_; }
  /// Node index of each impulse time (-1 when the grid is not aligned with it).
  const std::vector<int>& impulse_nodes() const { return impulse_nodes_; }

  /// Index i with τ_i <= t <= τ_{i+1}, clamped to [0, K-1].
  int cell(double t) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    const int i = static_cast<int>(it - nodes_.begin()) - 1;
    return std::clamp(i, 0, last() - 1);
  }

  /// Node index equal to t, if any.
  std::optional<int> node_index(double t) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
    if (it != nodes_.end() && *it == t) return static_cast<int>(it - nodes_.begin());
    return std::nullopt;
  }

  /// Trapezoid weights for ∫ over [τ_0, τ_n].
  std::vector<double> trapezoid_weights(int n) const {
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k < n; ++k) {
      const double h = step(k);
      w[k] += 0.5 * h;
      w[k + 1] += 0.5 * h;
    }
    return w;
  }

 private:
  std::vector<double> nodes_;
  std::vector<int> impulse_nodes_;
  double step_max_ = 0.0;
  bool impulse_aligned_ = true;
};

}  // namespace nctrl
