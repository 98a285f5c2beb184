#pragma once

// Mild-solution map
//
//   x(t) = -∂_sR(t,0)[Φ(0) + f2(0,Φ)] + R(t,0)[x1 + y1] - f2(t, x_t)
//          + ∫₀ᵗ R(t,s)[f1(s, x(s)) + B u(s)] ds
//          - Σ_{t_q<t} ∂_sR(t,t_q) I_q(x(t_q⁻)) + Σ_{t_q<t} R(t,t_q) J_q(x(t_q⁻))
//
// evaluated on the resolvent grid, and its Picard fixed-point solve.

#include <string>
#include <vector>

#include "nctrl/problem.hpp"
#include "nctrl/resolvent.hpp"
#include "nctrl/trajectory.hpp"
#include "nctrl/types.hpp"

namespace nctrl {

/// Grid-sampled control, one ℝᵐ value per node. Empty means u ≡ 0.
using ControlSignal = std::vector<Vector>;

/// y1 = d/dt f2(t, x_t) at t = 0. Uses the override when present, otherwise a
/// central difference with the given step; the state at small positive times
/// is extended as Φ(0) + x1·t.
inline Vector neutral_initial_velocity(const ProblemSpec& spec, double step) {
  if (spec.v0_neutral) return *spec.v0_neutral;
  if (!spec.f2) return Vector::Zero(spec.state_dim);
  const HistoryFunction* hist = &spec.history;
  const Vector phi0 = spec.history(0.0);
  const Vector x1 = spec.v0;
  auto shifted = [&](double t) {
    auto lookup = [hist, phi0, x1, t](double theta) -> Vector {
      const double x = t + std::min(theta, 0.0);
      return x <= 0.0 ? (*hist)(x) : Vector(phi0 + x1 * x);
    };
    auto sup = [hist, phi0, x1, t] { return std::max(hist->sup_norm(65), (phi0 + x1 * std::max(t, 0.0)).norm()); };
    return HistorySegment(t, lookup, sup);
  };
  return (spec.f2(step, shifted(step)) - spec.f2(-step, shifted(-step))) / (2.0 * step);
}

/// Applies the state jump at impulse q: right limit = left limit + I_q(left limit).
inline void apply_jump(const ProblemSpec& spec, Trajectory& traj, int q) {
  if (q < 1 || q > static_cast<int>(spec.impulses.size())) throw DomainError("impulse index out of range");
  const int node = traj.grid.impulse_nodes().at(static_cast<std::size_t>(q - 1));
  if (node < 0) throw DomainError("grid is not aligned with impulse " + std::to_string(q));
  const Vector left = traj.left(node);
  traj.left_limits[node] = left;
  traj.values[node] = left + spec.impulses.jump_state[static_cast<std::size_t>(q - 1)](left);
}

namespace detail {

inline void require_finite(const Vector& v, const char* term, double t) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite ") + term + " at t=" + fmt_real(t));
}

/// State-independent pieces of the mild map.
struct MildSetup {
  std::vector<Vector> free;  // -∂_sR(t,0) E(0) + R(t,0)(x1 + y1)

  MildSetup(const ProblemSpec& spec, const ResolventGrid& res) {
    const TimeGrid& g = res.grid();
    const HistoryFunction* hist = &spec.history;
    HistorySegment phi(0.0, [hist](double th) { return (*hist)(th); }, [hist] { return hist->sup_norm(); });
    const Vector e0 = spec.history(0.0) + spec.eval_f2(0.0, phi);
    const Vector e1 = spec.v0 + neutral_initial_velocity(spec, g.step(0));
    require_finite(e0, "neutral term f2", 0.0);
    require_finite(e1, "neutral initial velocity", 0.0);
    free.resize(g.size());
    for (int i = 0; i <= g.last(); ++i) free[i] = -res.dsR(i, 0) * e0 + res.R(i, 0) * e1;
  }
};

/// State-dependent integrands and impulse values for one input trajectory.
struct MildTerms {
  std::vector<Vector> g_left;   // f1 + B u at node k, left-sided
  std::vector<Vector> g_right;  // f1 + B u at node k, right-sided
  std::vector<Vector> jump_i;   // I_q(x(t_q⁻))
  std::vector<Vector> jump_j;   // J_q(x(t_q⁻))

  MildTerms(const ProblemSpec& spec, const TimeGrid& g, const Trajectory& in, const ControlSignal* control) {
    const std::size_t n = g.size();
    g_left.resize(n);
    g_right.resize(n);
    for (int k = 0; k <= g.last(); ++k) {
      Vector bu = Vector::Zero(spec.state_dim);
      if (control && !control->empty()) bu = spec.b_op * (*control)[k];
      g_right[k] = spec.eval_f1(g[k], in.right(k)) + bu;
      require_finite(g_right[k], "forcing f1 + Bu", g[k]);
      if (in.is_impulse_node(k)) {
        g_left[k] = spec.eval_f1(g[k], in.left(k)) + bu;
        require_finite(g_left[k], "forcing f1 + Bu", g[k]);
      } else {
        g_left[k] = g_right[k];
      }
    }
    for (std::size_t q = 0; q < spec.impulses.size(); ++q) {
      const Vector& xl = in.left(g.impulse_nodes()[q]);
      jump_i.push_back(spec.impulses.jump_state[q](xl));
      jump_j.push_back(spec.impulses.jump_velocity[q](xl));
      require_finite(jump_i.back(), "impulse jump I_q", spec.impulses.times[q]);
      require_finite(jump_j.back(), "impulse jump J_q", spec.impulses.times[q]);
    }
  }
};

/// Mild-map value at node i without the -f2 term (free response, convolution, impulses t_q < τ_i).
inline Vector mild_linear_part(const ProblemSpec& spec, const ResolventGrid& res, const MildSetup& setup,
                               const MildTerms& terms, int i) {
  const TimeGrid& g = res.grid();
  Vector v = setup.free[i];
  for (int k = 0; k < i; ++k) {
    const double h = 0.5 * g.step(k);
    v.noalias() += h * (res.R(i, k) * terms.g_right[k]);
    v.noalias() += h * (res.R(i, k + 1) * terms.g_left[k + 1]);
  }
  for (std::size_t q = 0; q < spec.impulses.size(); ++q) {
    const int nq = g.impulse_nodes()[q];
    if (nq >= i) break;
    v.noalias() -= res.dsR(i, nq) * terms.jump_i[q];
    v.noalias() += res.R(i, nq) * terms.jump_j[q];
  }
  return v;
}

inline void require_aligned(const ProblemSpec& spec, const TimeGrid& g) {
  if (g.impulse_nodes().size() != spec.impulses.size() || !g.impulse_aligned()) {
    throw DomainError("mild solver needs a grid aligned with every impulse time");
  }
  if (g.size() < 2) throw DomainError("grid too small");
}

}  // namespace detail

/// One application of the mild map to `in`. f2 sees the segments of the input
/// trajectory; impulse sums include only t_q < t.
inline Trajectory evaluate_mild_map(const ProblemSpec& spec, const ResolventGrid& res, const Trajectory& in,
                                    const ControlSignal& control = {}) {
  const TimeGrid& g = res.grid();
  detail::require_aligned(spec, g);
  if (!control.empty() && control.size() != g.size()) throw DomainError("control must be sampled on every grid node");
  const detail::MildSetup setup(spec, res);
  const detail::MildTerms terms(spec, g, in, &control);

  Trajectory out;
  out.grid = g;
  out.velocity0 = spec.v0;
  out.values.resize(g.size());
  out.values[0] = spec.history(0.0);

  std::vector<bool> impulse_node(g.size(), false);
  for (int n : g.impulse_nodes()) impulse_node[n] = true;

  for (int i = 1; i <= g.last(); ++i) {
    Vector v = detail::mild_linear_part(spec, res, setup, terms, i);
    if (spec.f2) {
      const Side side = impulse_node[i] ? Side::left : Side::right;
      const Vector n2 = spec.f2(g[i], segment_history(in, spec.history, g[i], side));
      detail::require_finite(n2, "neutral term f2", g[i]);
      v -= n2;
    }
    detail::require_finite(v, "mild map value", g[i]);
    out.values[i] = std::move(v);
  }
  for (int q = 1; q <= static_cast<int>(spec.impulses.size()); ++q) apply_jump(spec, out, q);
  return out;
}

/// Same as one output node of evaluate_mild_map at the horizon, with u ≡ 0.
inline Vector uncontrolled_endpoint(const ProblemSpec& spec, const ResolventGrid& res, const Trajectory& traj) {
  const TimeGrid& g = res.grid();
  detail::require_aligned(spec, g);
  const detail::MildSetup setup(spec, res);
  const detail::MildTerms terms(spec, g, traj, nullptr);
  const int last = g.last();
  Vector v = detail::mild_linear_part(spec, res, setup, terms, last);
  if (spec.f2) v -= spec.f2(g[last], segment_history(traj, spec.history, g[last]));
  return v;
}

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

struct PicardReport {
  int iterations = 0;               // index k of the returned iterate
  std::vector<double> distances;    // ||x_{k+1} - x_k||, k = 0, 1, ...
  double residual = 0.0;            // ||x - Q x|| of the returned trajectory
  double ball_radius = 0.0;         // max_t ||x(t)||
  double contraction_estimate = 0.0;  // largest ratio of successive distances
};

struct PicardResult {
  Trajectory trajectory;
  PicardReport report;
};

/// Successive approximation x_{k+1} = Q x_k from x_0 ≡ Φ(0). Returns the first
/// iterate x_k (k >= 1) whose residual ||x_k - Q x_k|| is below tol.
inline PicardResult picard_solve(const ProblemSpec& spec, const ResolventGrid& res, const ControlSignal& control,
                                 const PicardOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw DomainError("Picard tolerance must be positive");
  const TimeGrid& g = res.grid();
  detail::require_aligned(spec, g);
  Trajectory cur = Trajectory::constant(g, spec.history(0.0), g.impulse_nodes());
  cur.velocity0 = spec.v0;
  PicardReport rep;
  for (int k = 0; k <= opts.max_iter; ++k) {
    Trajectory next = evaluate_mild_map(spec, res, cur, control);
    const double d = trajectory_distance(cur, next);
    rep.distances.push_back(d);
    if (rep.distances.size() >= 2 && rep.distances[rep.distances.size() - 2] > 0.0) {
      rep.contraction_estimate =
          std::max(rep.contraction_estimate, d / rep.distances[rep.distances.size() - 2]);
    }
    if (!std::isfinite(d)) break;
    if (k >= 1 && d < opts.tol) {
      rep.iterations = k;
      rep.residual = d;
      rep.ball_radius = cur.sup_norm();
      return {std::move(cur), std::move(rep)};
    }
    cur = std::move(next);
  }
  throw ConvergenceError("Picard iteration did not converge in " + std::to_string(opts.max_iter) + " iterations",
                         rep.distances);
}

}  // namespace nctrl
