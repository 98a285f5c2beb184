#pragma once

// Problem description for second-order neutral integrodifferential systems
// with impulses:
//
//   d²/dt² E(t, x_t) = A(t) E(t, x_t) + ∫₀ᵗ ζ(t,s) E(s, x_s) ds + f1(t, x(t)) + B u(t)
//   Δx(t_q) = I_q(x(t_q⁻)),  Δx'(t_q) = J_q(x(t_q⁻))
//   x_0 = Φ,  x'(0) = x1,    E(t, ψ) = ψ(0) + f2(t, ψ).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "nctrl/types.hpp"

namespace nctrl {

/// Segment x_t of a state path seen from an anchor time t: theta <= 0 maps to x(t + theta).
class HistorySegment {
 public:
  using Lookup = std::function<Vector(double)>;
  using SupNorm = std::function<double()>;

  HistorySegment() = default;
  HistorySegment(double anchor, Lookup lookup, SupNorm sup)
      : anchor_(anchor), lookup_(std::move(lookup)), sup_(std::move(sup)) {}

  /// Constant segment psi(theta) = value.
  static HistorySegment constant(const Vector& value) {
    const double n = value.norm();
    return HistorySegment(0.0, [value](double) { return value; }, [n] { return n; });
  }

  double anchor() const { return anchor_; }
  Vector operator()(double theta) const { return lookup_(std::min(theta, 0.0)); }

  /// Sup norm of the segment over its sampled window.
  double sup_norm() const { return sup_ ? sup_() : lookup_(0.0).norm(); }

 private:
  double anchor_ = 0.0;
  Lookup lookup_;
  SupNorm sup_;
};

/// Initial history Φ on (-inf, 0], constant below -memory_window.
struct HistoryFunction {
  double memory_window = 0.0;
  std::function<Vector(double)> phi;

  Vector operator()(double theta) const {
    return phi(std::clamp(theta, -memory_window, 0.0));
  }

  double sup_norm(int samples = 257) const {
    if (memory_window <= 0.0 || samples < 2) return phi(0.0).norm();
    double s = 0.0;
    for (int k = 0; k < samples; ++k) {
      const double th = -memory_window + memory_window * k / (samples - 1);
      s = std::max(s, phi(th).norm());
    }
    return s;
  }
};

using JumpMap = std::function<Vector(const Vector&)>;

struct ImpulseSchedule {
  std::vector<double> times;
  std::vector<JumpMap> jump_state;     // I_q
  std::vector<JumpMap> jump_velocity;  // J_q

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

using OperatorMap = std::function<Matrix(double)>;
using KernelMap = std::function<Matrix(double, double)>;
using ForcingMap = std::function<Vector(double, const Vector&)>;
using NeutralMap = std::function<Vector(double, const HistorySegment&)>;

struct ProblemSpec {
  std::string name;
  int state_dim = 0;
  double horizon = 0.0;
  OperatorMap a_op;
  KernelMap kernel;  // empty: ζ ≡ 0
  ForcingMap f1;     // empty: f1 ≡ 0
  NeutralMap f2;     // empty: f2 ≡ 0
  Matrix b_op;
  ImpulseSchedule impulses;
  HistoryFunction history;
  Vector v0;
  std::optional<Vector> v0_neutral;

  int control_dim() const { return static_cast<int>(b_op.cols()); }
  bool has_kernel() const { return static_cast<bool>(kernel); }

  /// f1, f2 and impulses all absent: the mild map does not depend on the state.
  bool state_independent() const { return !f1 && !f2 && impulses.empty(); }

  Vector eval_f1(double t, const Vector& x) const {
    return f1 ? f1(t, x) : Vector::Zero(state_dim);
  }
  Vector eval_f2(double t, const HistorySegment& seg) const {
    return f2 ? f2(t, seg) : Vector::Zero(state_dim);
  }
  Matrix eval_kernel(double t, double s) const {
    return kernel ? kernel(t, s) : Matrix::Zero(state_dim, state_dim);
  }
};

struct Violation {
  std::string code;
  std::string message;

  friend bool operator<(const Violation& a, const Violation& b) {
    return std::tie(a.code, a.message) < std::tie(b.code, b.message);
  }
  friend bool operator==(const Violation& a, const Violation& b) {
    return a.code == b.code && a.message == b.message;
  }
};

namespace detail {

inline std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

template <class F>
void guarded(std::set<Violation>& out, const std::string& code, const std::string& what, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    out.insert({code, what + " threw: " + e.what()});
  }
}

}  // namespace detail

/// Structural audit of a problem. Violations are sorted, so the result does not
/// depend on the order the checks run in.
inline std::vector<Violation> validate_spec(const ProblemSpec& spec, int probe_points = 11) {
  using detail::fmt_real;
  std::set<Violation> out;
  const int n = spec.state_dim;
  const double ell = spec.horizon;

  if (n < 1) out.insert({"state_dim", "state dimension must be positive"});
  if (!(ell > 0.0) || !std::isfinite(ell)) out.insert({"horizon", "horizon must be positive and finite"});

  const auto& imp = spec.impulses;
  if (imp.jump_state.size() != imp.times.size() || imp.jump_velocity.size() != imp.times.size()) {
    out.insert({"impulse_lengths", "impulse times, state jumps and velocity jumps differ in length"});
  }
  for (std::size_t q = 0; q < imp.times.size(); ++q) {
    const double tq = imp.times[q];
    if (!std::isfinite(tq)) {
      out.insert({"impulse_time", "impulse time is not finite"});
    } else if (tq <= 0.0) {
      out.insert({"impulse_time", "impulse at or before origin"});
    } else if (tq == ell) {
      out.insert({"impulse_time", "impulse at horizon"});
    } else if (tq > ell) {
      out.insert({"impulse_time", "impulse beyond horizon"});
    }
    if (q > 0 && !(tq > imp.times[q - 1])) out.insert({"impulse_order", "impulse times not increasing"});
  }

  if (!(spec.history.memory_window >= 0.0)) out.insert({"history", "memory window must be nonnegative"});
  if (!spec.history.phi) out.insert({"history", "history function missing"});
  if (!spec.a_op) out.insert({"a_op", "a_op missing"});
  if (n < 1 || !(ell > 0.0) || !std::isfinite(ell)) {
    return {out.begin(), out.end()};
  }

  if (spec.b_op.rows() != n) out.insert({"b_op", "b_op must have state_dim rows"});
  if (spec.v0.size() != n) out.insert({"v0", "initial velocity has wrong dimension"});
  if (spec.v0_neutral && spec.v0_neutral->size() != n) {
    out.insert({"v0_neutral", "neutral initial velocity has wrong dimension"});
  }
  if (!spec.b_op.allFinite()) out.insert({"b_op", "b_op has non-finite entries"});
  if (!spec.v0.allFinite()) out.insert({"v0", "initial velocity has non-finite entries"});

  std::vector<double> ts;
  for (int k = 0; k < probe_points; ++k) ts.push_back(ell * k / std::max(1, probe_points - 1));

  if (spec.a_op) {
    detail::guarded(out, "a_op", "a_op", [&] {
      for (double t : ts) {
        const Matrix a = spec.a_op(t);
        if (a.rows() != n || a.cols() != n) {
          out.insert({"a_op", "a_op is not state_dim x state_dim"});
          break;
        }
        if (!a.allFinite()) out.insert({"a_op", "non-finite sample of a_op at t=" + fmt_real(t)});
      }
    });
  }
  if (spec.kernel) {
    detail::guarded(out, "kernel", "kernel", [&] {
      for (std::size_t i = 0; i < ts.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          const Matrix z = spec.kernel(ts[i], ts[j]);
          if (z.rows() != n || z.cols() != n) {
            out.insert({"kernel", "kernel is not state_dim x state_dim"});
            return;
          }
          if (!z.allFinite()) {
            out.insert({"kernel", "non-finite sample of kernel at (t,s)=(" + fmt_real(ts[i]) + "," +
                                      fmt_real(ts[j]) + ")"});
          }
        }
      }
    });
  }

  std::vector<Vector> xs{Vector::Zero(n)};
  for (int i = 0; i < n; ++i) {
    xs.push_back(Vector::Unit(n, i));
    xs.push_back(-2.0 * Vector::Unit(n, i));
  }

  if (spec.f1) {
    detail::guarded(out, "f1", "f1", [&] {
      for (double t : ts) {
        for (const auto& x : xs) {
          const Vector y = spec.f1(t, x);
          if (y.size() != n) {
            out.insert({"f1", "f1 output has wrong dimension"});
            return;
          }
          if (!y.allFinite()) out.insert({"f1", "non-finite sample of f1 at t=" + fmt_real(t)});
        }
      }
    });
  }
  if (spec.f2) {
    detail::guarded(out, "f2", "f2", [&] {
      for (double t : ts) {
        for (const auto& x : xs) {
          const Vector y = spec.f2(t, HistorySegment::constant(x));
          if (y.size() != n) {
            out.insert({"f2", "f2 output has wrong dimension"});
            return;
          }
          if (!y.allFinite()) out.insert({"f2", "non-finite sample of f2 at t=" + fmt_real(t)});
        }
      }
    });
  }
  for (std::size_t q = 0; q < std::min(imp.jump_state.size(), imp.jump_velocity.size()); ++q) {
    const std::string tag = "impulse " + std::to_string(q + 1);
    detail::guarded(out, "impulse_map", tag, [&] {
      for (const auto& x : xs) {
        const Vector a = imp.jump_state[q](x);
        const Vector b = imp.jump_velocity[q](x);
        if (a.size() != n || b.size() != n) {
          out.insert({"impulse_map", tag + " jump map has wrong dimension"});
          return;
        }
        if (!a.allFinite() || !b.allFinite()) out.insert({"impulse_map", tag + " jump map non-finite"});
      }
    });
  }

  if (spec.history.phi && spec.history.memory_window >= 0.0) {
    detail::guarded(out, "history", "history", [&] {
      const double tau = spec.history.memory_window;
      const Vector p0 = spec.history.phi(0.0);
      if (p0.size() != n) {
        out.insert({"history", "history has wrong dimension"});
        return;
      }
      if (tau <= 0.0) return;
      // Modulus-of-continuity probe: halving the sample spacing must shrink the
      // largest adjacent difference unless it is already negligible.
      auto max_gap = [&](int samples) {
        double gap = 0.0;
        Vector prev = spec.history.phi(-tau);
        for (int k = 1; k < samples; ++k) {
          const Vector cur = spec.history.phi(-tau + tau * k / (samples - 1));
          if (!cur.allFinite()) throw NumericError("non-finite history sample");
          gap = std::max(gap, (cur - prev).norm());
          prev = cur;
        }
        return gap;
      };
      const double coarse = max_gap(257);
      const double fine = max_gap(513);
      const double scale = 1.0 + spec.history.sup_norm();
      if (fine > 1e-8 * scale && fine > 0.75 * coarse) {
        out.insert({"history", "history appears discontinuous"});
      }
    });
  }

  return {out.begin(), out.end()};
}

}  // namespace nctrl
