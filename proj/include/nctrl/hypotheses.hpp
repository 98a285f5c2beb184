#pragma once

// Sampled audit of the hypothesis constants and the sufficient condition
//   2M1 + M2 + r2 + M1·ℓ·σ + M1·‖B‖·λ·ℓ + M1·Σe_q + M2·Σd_q < 1
// for existence of a mild solution. All constants are maxima over a
// deterministic sample set; sample_counts records its size per constant.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nctrl/mild_solver.hpp"
#include "nctrl/problem.hpp"
#include "nctrl/resolvent.hpp"
#include "nctrl/time_grid.hpp"
#include "nctrl/types.hpp"

namespace nctrl {

struct HypothesisReport {
  double M1_est = 0.0, M2_est = 0.0;
  double LR_est = 0.0, MR_est = 0.0;
  double sigma_est = 0.0;
  double r1_est = 0.0, r2_est = 0.0;
  double L2_est = 0.0;
  std::vector<double> dq_est, eq_est;
  double lambda_est = 0.0;
  double h1_est = 0.0, h2_est = 0.0, Lzeta_est = 0.0;
  double theorem32_lhs = 0.0;
  /// Constant name -> number of samples it was maximized over. A missing
  /// entry means the value is exact (absent map or hand-built report).
  std::map<std::string, std::size_t> sample_counts;
};

struct EstimateOptions {
  int lattice_level = 2;       // radii k/2^L · probe_radius, k = 1..2^L
  int max_time_samples = 64;   // subsampled nodes for the state maps
  int max_kernel_pairs = 33;   // node subsample for the kernel constants
  int max_sign_patterns = 16;  // diagonal directions in addition to ±e_i
};

enum class Verdict { holds, fails, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    default: return "inconclusive";
  }
}

struct Theorem32Check {
  Verdict verdict = Verdict::inconclusive;
  double lhs = 0.0;
};

namespace detail {

/// Unit probe directions: ±e_i, then normalized sign patterns.
inline std::vector<Vector> probe_directions(int dim, int max_patterns) {
  std::vector<Vector> dirs;
  for (int i = 0; i < dim; ++i) {
    Vector e = Vector::Zero(dim);
    e(i) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (dim > 1) {
    const int bits = std::min(dim, 20);
    const long total = 1L << bits;
    const long count = std::min<long>(total, max_patterns);
    for (long p = 0; p < count; ++p) {
      Vector v(dim);
      for (int i = 0; i < dim; ++i) v(i) = ((p >> (i % bits)) & 1) ? -1.0 : 1.0;
      dirs.push_back(v / std::sqrt(static_cast<double>(dim)));
    }
  }
  return dirs;
}

inline std::vector<Vector> state_probes(int dim, double radius, const EstimateOptions& opt) {
  std::vector<Vector> out;
  const int levels = 1 << std::max(opt.lattice_level, 0);
  for (const auto& d : probe_directions(dim, opt.max_sign_patterns))
    for (int k = 1; k <= levels; ++k) out.push_back((radius * k / levels) * d);
  return out;
}

inline std::vector<int> subsample(int last, int max_count) {
  std::vector<int> idx;
  const int stride = std::max(1, (last + max_count - 1) / std::max(max_count, 1));
  for (int i = 0; i <= last; i += stride) idx.push_back(i);
  if (idx.back() != last) idx.push_back(last);
  return idx;
}

inline void require_finite_probe(const Vector& v, const std::string& map, double t, const Vector& x) {
  if (v.allFinite()) return;
  std::string pt = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) pt += (i ? ", " : "") + fmt_real(x(i));
  pt += ")";
  throw NumericError("non-finite sample of " + map + " at t=" + fmt_real(t) + ", x=" + pt);
}

inline HistorySegment constant_segment(const Vector& x) { return HistorySegment::constant(x); }

}  // namespace detail

/// Evaluates every constant over the documented sample set. `control`, when
/// given, is the grid control whose bound λ = sup‖u‖ / probe_radius is recorded.
inline HypothesisReport estimate_constants(const ProblemSpec& spec, const TimeGrid& grid, const ResolventGrid& res,
                                           double probe_radius, const EstimateOptions& opt = {},
                                           const ControlSignal* control = nullptr) {
  if (!(probe_radius > 0.0)) throw DomainError("probe_radius must be positive");
  if (res.grid().size() != grid.size()) throw DomainError("resolvent was not built on this grid");
  HypothesisReport rep;
  const std::size_t pairs = grid.size() * (grid.size() + 1) / 2;

  const ResolventBounds b = verify_resolvent_bounds(res);
  rep.M1_est = b.M1;
  rep.M2_est = b.M2;
  rep.LR_est = b.LR;
  rep.MR_est = b.MR;
  for (const char* k : {"M1", "M2", "LR", "MR"}) rep.sample_counts[k] = pairs;

  const int dim = spec.state_dim;
  const std::vector<Vector> probes = detail::state_probes(dim, probe_radius, opt);
  const std::vector<int> tidx = detail::subsample(grid.last(), opt.max_time_samples);

  if (spec.f1) {
    // ν_r(t) = max over the ball probes; σ ≈ ‖ν_r‖_L² / r on the subsampled nodes.
    double l2 = 0.0;
    for (std::size_t a = 0; a < tidx.size(); ++a) {
      const double t = grid[tidx[a]];
      double nu = spec.f1(t, Vector::Zero(dim)).norm();
      for (const auto& x : probes) {
        const Vector v = spec.f1(t, x);
        detail::require_finite_probe(v, "f1", t, x);
        nu = std::max(nu, v.norm());
      }
      const double lo = a ? grid[tidx[a - 1]] : grid[0];
      const double hi = a + 1 < tidx.size() ? grid[tidx[a + 1]] : grid.horizon();
      l2 += 0.5 * (hi - lo) * nu * nu;
    }
    rep.sigma_est = std::sqrt(l2) / probe_radius;
    rep.sample_counts["sigma"] = tidx.size() * (probes.size() + 1);
  }

  if (spec.f2) {
    std::vector<std::vector<Vector>> vals(tidx.size());
    for (std::size_t a = 0; a < tidx.size(); ++a) {
      const double t = grid[tidx[a]];
      const Vector zero = spec.f2(t, detail::constant_segment(Vector::Zero(dim)));
      detail::require_finite_probe(zero, "f2", t, Vector::Zero(dim));
      rep.r1_est = std::max(rep.r1_est, zero.norm());
      for (const auto& x : probes) {
        vals[a].push_back(spec.f2(t, detail::constant_segment(x)));
        detail::require_finite_probe(vals[a].back(), "f2", t, x);
      }
    }
    for (std::size_t a = 0; a < tidx.size(); ++a) {
      for (std::size_t p = 0; p < probes.size(); ++p) {
        rep.r2_est = std::max(rep.r2_est, std::max(vals[a][p].norm() - rep.r1_est, 0.0) / probes[p].norm());
        for (std::size_t q = p + 1; q < probes.size(); ++q) {
          const double d = (probes[p] - probes[q]).norm();
          if (d > 0.0) rep.L2_est = std::max(rep.L2_est, (vals[a][p] - vals[a][q]).norm() / d);
        }
      }
    }
    rep.sample_counts["r1"] = tidx.size();
    rep.sample_counts["r2"] = tidx.size() * probes.size();
    rep.sample_counts["L2"] = tidx.size() * probes.size() * (probes.size() - 1) / 2;
  }

  for (std::size_t q = 0; q < spec.impulses.size(); ++q) {
    double dq = 0.0, eq = 0.0;
    const std::string tag = std::to_string(q + 1);
    const Vector zero = Vector::Zero(dim);
    for (const Vector* x : [&] {
           std::vector<const Vector*> all{&zero};
           for (const auto& p : probes) all.push_back(&p);
           return all;
         }()) {
      const Vector iv = spec.impulses.jump_state[q](*x);
      const Vector jv = spec.impulses.jump_velocity[q](*x);
      detail::require_finite_probe(iv, "I_" + tag, spec.impulses.times[q], *x);
      detail::require_finite_probe(jv, "J_" + tag, spec.impulses.times[q], *x);
      dq = std::max(dq, iv.norm() / (x->norm() + 1.0));
      eq = std::max(eq, jv.norm() / (x->norm() + 1.0));
    }
    rep.dq_est.push_back(dq);
    rep.eq_est.push_back(eq);
  }
  if (!spec.impulses.empty()) {
    rep.sample_counts["dq"] = probes.size() + 1;
    rep.sample_counts["eq"] = probes.size() + 1;
  }

  if (control && !control->empty()) {
    double umax = 0.0;
    for (const auto& u : *control) umax = std::max(umax, u.norm());
    rep.lambda_est = umax / probe_radius;
    rep.sample_counts["lambda"] = control->size();
  }

  if (spec.kernel) {
    const std::vector<int> kidx = detail::subsample(grid.last(), opt.max_kernel_pairs);
    std::size_t n1 = 0, nl = 0;
    for (std::size_t a = 0; a < kidx.size(); ++a) {
      for (std::size_t c = 0; c <= a; ++c) {
        const double t = grid[kidx[a]], s = grid[kidx[c]];
        const Matrix z = spec.kernel(t, s);
        if (!z.allFinite()) throw NumericError("non-finite sample of kernel at (t,s)=(" + detail::fmt_real(t) + ", " +
                                               detail::fmt_real(s) + ")");
        rep.h1_est = std::max(rep.h1_est, spectral_norm(z));
        ++n1;
        if (a + 1 < kidx.size()) {
          const double t2 = grid[kidx[a + 1]];
          rep.Lzeta_est = std::max(rep.Lzeta_est, spectral_norm(spec.kernel(t2, s) - z) / (t2 - t));
          ++nl;
        }
      }
    }
    // S = resolvent of the kernel-free problem; trapezoid in s over the full grid.
    ProblemSpec bare = spec;
    bare.kernel = {};
    const ResolventGrid sres = build_resolvent_grid(bare, grid);
    std::size_t n2 = 0;
    for (int i : kidx) {
      for (int e : kidx) {
        if (e > i) break;
        Matrix acc = Matrix::Zero(dim, dim);
        for (int k = e; k < i; ++k) {
          const double h = 0.5 * grid.step(k);
          acc += h * (sres.R(i, k) * spec.kernel(grid[k], grid[e]) + sres.R(i, k + 1) * spec.kernel(grid[k + 1], grid[e]));
        }
        rep.h2_est = std::max(rep.h2_est, spectral_norm(acc));
        ++n2;
      }
    }
    rep.sample_counts["h1"] = n1;
    rep.sample_counts["Lzeta"] = nl;
    rep.sample_counts["h2"] = n2;
  }

  double sum_d = 0.0, sum_e = 0.0;
  for (double d : rep.dq_est) sum_d += d;
  for (double e : rep.eq_est) sum_e += e;
  const double ell = grid.horizon();
  const double bnorm = spec.b_op.size() ? spectral_norm(spec.b_op) : 0.0;
  rep.theorem32_lhs = 2.0 * rep.M1_est + rep.M2_est + rep.r2_est + rep.M1_est * ell * rep.sigma_est +
                      rep.M1_est * bnorm * rep.lambda_est * ell + rep.M1_est * sum_e + rep.M2_est * sum_d;
  return rep;
}

/// Recomputes the left-hand side from the report's constants; "holds" iff < 1,
/// "inconclusive" when any sampled constant rests on fewer than min_samples.
inline Theorem32Check check_theorem32(const HypothesisReport& rep, const ProblemSpec& spec, std::size_t min_samples = 16) {
  Theorem32Check out;
  double sum_d = 0.0, sum_e = 0.0;
  for (double d : rep.dq_est) sum_d += d;
  for (double e : rep.eq_est) sum_e += e;
  const double bnorm = spec.b_op.size() ? spectral_norm(spec.b_op) : 0.0;
  const double ell = spec.horizon;
  out.lhs = 2.0 * rep.M1_est + rep.M2_est + rep.r2_est + rep.M1_est * ell * rep.sigma_est +
            rep.M1_est * bnorm * rep.lambda_est * ell + rep.M1_est * sum_e + rep.M2_est * sum_d;
  for (const auto& [name, count] : rep.sample_counts) {
    if (count < min_samples) {
      out.verdict = Verdict::inconclusive;
      return out;
    }
  }
  out.verdict = out.lhs < 1.0 ? Verdict::holds : Verdict::fails;
  return out;
}

}  // namespace nctrl
