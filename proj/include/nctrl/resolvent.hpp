#pragma once

// Two-parameter resolvent family R(t,s) on a time grid.
//
// For each base node s = τ_j the matrix IVP
//   ∂²/∂t² R(t,s) = A(t) R(t,s) + ∫_s^t ζ(t,τ) R(τ,s) dτ,   R(s,s) = 0, ∂_t R(s,s) = I
// is integrated in t. Its s-derivative D = ∂R/∂s obeys the same equation with
// D(s,s) = -I, ∂_t D(s,s) = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nctrl/problem.hpp"
#include "nctrl/time_grid.hpp"
#include "nctrl/types.hpp"

namespace nctrl {

struct ResolventOptions {
  /// Entries above this magnitude are a stability failure of the stepper.
  double blowup_cap = 1e8;
  /// Disable the per-mode path even when A and ζ are diagonal.
  bool force_dense = false;
};

class ResolventGrid {
 public:
  using ConstBlock = Eigen::Map<const Matrix>;

  ResolventGrid() = default;
  ResolventGrid(TimeGrid grid, int dim, std::vector<double> r, std::vector<double> ds, bool diagonal)
      : grid_(std::move(grid)), dim_(dim), r_(std::move(r)), ds_(std::move(ds)), diagonal_(diagonal) {
    if (r_.size() != storage_size() || ds_.size() != storage_size()) {
      throw DomainError("resolvent storage does not match grid and dimension");
    }
  }

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  int scheme_order() const { return 2; }
  /// Built through the per-mode path (block-diagonal with scalar blocks).
  bool diagonal() const { return diagonal_; }

  /// R(τ_i, τ_j), i >= j.
  ConstBlock R(int i, int j) const { return ConstBlock(r_.data() + offset(i, j), dim_, dim_); }
  /// ∂R/∂s(τ_i, τ_j), i >= j.
  ConstBlock dsR(int i, int j) const { return ConstBlock(ds_.data() + offset(i, j), dim_, dim_); }

  const std::vector<double>& raw_R() const { return r_; }
  const std::vector<double>& raw_dsR() const { return ds_; }

  std::size_t offset(int i, int j) const {
    const auto ii = static_cast<std::size_t>(i);
    return (ii * (ii + 1) / 2 + static_cast<std::size_t>(j)) * static_cast<std::size_t>(dim_ * dim_);
  }
  std::size_t storage_size() const {
    const std::size_t n = grid_.size();
    return n * (n + 1) / 2 * static_cast<std::size_t>(dim_ * dim_);
  }

 private:
  TimeGrid grid_;
  int dim_ = 0;
  std::vector<double> r_;
  std::vector<double> ds_;
  bool diagonal_ = false;
};

namespace detail {

inline bool is_diagonal(const Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (r != c && m(r, c) != 0.0) return false;
  return true;
}

[[noreturn]] inline void blowup(int i, int j, const TimeGrid& g) {
  throw NumericError("resolvent blow-up at (t,s)=(" + fmt_real(g[i]) + "," + fmt_real(g[j]) +
                     "); refine the grid step (max step " + fmt_real(g.step_max()) + ")");
}

// Trapezoid weights for ∫ over [τ_j, τ_n] on the nodes j..n.
inline void window_weights(const TimeGrid& g, int j, int n, std::vector<double>& w) {
  w.assign(static_cast<std::size_t>(n - j + 1), 0.0);
  for (int k = j; k < n; ++k) {
    const double h = g.step(k);
    w[k - j] += 0.5 * h;
    w[k - j + 1] += 0.5 * h;
  }
}

}  // namespace detail

inline ResolventGrid build_resolvent_grid(const ProblemSpec& spec, const TimeGrid& grid,
                                         const ResolventOptions& opts = {}) {
  const int dim = spec.state_dim;
  const int last = grid.last();
  if (dim < 1) throw DomainError("state_dim must be positive");
  if (!spec.a_op) throw DomainError("a_op missing");

  std::vector<Matrix> a(grid.size());
  bool diagonal = !opts.force_dense;
  for (int n = 0; n <= last; ++n) {
    a[n] = spec.a_op(grid[n]);
    if (!a[n].allFinite()) throw NumericError("non-finite a_op sample at t=" + detail::fmt_real(grid[n]));
    diagonal = diagonal && detail::is_diagonal(a[n]);
  }
  // Lower-triangular ζ(τ_n, τ_k) table, same layout as the resolvent.
  const bool mem = spec.has_kernel();
  std::vector<Matrix> z;
  auto zidx = [](int n, int k) { return static_cast<std::size_t>(n) * (n + 1) / 2 + k; };
  if (mem) {
    z.resize(grid.size() * (grid.size() + 1) / 2);
    for (int n = 0; n <= last; ++n) {
      for (int k = 0; k <= n; ++k) {
        Matrix zk = spec.kernel(grid[n], grid[k]);
        if (!zk.allFinite()) {
          throw NumericError("non-finite kernel sample at (t,s)=(" + detail::fmt_real(grid[n]) + "," +
                             detail::fmt_real(grid[k]) + ")");
        }
        diagonal = diagonal && detail::is_diagonal(zk);
        z[zidx(n, k)] = std::move(zk);
      }
    }
  }

  const std::size_t nn = grid.size();
  const std::size_t block = static_cast<std::size_t>(dim) * dim;
  std::vector<double> r(nn * (nn + 1) / 2 * block, 0.0);
  std::vector<double> ds(r.size(), 0.0);
  auto off = [&](int i, int j) {
    return (static_cast<std::size_t>(i) * (i + 1) / 2 + j) * block;
  };
  std::vector<double> w;

  if (diagonal) {
    std::vector<double> x(nn), d(nn);
    for (int c = 0; c < dim; ++c) {
      const std::size_t cc = static_cast<std::size_t>(c) * dim + c;
      for (int j = 0; j <= last; ++j) {
        x[j] = 0.0;
        d[j] = -1.0;
        if (j < last) {
          const double h = grid.step(j);
          const double aj = a[j](c, c);
          const double da = (a[j + 1](c, c) - aj) / h;
          const double zjj = mem ? z[zidx(j, j)](c, c) : 0.0;
          x[j + 1] = h + h * h * h / 6.0 * aj;
          d[j + 1] = -1.0 - 0.5 * h * h * aj + h * h * h / 6.0 * (-da - zjj);
        }
        for (int n = j + 1; n < last; ++n) {
          double fx = a[n](c, c) * x[n];
          double fd = a[n](c, c) * d[n];
          if (mem) {
            detail::window_weights(grid, j, n, w);
            for (int k = j; k <= n; ++k) {
              const double zc = w[k - j] * z[zidx(n, k)](c, c);
              fx += zc * x[k];
              fd += zc * d[k];
            }
          }
          const double hp = grid.step(n - 1);
          const double hn = grid.step(n);
          x[n + 1] = x[n] + hn * ((x[n] - x[n - 1]) / hp + 0.5 * (hp + hn) * fx);
          d[n + 1] = d[n] + hn * ((d[n] - d[n - 1]) / hp + 0.5 * (hp + hn) * fd);
          if (!(std::abs(x[n + 1]) <= opts.blowup_cap) || !(std::abs(d[n + 1]) <= opts.blowup_cap)) {
            detail::blowup(n + 1, j, grid);
          }
        }
        for (int n = j; n <= last; ++n) {
          r[off(n, j) + cc] = x[n];
          ds[off(n, j) + cc] = d[n];
        }
      }
    }
    return ResolventGrid(grid, dim, std::move(r), std::move(ds), true);
  }

  using MapM = Eigen::Map<Matrix>;
  const Matrix eye = Matrix::Identity(dim, dim);
  Matrix fx(dim, dim), fd(dim, dim);
  for (int j = 0; j <= last; ++j) {
    MapM(r.data() + off(j, j), dim, dim).setZero();
    MapM(ds.data() + off(j, j), dim, dim) = -eye;
    if (j < last) {
      const double h = grid.step(j);
      const Matrix da = (a[j + 1] - a[j]) / h;
      const Matrix zjj = mem ? z[zidx(j, j)] : Matrix::Zero(dim, dim);
      MapM(r.data() + off(j + 1, j), dim, dim) = h * eye + h * h * h / 6.0 * a[j];
      MapM(ds.data() + off(j + 1, j), dim, dim) = -eye - 0.5 * h * h * a[j] + h * h * h / 6.0 * (-da - zjj);
    }
    for (int n = j + 1; n < last; ++n) {
      const MapM xn(r.data() + off(n, j), dim, dim);
      const MapM dn(ds.data() + off(n, j), dim, dim);
      fx.noalias() = a[n] * xn;
      fd.noalias() = a[n] * dn;
      if (mem) {
        detail::window_weights(grid, j, n, w);
        for (int k = j; k <= n; ++k) {
          fx.noalias() += w[k - j] * z[zidx(n, k)] * MapM(r.data() + off(k, j), dim, dim);
          fd.noalias() += w[k - j] * z[zidx(n, k)] * MapM(ds.data() + off(k, j), dim, dim);
        }
      }
      const double hp = grid.step(n - 1);
      const double hn = grid.step(n);
      MapM xnext(r.data() + off(n + 1, j), dim, dim);
      MapM dnext(ds.data() + off(n + 1, j), dim, dim);
      xnext = xn + hn * ((xn - MapM(r.data() + off(n - 1, j), dim, dim)) / hp + 0.5 * (hp + hn) * fx);
      dnext = dn + hn * ((dn - MapM(ds.data() + off(n - 1, j), dim, dim)) / hp + 0.5 * (hp + hn) * fd);
      if (!(xnext.cwiseAbs().maxCoeff() <= opts.blowup_cap) || !(dnext.cwiseAbs().maxCoeff() <= opts.blowup_cap)) {
        detail::blowup(n + 1, j, grid);
      }
    }
  }
  return ResolventGrid(grid, dim, std::move(r), std::move(ds), false);
}

namespace detail {

inline void check_pair(const ResolventGrid& res, double t, double s) {
  const double ell = res.grid().horizon();
  if (!(s <= t)) throw DomainError("resolvent evaluated with s > t");
  if (!(s >= 0.0) || !(t <= ell)) throw DomainError("resolvent evaluated outside [0, horizon]");
}

template <class Get>
Matrix interpolate(const ResolventGrid& res, double t, double s, Get get) {
  check_pair(res, t, s);
  const TimeGrid& g = res.grid();
  const auto ti = g.node_index(t);
  const auto si = g.node_index(s);
  if (ti && si) return get(*ti, *si);
  const int i = g.cell(t);
  const int j = g.cell(s);
  const double a = (t - g[i]) / g.step(i);
  const double b = (s - g[j]) / g.step(j);
  if (j < i) {
    return (1 - a) * (1 - b) * get(i, j) + a * (1 - b) * get(i + 1, j) + (1 - a) * b * get(i, j + 1) +
           a * b * get(i + 1, j + 1);
  }
  // Diagonal cell: linear interpolation on the lower triangle
  // (τ_i,τ_i), (τ_{i+1},τ_i), (τ_{i+1},τ_{i+1}).
  const double bb = std::min(b, a);
  return (1 - a) * get(i, i) + (a - bb) * get(i + 1, i) + bb * get(i + 1, i + 1);
}

}  // namespace detail

/// R(t,s) by bilinear interpolation between stored nodes; exact at nodes.
inline Matrix eval_R(const ResolventGrid& res, double t, double s) {
  return detail::interpolate(res, t, s, [&](int i, int j) -> Matrix { return res.R(i, j); });
}

/// ∂R/∂s(t,s) by bilinear interpolation between stored nodes; exact at nodes.
inline Matrix eval_dsR(const ResolventGrid& res, double t, double s) {
  return detail::interpolate(res, t, s, [&](int i, int j) -> Matrix { return res.dsR(i, j); });
}

struct ResolventBounds {
  double M1 = 0.0;  // max ||R||
  double M2 = 0.0;  // max ||∂R/∂s||
  double LR = 0.0;  // max ||R(τ_{i+1},τ_j) - R(τ_i,τ_j)|| / Δτ
  double MR = 0.0;  // same for ∂R/∂s
  std::size_t node_pairs = 0;
};

/// Sampled bounds and Lipschitz constants over all stored node pairs.
inline ResolventBounds verify_resolvent_bounds(const ResolventGrid& res) {
  ResolventBounds b;
  const TimeGrid& g = res.grid();
  const int last = g.last();
  for (int j = 0; j <= last; ++j) {
    for (int i = j; i <= last; ++i) {
      b.M1 = std::max(b.M1, spectral_norm(res.R(i, j)));
      b.M2 = std::max(b.M2, spectral_norm(res.dsR(i, j)));
      if (i < last) {
        const double h = g.step(i);
        b.LR = std::max(b.LR, spectral_norm(res.R(i + 1, j) - res.R(i, j)) / h);
        b.MR = std::max(b.MR, spectral_norm(res.dsR(i + 1, j) - res.dsR(i, j)) / h);
      }
      ++b.node_pairs;
    }
  }
  return b;
}

}  // namespace nctrl
