#pragma once

// Spectral Galerkin reduction of the damped-memory wave problem on (0, 2π)
// with Dirichlet conditions onto the sine eigenbasis sin(m y)/√π of ∂²/∂y²
// (eigenvalues -m²).

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "nctrl/problem.hpp"
#include "nctrl/types.hpp"

namespace nctrl {

using ScalarField = std::function<double(double)>;

class ModeBasis {
 public:
  static constexpr double kLength = 2.0 * std::numbers::pi;
  static constexpr unsigned kPanelPoints = 20;

  explicit ModeBasis(int mode_count, int panels = 0) : modes_(mode_count) {
    if (mode_count < 1) throw DomainError("mode_count must be positive");
    if (panels <= 0) panels = std::max(4, 2 * mode_count);
    using Rule = boost::math::quadrature::gauss<double, kPanelPoints>;
    const auto& xs = Rule::abscissa();
    const auto& ws = Rule::weights();
    const double half = 0.5 * kLength / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = (2 * p + 1) * half;
      for (std::size_t k = xs.size(); k-- > 0;) {
        nodes_.push_back(mid - half * xs[k]);
        weights_.push_back(half * ws[k]);
      }
      for (std::size_t k = 0; k < xs.size(); ++k) {
        nodes_.push_back(mid + half * xs[k]);
        weights_.push_back(half * ws[k]);
      }
    }
    for (int m = 1; m <= modes_; ++m) eigenvalues_.push_back(-static_cast<double>(m) * m);
    values_.resize(modes_, static_cast<Eigen::Index>(nodes_.size()));
    for (int m = 1; m <= modes_; ++m)
      for (std::size_t k = 0; k < nodes_.size(); ++k) values_(m - 1, static_cast<Eigen::Index>(k)) = basis(m, nodes_[k]);
  }

  int mode_count() const { return modes_; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  /// Basis values at the quadrature nodes, mode_count × nodes.
  const Matrix& node_values() const { return values_; }

  /// sin(m y)/√π, m >= 1.
  static double basis(int m, double y) { return std::sin(m * y) / std::sqrt(std::numbers::pi); }

  Matrix eigen_diagonal() const {
    Matrix d = Matrix::Zero(modes_, modes_);
    for (int m = 0; m < modes_; ++m) d(m, m) = eigenvalues_[m];
    return d;
  }

 private:
  int modes_;
  std::vector<double> eigenvalues_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  Matrix values_;
};

/// Coefficients ⟨field, ϑ_m⟩, m = 1..M, by quadrature.
inline Vector project_field(const ModeBasis& basis, const ScalarField& field) {
  Vector c = Vector::Zero(basis.mode_count());
  const auto& y = basis.nodes();
  const auto& w = basis.weights();
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double f = field(y[k]);
    if (!std::isfinite(f)) throw NumericError("non-finite field sample at y=" + detail::fmt_real(y[k]));
    c += (w[k] * f) * basis.node_values().col(static_cast<Eigen::Index>(k));
  }
  return c;
}

/// Σ_m coeffs_m ϑ_m(y) at each point.
inline std::vector<double> reconstruct_field(const ModeBasis& basis, const Vector& coeffs,
                                             const std::vector<double>& points) {
  if (coeffs.size() != basis.mode_count()) throw DomainError("coefficient vector length must equal mode_count");
  std::vector<double> out;
  out.reserve(points.size());
  for (double y : points) {
    double v = 0.0;
    for (int m = 1; m <= basis.mode_count(); ++m) v += coeffs(m - 1) * ModeBasis::basis(m, y);
    out.push_back(v);
  }
  return out;
}

/// Impulse at t_q acting through integral kernels:
///   Δϱ(y)  = ∫ φ_q(ξ,y) ϱ(ξ)² / (π(1+ϱ(ξ)²)) dξ
///   Δϱ'(y) = ∫ ς_q(ξ,y) ϱ(ξ)⁴ / (2e²(1+ϱ(ξ)⁴)) dξ
struct WaveImpulse {
  double time = 0.0;
  std::function<double(double, double)> phi;       // φ_q(ξ, y); empty = 0
  std::function<double(double, double)> varsigma;  // ς_q(ξ, y); empty = 0
};

struct WaveMemoryParams {
  int mode_count = 1;
  double horizon = 1.0;
  ScalarField kernel_h;     // ħ(τ); empty = 0
  ScalarField potential_F;  // F(t); empty = 0
  /// Componentwise modal forcing f1(t, x)_m = g(t, x_m); empty = 0.
  std::function<double(double, double)> f1;
  /// Neutral term f2(t, ψ)_m = g(t, ψ_m(-delay)); empty = 0.
  std::function<double(double, double)> f2;
  double f2_delay = 0.0;
  std::vector<WaveImpulse> impulses;
  /// Φ(θ, y) on [-memory_window, 0] × [0, 2π].
  std::function<double(double, double)> history;
  double memory_window = 0.0;
  ScalarField initial_velocity;  // b1(y); empty = 0
  /// Control injection in modal coordinates; empty = identity (every mode actuated).
  Matrix b_op;
};

namespace detail {

inline double state_saturation(double r) { return r * r / (std::numbers::pi * (1.0 + r * r)); }
inline double velocity_saturation(double r) {
  const double r4 = r * r * r * r;
  return r4 / (2.0 * std::exp(2.0) * (1.0 + r4));
}

// Matrix P with (P g)_m = ∫∫ kernel(ξ,y) g(ξ) ϑ_m(y) dy dξ for g sampled at the nodes.
inline Matrix integral_kernel_matrix(const ModeBasis& basis, const std::function<double(double, double)>& kernel) {
  const auto& y = basis.nodes();
  const auto& w = basis.weights();
  const auto n = static_cast<Eigen::Index>(y.size());
  Matrix kmat(n, n);  // kmat(l, k) = w_l kernel(ξ_k, y_l)
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      const double v = kernel(y[k], y[l]);
      if (!std::isfinite(v)) throw NumericError("non-finite impulse kernel sample");
      kmat(l, k) = w[l] * v;
    }
  Matrix p = basis.node_values() * kmat;
  for (Eigen::Index k = 0; k < n; ++k) p.col(k) *= w[k];
  return p;
}

}  // namespace detail

inline JumpMap make_integral_jump(const ModeBasis& basis, const std::function<double(double, double)>& kernel,
                                  double (*pointwise)(double)) {
  if (!kernel) {
    const int m = basis.mode_count();
    return [m](const Vector&) { return Vector(Vector::Zero(m)); };
  }
  const Matrix p = detail::integral_kernel_matrix(basis, kernel);
  const Matrix vals = basis.node_values();
  return [p, vals, pointwise](const Vector& x) -> Vector {
    Vector rho = vals.transpose() * x;
    for (Eigen::Index k = 0; k < rho.size(); ++k) rho(k) = pointwise(rho(k));
    return p * rho;
  };
}

inline ProblemSpec build_wave_memory_scenario(const WaveMemoryParams& prm) {
  const ModeBasis basis(prm.mode_count);
  const int m = prm.mode_count;
  if (!(prm.horizon > 0.0)) throw DomainError("horizon must be positive");

  for (int k = 0; k <= 64; ++k) {
    const double t = prm.horizon * k / 64.0;
    if (prm.kernel_h && !std::isfinite(prm.kernel_h(t))) {
      throw NumericError("memory kernel sample is not finite at tau=" + detail::fmt_real(t));
    }
    if (prm.potential_F && !std::isfinite(prm.potential_F(t))) {
      throw NumericError("potential sample is not finite at t=" + detail::fmt_real(t));
    }
  }

  ProblemSpec spec;
  spec.name = "wave_memory";
  spec.state_dim = m;
  spec.horizon = prm.horizon;
  const Matrix lap = basis.eigen_diagonal();
  const ScalarField pot = prm.potential_F;
  spec.a_op = [lap, pot](double t) -> Matrix {
    Matrix a = lap;
    if (pot) a.diagonal().array() += pot(t);
    return a;
  };
  if (prm.kernel_h) {
    const ScalarField h = prm.kernel_h;
    spec.kernel = [lap, h](double t, double s) -> Matrix { return h(t - s) * lap; };
  }
  if (prm.f1) {
    const auto g = prm.f1;
    spec.f1 = [g](double t, const Vector& x) -> Vector {
      Vector y(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = g(t, x(i));
      return y;
    };
  }
  if (prm.f2) {
    const auto g = prm.f2;
    const double delay = prm.f2_delay;
    spec.f2 = [g, delay](double t, const HistorySegment& seg) -> Vector {
      Vector x = seg(-delay);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(t, x(i));
      return x;
    };
  }
  spec.b_op = prm.b_op.size() ? prm.b_op : Matrix(Matrix::Identity(m, m));

  for (const auto& imp : prm.impulses) {
    spec.impulses.times.push_back(imp.time);
    spec.impulses.jump_state.push_back(make_integral_jump(basis, imp.phi, &detail::state_saturation));
    spec.impulses.jump_velocity.push_back(make_integral_jump(basis, imp.varsigma, &detail::velocity_saturation));
  }

  // Modal history, projected on demand; probe a θ lattice up front so a
  // non-integrable history fails at construction.
  const double tau = std::max(prm.memory_window, 0.0);
  spec.history.memory_window = tau;
  if (prm.history) {
    for (int k = 0; k <= 16; ++k) {
      const double th = -tau + tau * k / 16.0;
      project_field(basis, [&](double y) { return prm.history(th, y); });
    }
    auto shared = std::make_shared<const ModeBasis>(basis);
    const auto hist = prm.history;
    spec.history.phi = [shared, hist](double th) -> Vector {
      return project_field(*shared, [&](double y) { return hist(th, y); });
    };
  } else {
    spec.history.phi = [m](double) -> Vector { return Vector::Zero(m); };
  }
  spec.v0 = prm.initial_velocity ? project_field(basis, prm.initial_velocity) : Vector(Vector::Zero(m));
  return spec;
}

}  // namespace nctrl
