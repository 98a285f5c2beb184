#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nctrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Argument outside the mathematical domain of an operation (s > t, eps <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A map, kernel or nonlinearity produced a NaN/Inf sample.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iteration failed to meet its tolerance. Carries the successive distances.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> distances)
      : std::runtime_error(what), distances_(std::move(distances)) {}

  const std::vector<double>& distances() const { return distances_; }

 private:
  std::vector<double> distances_;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline double sup_distance(const std::vector<Vector>& a,
                           const std::vector<Vector>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    d = std::max(d, (a[i] - b[i]).norm());
  }
  return d;
}

}  // namespace nctrl
