#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace salab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Invalid user input: bad configuration values, unknown identifiers,
/// matrices that violate a structural requirement. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that cannot be completed: divergence, non-Hurwitz
/// Lyapunov matrix, singular systems. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Constant stepsize alpha > 0.
class StepSize {
 public:
  explicit StepSize(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw ConfigError("alpha must be positive");
    }
  }

  double value() const { return alpha_; }

 private:
  double alpha_;
};

/// Power-law scaling g(alpha) = c * alpha^p.
struct ScalingFn {
  double exponent = 0.5;
  double coefficient = 1.0;

  double operator()(double alpha) const {
    return coefficient * std::pow(alpha, exponent);
  }

  /// Stepsize of the scaled recursion viewed as an Euler scheme,
  /// (alpha / g(alpha))^2.
  double effective_step(double alpha) const {
    const double r = alpha / (*this)(alpha);
    return r * r;
  }
};

}  // namespace salab
