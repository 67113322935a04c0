#pragma once

#include "salab/rng.hpp"
#include "salab/types.hpp"

#include <span>
#include <string>

namespace salab {

/// Distribution of the unit-variance coordinates z before the Cholesky
/// factor is applied. `noiseless` draws w = 0 and is a debug mode only.
enum class NoiseShape { gaussian, uniform, rademacher, noiseless };

std::string to_string(NoiseShape shape);
NoiseShape parse_noise_shape(const std::string& name);

/// i.i.d. zero-mean noise with covariance Sigma: w = L z, L L^T = Sigma.
class NoiseModel {
 public:
  /// Throws ConfigError unless Sigma is symmetric positive definite (any
  /// Sigma is accepted, and ignored, for the noiseless shape).
  NoiseModel(NoiseShape shape, Mat sigma);

  static NoiseModel noiseless(int dim);

  NoiseShape shape() const { return shape_; }
  const Mat& sigma() const { return sigma_; }
  const Mat& cholesky_factor() const { return chol_; }
  int dim() const { return static_cast<int>(sigma_.rows()); }

  /// Writes one draw into `out` (size dim()).
  void sample(RngState& rng, std::span<double> out) const;

 private:
  double unit_draw(RngState& rng) const;

  NoiseShape shape_;
  Mat sigma_;
  Mat chol_;
  bool diagonal_ = false;
};

Vec sample_noise(const NoiseModel& nm, RngState& rng);

/// True when `m` is symmetric (1e-12 relative) with a successful LLT.
bool is_symmetric_positive_definite(const Mat& m);

}  // namespace salab
