#include "salab/noise.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace salab {

namespace {
const double kSqrt3 = std::sqrt(3.0);
}

std::string to_string(NoiseShape shape) {
  switch (shape) {
    case NoiseShape::gaussian: return "gaussian";
    case NoiseShape::uniform: return "uniform";
    case NoiseShape::rademacher: return "rademacher";
    case NoiseShape::noiseless: return "noiseless";
  }
  return "unknown";
}

NoiseShape parse_noise_shape(const std::string& name) {
  if (name == "gaussian") return NoiseShape::gaussian;
  if (name == "uniform") return NoiseShape::uniform;
  if (name == "rademacher") return NoiseShape::rademacher;
  if (name == "noiseless") return NoiseShape::noiseless;
  throw ConfigError("unknown noise shape '" + name + "'");
}

bool is_symmetric_positive_definite(const Mat& m) {
  if (m.rows() == 0 || m.rows() != m.cols() || !m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) return false;
  return llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0;
}

NoiseModel::NoiseModel(NoiseShape shape, Mat sigma)
    : shape_(shape), sigma_(std::move(sigma)) {
  if (sigma_.rows() == 0 || sigma_.rows() != sigma_.cols()) {
    throw ConfigError("noise covariance must be a non-empty square matrix");
  }
  if (shape_ == NoiseShape::noiseless) {
    chol_ = Mat::Zero(sigma_.rows(), sigma_.cols());
    sigma_ = chol_;
    diagonal_ = true;
    return;
  }
  if (!is_symmetric_positive_definite(sigma_)) {
    throw ConfigError("Sigma not positive definite");
  }
  Eigen::LLT<Mat> llt(sigma_);
  chol_ = llt.matrixL();
  diagonal_ = chol_.isDiagonal(0.0);
}

NoiseModel NoiseModel::noiseless(int dim) {
  return NoiseModel(NoiseShape::noiseless, Mat::Zero(dim, dim));
}

double NoiseModel::unit_draw(RngState& rng) const {
  switch (shape_) {
    case NoiseShape::gaussian: return rng.normal();
    case NoiseShape::uniform: return kSqrt3 * (2.0 * rng.uniform() - 1.0);
    case NoiseShape::rademacher: return rng.rademacher();
    case NoiseShape::noiseless: return 0.0;
  }
  return 0.0;
}

void NoiseModel::sample(RngState& rng, std::span<double> out) const {
  const auto d = static_cast<Eigen::Index>(out.size());
  if (shape_ == NoiseShape::noiseless) {
    for (double& v : out) v = 0.0;
    return;
  }
  if (diagonal_) {
    for (Eigen::Index i = 0; i < d; ++i) out[i] = chol_(i, i) * unit_draw(rng);
    return;
  }
  // Draw all of z before mixing so the stream consumption is the same
  // regardless of the factor's sparsity.
  for (Eigen::Index i = 0; i < d; ++i) out[i] = unit_draw(rng);
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) acc += chol_(i, j) * out[j];
    out[i] = acc;
  }
}

Vec sample_noise(const NoiseModel& nm, RngState& rng) {
  Vec w(nm.dim());
  nm.sample(rng, {w.data(), static_cast<std::size_t>(w.size())});
  return w;
}

}  // namespace salab
