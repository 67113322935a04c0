#include "salab/lyapunov.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <stdexcept>

namespace salab {

namespace {

constexpr int kNodesPerPanel = 16;
constexpr int kNodesPerDecade = 256;
constexpr double kTailBound = 1e-8;

void check_inputs(const Mat& m, const Mat& sigma) {
  if (m.rows() != m.cols() || sigma.rows() != sigma.cols() || m.rows() != sigma.rows()) {
    throw std::invalid_argument("lyapunov: M and Sigma must be square of equal size");
  }
  if (m.rows() == 0) throw std::invalid_argument("lyapunov: empty matrix");
  if (!is_symmetric_positive_definite(sigma)) {
    throw ConfigError("Sigma not positive definite");
  }
  if (!check_hurwitz(m).hurwitz) {
    throw NumericalError("no unique PD solution guaranteed");
  }
}

LyapunovSolution finish(const Mat& m, const Mat& sigma, Mat s, LyapunovMethod method) {
  LyapunovSolution sol;
  sol.sigma_y = 0.5 * (s + s.transpose());
  sol.residual_norm = lyapunov_residual(m, sigma, sol.sigma_y);
  sol.min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Mat>(sol.sigma_y, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  sol.method = method;
  return sol;
}

}  // namespace

std::string to_string(LyapunovMethod method) {
  return method == LyapunovMethod::kronecker ? "kronecker" : "integral";
}

double lyapunov_residual(const Mat& m, const Mat& sigma, const Mat& s) {
  return (m * s + s * m.transpose() + sigma).norm();
}

LyapunovSolution solve_lyapunov(const Mat& m, const Mat& sigma) {
  check_inputs(m, sigma);
  const auto d = m.rows();
  const Mat eye = Mat::Identity(d, d);
  // Column-major vec: vec(M S) = (I (x) M) vec(S), vec(S M^T) = (M (x) I) vec(S).
  const Mat k = Eigen::kroneckerProduct(eye, m) + Eigen::kroneckerProduct(m, eye);
  Eigen::FullPivLU<Mat> lu(k);
  if (!lu.isInvertible()) throw NumericalError("singular Kronecker system");
  const Vec rhs = -Eigen::Map<const Vec>(sigma.data(), d * d);
  Vec x = lu.solve(rhs);
  // One step of iterative refinement keeps the certificate at round-off
  // level for poorly scaled M.
  x += lu.solve(rhs - k * x);
  return finish(m, sigma, Eigen::Map<const Mat>(x.data(), d, d), LyapunovMethod::kronecker);
}

LyapunovSolution solve_lyapunov_integral(const Mat& m, const Mat& sigma,
                                         int quad_points) {
  check_inputs(m, sigma);
  if (quad_points < 0) throw std::invalid_argument("quad_points must be non-negative");
  const auto d = m.rows();
  const double decay = -check_hurwitz(m).max_real_part;

  double upper = std::log(1.0 / kTailBound) / decay;
  while (Eigen::JacobiSVD<Mat>((m * upper).exp()).singularValues()(0) > kTailBound) upper *= 2.0;

  const double decades = upper * decay / std::log(10.0);
  const int nodes = quad_points > 0
                        ? quad_points
                        : static_cast<int>(std::ceil(decades * kNodesPerDecade));
  const double spectral_radius =
      Eigen::EigenSolver<Mat>(m, false).eigenvalues().cwiseAbs().maxCoeff();
  const int panels = std::max({1, (nodes + kNodesPerPanel - 1) / kNodesPerPanel,
                               static_cast<int>(std::ceil(2.0 * upper * spectral_radius))});
  const double width = upper / panels;

  using Rule = boost::math::quadrature::gauss<double, kNodesPerPanel>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();

  // Node offsets within a panel are shared, so exp(M (a + s)) = exp(M a) exp(M s).
  std::vector<Mat> node_exp;
  std::vector<double> node_weight;
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    for (double sgn : {-1.0, 1.0}) {
      if (abscissa[i] == 0.0 && sgn < 0.0) continue;
      const double s = 0.5 * width * (1.0 + sgn * abscissa[i]);
      node_exp.push_back((m * s).exp());
      node_weight.push_back(0.5 * width * weights[i]);
    }
  }

  Mat inner = Mat::Zero(d, d);
  for (std::size_t i = 0; i < node_exp.size(); ++i) {
    inner += node_weight[i] * node_exp[i] * sigma * node_exp[i].transpose();
  }
  Mat total = Mat::Zero(d, d);
  for (int k = 0; k < panels; ++k) {
    const Mat start = (m * (width * k)).exp();
    total += start * inner * start.transpose();
  }
  return finish(m, sigma, total, LyapunovMethod::integral);
}

LyapunovSolution predict_stationary(const DriftOperator& op, const NoiseModel& nm) {
  if (nm.dim() != op.dim()) throw std::invalid_argument("noise and drift dimensions differ");
  return solve_lyapunov(derivative_at_root(op), nm.sigma());
}

}  // namespace salab
