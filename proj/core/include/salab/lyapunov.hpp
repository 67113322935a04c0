#pragma once

#include "salab/drift.hpp"
#include "salab/noise.hpp"
#include "salab/types.hpp"

#include <string>

namespace salab {

enum class LyapunovMethod { kronecker, integral };

std::string to_string(LyapunovMethod method);

/// Solution S of M S + S M^T + Sigma = 0.
struct LyapunovSolution {
  Mat sigma_y;
  double residual_norm = 0.0;  // ||M S + S M^T + Sigma||_F
  double min_eigenvalue = 0.0;
  LyapunovMethod method = LyapunovMethod::kronecker;
};

/// Dense solve of (I (x) M + M (x) I) vec(S) = -vec(Sigma). Requires M
/// Hurwitz (NumericalError "no unique PD solution guaranteed") and Sigma
/// symmetric positive definite (ConfigError).
LyapunovSolution solve_lyapunov(const Mat& m, const Mat& sigma);

/// S = int_0^U exp(M u) Sigma exp(M^T u) du by composite 16-point
/// Gauss-Legendre, with U large enough that ||exp(M U)||_2 <= 1e-8.
/// quad_points is the total node count; 0 means 256 per decade of decay.
LyapunovSolution solve_lyapunov_integral(const Mat& m, const Mat& sigma,
                                         int quad_points = 0);

/// solve_lyapunov(derivative_at_root(op), nm.sigma()).
LyapunovSolution predict_stationary(const DriftOperator& op, const NoiseModel& nm);

double lyapunov_residual(const Mat& m, const Mat& sigma, const Mat& s);

}  // namespace salab
