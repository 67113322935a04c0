#pragma once

#include "salab/rng.hpp"
#include "salab/types.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace salab {

enum class DriftKind {
  grad_quadratic,
  grad_generic,
  linear,
  contractive,
  quartic,
  exp_square,
  quartic_sine,
  custom,
};

std::string to_string(DriftKind kind);

/// out = field(x). Both spans have the operator's dimension.
using VectorField =
    std::function<void(std::span<const double> x, std::span<double> out)>;

/// L-smooth, sigma-strongly convex objective constants.
struct SmoothConvexCertificate {
  double L = 1.0;
  double sigma = 1.0;
};

/// Fixed-point map T of a contractive drift F(x) = T(x) - x, with the
/// weights of the norm it contracts in.
struct ContractionData {
  VectorField map;
  Vec weights;
};

/// The mean field F of the iteration x <- x + alpha * (F(x) + w), with its
/// root x* and, where known in closed form, the Lyapunov matrix M that
/// governs the limiting covariance (M = -H_f, A, or J - I).
///
/// Instances are immutable and cheap to copy; all construction goes through
/// the make_* factories, which check F(x*) = 0.
class DriftOperator {
 public:
  DriftKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(root_.size()); }
  const Vec& root() const { return root_; }

  const std::optional<Mat>& analytic_lyapunov_matrix() const {
    return lyapunov_matrix_;
  }
  const std::optional<SmoothConvexCertificate>& certificate() const {
    return certificate_;
  }
  const std::optional<ContractionData>& contraction() const {
    return contraction_;
  }

  /// Largest stepsize accepted by validation unless the user overrides it.
  double default_alpha_max() const { return default_alpha_max_; }

  /// Unchecked evaluation for inner loops.
  void evaluate(std::span<const double> x, std::span<double> out) const {
    field_(x, out);
  }

 private:
  DriftOperator() = default;

  friend DriftOperator build_drift(DriftKind, std::string, VectorField, Vec,
                                   std::optional<Mat>,
                                   std::optional<SmoothConvexCertificate>,
                                   std::optional<ContractionData>, double,
                                   std::optional<double>);

  DriftKind kind_ = DriftKind::custom;
  std::string name_;
  VectorField field_;
  Vec root_;
  std::optional<Mat> lyapunov_matrix_;
  std::optional<SmoothConvexCertificate> certificate_;
  std::optional<ContractionData> contraction_;
  double default_alpha_max_ = 0.1;
};

/// Low-level constructor used by the factories below. Throws ConfigError if
/// |F(root)| exceeds 1e-12 (relative to the problem scale). Without an
/// explicit alpha_max the default is 0.1 * min(1, sigma / L^2) from the
/// certificate, or 0.1.
DriftOperator build_drift(DriftKind kind, std::string name, VectorField field,
                          Vec root, std::optional<Mat> lyapunov_matrix,
                          std::optional<SmoothConvexCertificate> certificate,
                          std::optional<ContractionData> contraction,
                          double root_scale,
                          std::optional<double> alpha_max = std::nullopt);

// Catalog.

/// f(x) = (x - x*)^T H (x - x*) / 2 with H symmetric positive definite.
DriftOperator make_grad_quadratic(const Mat& hessian, const Vec& minimizer);
DriftOperator make_grad_generic(std::string name, VectorField gradient,
                                const Vec& minimizer,
                                std::optional<Mat> hessian = std::nullopt,
                                std::optional<SmoothConvexCertificate> cert =
                                    std::nullopt);
/// F(x) = A x + b, root solves A x = -b.
DriftOperator make_linear(const Mat& a, const Vec& b);
/// F(x) = T(x) - x with T(fixed_point) = fixed_point.
DriftOperator make_contractive(std::string name, VectorField map,
                               const Vec& fixed_point,
                               std::optional<Mat> jacobian, const Vec& weights);
/// T(x) = tanh(W x), fixed point 0, Jacobian W.
DriftOperator make_contractive_tanh(const Mat& gain);
/// f(x) = x^4 / 4.
DriftOperator make_quartic();
/// f(x) = exp(x^2).
DriftOperator make_exp_square();
/// f(x) = x^4 / 4 + sin^2(x) / 2.
DriftOperator make_quartic_sine();
DriftOperator make_custom(std::string name, VectorField field, const Vec& root,
                          std::optional<Mat> lyapunov_matrix = std::nullopt);

/// Registry consulted when a configuration names drift `custom`.
void register_custom_drift(const std::string& name,
                           std::function<DriftOperator()> factory);
std::optional<DriftOperator> find_custom_drift(const std::string& name);

// Operations.

/// F(x). Throws NumericalError("drift overflow") on a non-finite result.
Vec eval_drift(const DriftOperator& op, const Vec& x);

/// Central differences with step h, column by column.
Mat finite_difference_jacobian(const DriftOperator& op, const Vec& x,
                               double h = 1e-5);

enum class DerivativeSource { analytic_only, allow_finite_difference };

/// The Lyapunov-ready matrix M at the root (M = -H_f, A, or J - I), so that
/// the predicted covariance solves M S + S M^T + Sigma = 0.
Mat derivative_at_root(
    const DriftOperator& op,
    DerivativeSource source = DerivativeSource::allow_finite_difference);

struct HurwitzReport {
  bool hurwitz = false;
  double max_real_part = 0.0;
};

inline constexpr double kHurwitzTolerance = 1e-10;

HurwitzReport check_hurwitz(const Mat& m);

struct ContractionReport {
  double gamma_hat = 0.0;
  bool contractive = false;
};

double weighted_norm(const Eigen::Ref<const Vec>& v, const Vec& weights);

/// Largest observed ||T(x1) - T(x2)||_mu / ||x1 - x2||_mu over random pairs
/// drawn uniformly from the ball of the given radius around `center`.
ContractionReport probe_contraction(const VectorField& map, const Vec& weights,
                                    const Vec& center, int n_probes,
                                    double radius, RngState& rng);
ContractionReport check_contraction(const DriftOperator& op, int n_probes,
                                    double radius, RngState& rng);

}  // namespace salab
