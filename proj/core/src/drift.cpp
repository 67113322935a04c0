#include "salab/drift.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace salab {

namespace {

constexpr double kRootTolerance = 1e-12;

std::span<const double> as_span(const Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

std::span<double> as_span(Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void require_square(const Mat& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw ConfigError(std::string(what) + " must be a non-empty square matrix");
  }
  if (!m.allFinite()) {
    throw ConfigError(std::string(what) + " has non-finite entries");
  }
}

double alpha_max_from(double sigma, double lipschitz) {
  if (!(sigma > 0.0) || !(lipschitz > 0.0)) {
    return 0.1;
  }
  return 0.1 * std::min(1.0, sigma / (lipschitz * lipschitz));
}

double spectral_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

// Scalar catalog entries with x* = 0.
DriftOperator scalar_drift(DriftKind kind, std::string name,
                           double (*f)(double), double lyapunov) {
  VectorField field = [f](std::span<const double> x, std::span<double> out) {
    out[0] = f(x[0]);
  };
  return build_drift(kind, std::move(name), std::move(field), Vec::Zero(1),
                     Mat::Constant(1, 1, lyapunov), std::nullopt, std::nullopt,
                     1.0);
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::function<DriftOperator()>>& registry() {
  static std::map<std::string, std::function<DriftOperator()>> r;
  return r;
}

}  // namespace

std::string to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::grad_quadratic: return "grad_quadratic";
    case DriftKind::grad_generic: return "grad_generic";
    case DriftKind::linear: return "linear";
    case DriftKind::contractive: return "contractive";
    case DriftKind::quartic: return "quartic";
    case DriftKind::exp_square: return "exp_square";
    case DriftKind::quartic_sine: return "quartic_sine";
    case DriftKind::custom: return "custom";
  }
  return "unknown";
}

DriftOperator build_drift(DriftKind kind, std::string name, VectorField field,
                          Vec root, std::optional<Mat> lyapunov_matrix,
                          std::optional<SmoothConvexCertificate> certificate,
                          std::optional<ContractionData> contraction,
                          double root_scale, std::optional<double> alpha_max) {
  if (root.size() == 0 || !root.allFinite()) {
    throw ConfigError("drift root must be a finite, non-empty vector");
  }
  if (lyapunov_matrix &&
      (lyapunov_matrix->rows() != root.size() ||
       lyapunov_matrix->cols() != root.size())) {
    throw ConfigError("Lyapunov matrix dimension does not match the root");
  }
  if (certificate && !(certificate->sigma > 0.0 &&
                       certificate->sigma <= certificate->L)) {
    throw ConfigError("smooth/strongly-convex certificate needs 0 < sigma <= L");
  }

  Vec at_root(root.size());
  field(as_span(root), as_span(at_root));
  const double tol = kRootTolerance * std::max(1.0, root_scale);
  if (!at_root.allFinite() || at_root.norm() > tol) {
    throw ConfigError("drift '" + name + "' does not vanish at its root");
  }

  DriftOperator op;
  op.kind_ = kind;
  op.name_ = std::move(name);
  op.field_ = std::move(field);
  op.root_ = std::move(root);
  op.lyapunov_matrix_ = std::move(lyapunov_matrix);
  op.certificate_ = certificate;
  op.contraction_ = std::move(contraction);
  if (alpha_max) {
    op.default_alpha_max_ = *alpha_max;
  } else if (certificate) {
    op.default_alpha_max_ = alpha_max_from(certificate->sigma, certificate->L);
  }
  return op;
}

DriftOperator make_grad_quadratic(const Mat& hessian, const Vec& minimizer) {
  require_square(hessian, "Hessian");
  if (minimizer.size() != hessian.rows()) {
    throw ConfigError("minimizer dimension does not match the Hessian");
  }
  if (!hessian.isApprox(hessian.transpose(), 1e-12)) {
    throw ConfigError("Hessian must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(hessian);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    throw ConfigError("Hessian must be positive definite");
  }
  VectorField field = [hessian, minimizer](std::span<const double> x,
                                           std::span<double> out) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::Map<const Vec> xv(x.data(), n);
    Eigen::Map<Vec> ov(out.data(), n);
    ov.noalias() = -hessian * (xv - minimizer);
  };
  return build_drift(DriftKind::grad_quadratic, "grad_quadratic",
                     std::move(field), minimizer, Mat(-hessian),
                     SmoothConvexCertificate{hi, lo}, std::nullopt,
                     hessian.norm() * (1.0 + minimizer.norm()));
}

DriftOperator make_grad_generic(std::string name, VectorField gradient,
                                const Vec& minimizer, std::optional<Mat> hessian,
                                std::optional<SmoothConvexCertificate> cert) {
  VectorField field = [gradient = std::move(gradient)](
                          std::span<const double> x, std::span<double> out) {
    gradient(x, out);
    for (double& v : out) v = -v;
  };
  std::optional<Mat> m;
  if (hessian) {
    require_square(*hessian, "Hessian");
    m = Mat(-*hessian);
  }
  return build_drift(DriftKind::grad_generic, std::move(name),
                     std::move(field), minimizer, std::move(m), cert,
                     std::nullopt, 1.0);
}

DriftOperator make_linear(const Mat& a, const Vec& b) {
  require_square(a, "A");
  if (b.size() != a.rows()) {
    throw ConfigError("b dimension does not match A");
  }
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) {
    throw ConfigError("A is singular; A x + b = 0 has no unique root");
  }
  Vec root = lu.solve(-b);
  VectorField field = [a, b](std::span<const double> x, std::span<double> out) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::Map<const Vec> xv(x.data(), n);
    Eigen::Map<Vec> ov(out.data(), n);
    ov.noalias() = a * xv + b;
  };
  // sigma ||x - x*||^2 <= -<F(x), x - x*> when the symmetric part of A is
  // negative definite; otherwise fall back to the spectral abscissa.
  Eigen::SelfAdjointEigenSolver<Mat> sym(-(a + a.transpose()) / 2.0);
  double sigma = sym.eigenvalues().minCoeff();
  if (!(sigma > 0.0)) {
    sigma = -check_hurwitz(a).max_real_part;
  }
  const double scale = a.norm() * root.norm() + b.norm();
  return build_drift(DriftKind::linear, "linear", std::move(field), root, a,
                     std::nullopt, std::nullopt, scale,
                     alpha_max_from(sigma, spectral_norm(a)));
}

DriftOperator make_contractive(std::string name, VectorField map,
                               const Vec& fixed_point,
                               std::optional<Mat> jacobian, const Vec& weights) {
  if (weights.size() != fixed_point.size() || !(weights.array() > 0.0).all()) {
    throw ConfigError("contraction weights must be positive, one per coordinate");
  }
  VectorField field = [map](std::span<const double> x, std::span<double> out) {
    map(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] -= x[i];
  };
  std::optional<Mat> m;
  std::optional<double> alpha_max;
  if (jacobian) {
    require_square(*jacobian, "Jacobian");
    m = Mat(*jacobian - Mat::Identity(jacobian->rows(), jacobian->cols()));
    // Local modulus in the weighted norm: ||D^1/2 J D^-1/2||_2.
    const Vec root_w = weights.array().sqrt().matrix();
    const Mat scaled =
        root_w.asDiagonal() * (*jacobian) * root_w.cwiseInverse().asDiagonal();
    const double gamma = spectral_norm(scaled);
    if (gamma < 1.0) {
      alpha_max = alpha_max_from(1.0 - gamma, 1.0 + gamma);
    }
  }
  return build_drift(DriftKind::contractive, std::move(name), std::move(field),
                     fixed_point, std::move(m), std::nullopt,
                     ContractionData{std::move(map), weights},
                     1.0 + fixed_point.norm(), alpha_max);
}

DriftOperator make_contractive_tanh(const Mat& gain) {
  require_square(gain, "gain");
  VectorField map = [gain](std::span<const double> x, std::span<double> out) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::Map<const Vec> xv(x.data(), n);
    Eigen::Map<Vec> ov(out.data(), n);
    ov.noalias() = gain * xv;
    ov = ov.array().tanh().matrix();
  };
  const auto d = gain.rows();
  return make_contractive("contractive_tanh", std::move(map), Vec::Zero(d),
                          gain, Vec::Ones(d));
}

DriftOperator make_quartic() {
  return scalar_drift(DriftKind::quartic, "quartic",
                      [](double x) { return -x * x * x; }, 0.0);
}

DriftOperator make_exp_square() {
  return scalar_drift(DriftKind::exp_square, "exp_square",
                      [](double x) { return -2.0 * x * std::exp(x * x); },
                      -2.0);
}

DriftOperator make_quartic_sine() {
  return scalar_drift(
      DriftKind::quartic_sine, "quartic_sine",
      [](double x) { return -(x * x * x + std::sin(x) * std::cos(x)); }, -1.0);
}

DriftOperator make_custom(std::string name, VectorField field, const Vec& root,
                          std::optional<Mat> lyapunov_matrix) {
  return build_drift(DriftKind::custom, std::move(name), std::move(field), root,
                     std::move(lyapunov_matrix), std::nullopt, std::nullopt,
                     1.0);
}

void register_custom_drift(const std::string& name,
                           std::function<DriftOperator()> factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::optional<DriftOperator> find_custom_drift(const std::string& name) {
  std::function<DriftOperator()> factory;
  {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end()) return std::nullopt;
    factory = it->second;
  }
  return factory();
}

Vec eval_drift(const DriftOperator& op, const Vec& x) {
  if (x.size() != op.dim()) {
    throw std::invalid_argument("eval_drift: dimension mismatch");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("eval_drift: non-finite state");
  }
  Vec out(x.size());
  op.evaluate(as_span(x), as_span(out));
  if (!out.allFinite()) {
    throw NumericalError("drift overflow");
  }
  return out;
}

Mat finite_difference_jacobian(const DriftOperator& op, const Vec& x,
                               double h) {
  const auto d = x.size();
  Mat jac(d, d);
  Vec xp = x;
  Vec xm = x;
  Vec fp(d);
  Vec fm(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    op.evaluate(as_span(xp), as_span(fp));
    op.evaluate(as_span(xm), as_span(fm));
    jac.col(j) = (fp - fm) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  if (!jac.allFinite()) {
    throw NumericalError("drift overflow while differentiating");
  }
  return jac;
}

Mat derivative_at_root(const DriftOperator& op, DerivativeSource source) {
  if (op.analytic_lyapunov_matrix()) {
    return *op.analytic_lyapunov_matrix();
  }
  if (source == DerivativeSource::analytic_only) {
    throw NumericalError("no analytic derivative for drift '" + op.name() +
                         "'");
  }
  constexpr double h = 1e-5;
  const Vec& root = op.root();
  const Mat central = finite_difference_jacobian(op, root, h);
  const Mat fine = finite_difference_jacobian(op, root, h / 10.0);

  // One-sided differences catch kinks that central differences average away.
  const auto d = root.size();
  Vec f0(d);
  Vec fs(d);
  Vec x = root;
  op.evaluate(as_span(x), as_span(f0));
  Mat forward(d, d);
  Mat backward(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    x(j) = root(j) + h;
    op.evaluate(as_span(x), as_span(fs));
    forward.col(j) = (fs - f0) / h;
    x(j) = root(j) - h;
    op.evaluate(as_span(x), as_span(fs));
    backward.col(j) = (f0 - fs) / h;
    x(j) = root(j);
  }
  const double scale = 1.0 + central.cwiseAbs().maxCoeff();
  const double refine_gap = (central - fine).cwiseAbs().maxCoeff();
  const double side_gap = (forward - backward).cwiseAbs().maxCoeff();
  if (!fine.allFinite() || refine_gap > 1e-4 * scale ||
      side_gap > 1e-3 * scale) {
    throw NumericalError("drift '" + op.name() +
                         "' is not differentiable at its root");
  }
  return central;
}

HurwitzReport check_hurwitz(const Mat& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw std::invalid_argument("check_hurwitz: matrix must be square");
  }
  if (!m.allFinite()) {
    throw NumericalError("check_hurwitz: non-finite matrix");
  }
  Eigen::EigenSolver<Mat> eig(m, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigenvalue iteration failed");
  }
  const double max_re = eig.eigenvalues().real().maxCoeff();
  return {max_re < -kHurwitzTolerance, max_re};
}

double weighted_norm(const Eigen::Ref<const Vec>& v, const Vec& weights) {
  return std::sqrt((weights.array() * v.array().square()).sum());
}

ContractionReport probe_contraction(const VectorField& map, const Vec& weights,
                                    const Vec& center, int n_probes,
                                    double radius, RngState& rng) {
  if (n_probes < 1 || !(radius > 0.0)) {
    throw std::invalid_argument("probe_contraction: need n_probes >= 1, radius > 0");
  }
  const auto d = center.size();
  auto draw = [&](Vec& x) {
    Vec dir(d);
    for (Eigen::Index i = 0; i < d; ++i) dir(i) = rng.normal();
    const double n = dir.norm();
    if (n == 0.0) {
      x = center;
      return;
    }
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    x = center + dir * (r / n);
  };

  Vec x1(d), x2(d), t1(d), t2(d);
  double gamma = 0.0;
  for (int k = 0; k < n_probes; ++k) {
    double gap = 0.0;
    do {
      draw(x1);
      draw(x2);
      gap = weighted_norm(x1 - x2, weights);
    } while (gap == 0.0);
    map(as_span(x1), as_span(t1));
    map(as_span(x2), as_span(t2));
    gamma = std::max(gamma, weighted_norm(t1 - t2, weights) / gap);
  }
  return {gamma, gamma < 1.0};
}

ContractionReport check_contraction(const DriftOperator& op, int n_probes,
                                    double radius, RngState& rng) {
  if (!op.contraction()) {
    throw std::invalid_argument("check_contraction: drift '" + op.name() +
                                "' is not of contractive kind");
  }
  return probe_contraction(op.contraction()->map, op.contraction()->weights,
                           op.root(), n_probes, radius, rng);
}

}  // namespace salab
