#pragma once

#include "salab/types.hpp"

#include <span>
#include <vector>

namespace salab {

// Batch means ------------------------------------------------------------

inline constexpr int kDefaultBatches = 20;

struct BatchMeans {
  double mean = 0.0;
  double variance = 0.0;  // sample variance, n - 1 divisor
  double se = 0.0;        // standard error of the mean
  double ess = 0.0;       // effective sample size, in [1, n]
};

/// Non-overlapping batch means over the series in its stored order. Series
/// shorter than 2 * batches fall back to the i.i.d. formulas.
BatchMeans batch_means(std::span<const double> series,
                       int batches = kDefaultBatches);

/// min over coordinates of the batch-means ESS of y_i and of y_i^2.
double effective_sample_size(const Mat& samples,
                             int batches = kDefaultBatches);

// Density estimation -----------------------------------------------------

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  long sample_count = 0;

  /// Trapezoidal integral of the density over the grid.
  double integral() const;
};

/// 1.06 * sd * n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian-kernel estimate with Silverman bandwidth, evaluated on `grid`.
/// Samples are linearly binned onto a mesh of width h / 32 first, which
/// keeps the cost independent of the sample count. Requires >= 1000 samples
/// with non-zero spread.
DensityEstimate estimate_density(std::span<const double> samples,
                                 const std::vector<double>& grid);

std::vector<double> linspace(double lo, double hi, int n);

// Characteristic-function residual --------------------------------------

struct CfResidualReport {
  std::vector<Vec> t_grid;
  std::vector<double> residual_real;
  std::vector<double> residual_imag;
  std::vector<double> se_real;
  std::vector<double> se_imag;
  std::vector<double> monte_carlo_se;  // sqrt(se_real^2 + se_imag^2)
  double max_abs_residual = 0.0;
  double max_ratio = 0.0;  // max_t |residual| / se
};

/// Monte-Carlo estimate, per t, of E[(t' S t - 2i t' M Y) exp(i t' Y)],
/// which vanishes for the Gaussian solving M C + C M' + S = 0.
CfResidualReport cf_residual(const Mat& samples, const Mat& lyapunov_matrix,
                             const Mat& sigma, const std::vector<Vec>& t_grid);

/// d = 1: {+-0.25, +-0.5, +-1, +-2}. d > 1: +-e_i at magnitudes 0.5 and 1,
/// plus 8 seeded random unit directions.
std::vector<Vec> default_t_grid(int dim);

// Goodness of fit --------------------------------------------------------

inline constexpr double kKsCriticalValue = 1.95;
inline constexpr double kMeanZLimit = 4.0;
inline constexpr double kCovarianceSeMultiple = 5.0;

struct GofReport {
  double ks_distance = 0.0;  // NaN for d > 1
  double ks_threshold = 0.0;
  long n = 0;
  double n_eff = 0.0;
  Vec mean_z;
  Mat sample_covariance;
  double cov_rel_err = 0.0;
  double cov_rel_bound = 0.0;
  bool ks_pass = true;
  bool mean_pass = true;
  bool cov_pass = true;
  bool pass = false;
};

/// Compares samples with N(0, Sigma_Y): KS distance (scalar case) against
/// 1.95 / sqrt(n_eff), standardized mean, and relative Frobenius error of
/// the sample covariance against five batch-means standard errors.
GofReport gaussian_gof(const Mat& samples, const Mat& sigma_y);

double normal_cdf(double x);

// Log-density regression ------------------------------------------------

struct FitReport {
  double q = 2.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

/// Least squares of log p(|y|) on |y|^q, where p is symmetrized as
/// (p(y) + p(-y)) / 2 and points below tail_trim * max are dropped.
FitReport log_density_fit(const DensityEstimate& est, double q,
                          double tail_trim = 0.01);

// Convergence across stepsizes ------------------------------------------

inline constexpr double kTrendSpreadFactor = 3.0;
inline constexpr double kTrendRelativeLimit = 0.2;

struct TrendReport {
  double diff_largest_pair = 0.0;   // sup |p(a1) - p(a2)| for the two largest alphas
  double diff_smallest_pair = 0.0;  // same for the two smallest
  double peak_smallest_pair = 0.0;
  bool converging = false;
};

/// Densities on a common grid, ordered by decreasing alpha. Converging when
/// the smallest-alpha pair differs by at most 3x the largest-alpha pair and
/// by at most 20% of its peak height.
TrendReport convergence_trend(const std::vector<DensityEstimate>& curves);

}  // namespace salab
