#include "salab/stats.hpp"

#include "salab/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace salab {

BatchMeans batch_means(std::span<const double> series, int batches) {
  const auto n = static_cast<long>(series.size());
  if (n < 2) throw std::invalid_argument("batch_means: need at least 2 values");
  BatchMeans out;
  double sum = 0.0;
  for (double v : series) sum += v;
  out.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : series) ss += (v - out.mean) * (v - out.mean);
  out.variance = ss / static_cast<double>(n - 1);

  if (batches < 2 || n < 2L * batches) {
    out.se = std::sqrt(out.variance / static_cast<double>(n));
    out.ess = static_cast<double>(n);
    return out;
  }
  const long b = n / batches;
  std::vector<double> means(static_cast<std::size_t>(batches));
  for (int k = 0; k < batches; ++k) {
    double s = 0.0;
    for (long i = k * b; i < (k + 1) * b; ++i) s += series[static_cast<std::size_t>(i)];
    means[static_cast<std::size_t>(k)] = s / static_cast<double>(b);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= batches;
  double vb = 0.0;
  for (double m : means) vb += (m - grand) * (m - grand);
  vb /= (batches - 1);

  out.se = std::sqrt(vb / batches);
  const double long_run = static_cast<double>(b) * vb;
  if (long_run > 0.0) {
    out.ess = std::clamp(static_cast<double>(n) * out.variance / long_run, 1.0,
                         static_cast<double>(n));
  } else {
    out.ess = static_cast<double>(n);
  }
  // The i.i.d. error is a floor: batch means cannot certify negative
  // autocorrelation from 20 batches.
  out.se = std::max(out.se, std::sqrt(out.variance / static_cast<double>(n)));
  return out;
}

double effective_sample_size(const Mat& samples, int batches) {
  double ess = static_cast<double>(samples.rows());
  std::vector<double> col(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    const double mu = samples.col(j).mean();
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      col[static_cast<std::size_t>(i)] = samples(i, j);
    }
    ess = std::min(ess, batch_means(col, batches).ess);
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      const double c = samples(i, j) - mu;
      col[static_cast<std::size_t>(i)] = c * c;
    }
    ess = std::min(ess, batch_means(col, batches).ess);
  }
  return ess;
}

double DensityEstimate::integral() const {
  double s = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    s += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
  }
  return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] =
        n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  }
  return g;
}

double silverman_bandwidth(std::span<const double> samples) {
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return 1.06 * sd * std::pow(n, -0.2);
}

DensityEstimate estimate_density(std::span<const double> samples,
                                 const std::vector<double>& grid) {
  if (samples.size() < 1000) {
    throw std::invalid_argument("estimate_density: need at least 1000 samples");
  }
  const double h = silverman_bandwidth(samples);
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw NumericalError("estimate_density: zero bandwidth (constant samples)");
  }
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  double delta = h / 32.0;
  constexpr double kMaxBins = 1 << 22;
  if ((hi - lo) / delta > kMaxBins) delta = (hi - lo) / kMaxBins;
  const auto nbins = static_cast<std::size_t>(std::ceil((hi - lo) / delta)) + 2;

  std::vector<double> weight(nbins, 0.0);
  for (double v : samples) {
    const double pos = (v - lo) / delta;
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    weight[k] += 1.0 - frac;
    weight[k + 1] += frac;
  }

  const double n = static_cast<double>(samples.size());
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  const double reach = 8.0 * h;
  DensityEstimate est;
  est.grid = grid;
  est.bandwidth = h;
  est.sample_count = static_cast<long>(samples.size());
  est.density.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double y = grid[g];
    const double first = std::max(0.0, std::ceil((y - reach - lo) / delta));
    const double last = std::min(static_cast<double>(nbins - 1),
                                 std::floor((y + reach - lo) / delta));
    double s = 0.0;
    for (double kk = first; kk <= last; kk += 1.0) {
      const auto k = static_cast<std::size_t>(kk);
      if (weight[k] == 0.0) continue;
      const double u = (y - (lo + kk * delta)) / h;
      s += weight[k] * std::exp(-0.5 * u * u);
    }
    est.density[g] = s * norm;
  }
  return est;
}

CfResidualReport cf_residual(const Mat& samples, const Mat& lyapunov_matrix,
                             const Mat& sigma, const std::vector<Vec>& t_grid) {
  const auto n = samples.rows();
  const auto d = samples.cols();
  if (lyapunov_matrix.rows() != d || sigma.rows() != d) {
    throw std::invalid_argument("cf_residual: dimension mismatch");
  }
  CfResidualReport rep;
  rep.t_grid = t_grid;
  std::vector<double> re(static_cast<std::size_t>(n));
  std::vector<double> im(static_cast<std::size_t>(n));
  for (const Vec& t : t_grid) {
    const double quad = t.dot(sigma * t);
    const Vec mt = lyapunov_matrix.transpose() * t;  // t' M y = (M' t)' y
    double sr = 0.0;
    double si = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double theta = samples.row(j).dot(t);
      const double b = samples.row(j).dot(mt);
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      // (quad - 2 i b)(c + i s)
      re[static_cast<std::size_t>(j)] = quad * c + 2.0 * b * s;
      im[static_cast<std::size_t>(j)] = quad * s - 2.0 * b * c;
      sr += re[static_cast<std::size_t>(j)];
      si += im[static_cast<std::size_t>(j)];
    }
    double mean_re = sr / static_cast<double>(n);
    double mean_im = si / static_cast<double>(n);
    double se_re = 0.0;
    double se_im = 0.0;
    if (quad != 0.0 && n >= 2) {
      se_re = batch_means(re).se;
      se_im = batch_means(im).se;
    } else {
      // Every summand carries a factor of t.
      mean_re = 0.0;
      mean_im = 0.0;
    }
    const double se = std::hypot(se_re, se_im);
    rep.residual_real.push_back(mean_re);
    rep.residual_imag.push_back(mean_im);
    rep.se_real.push_back(se_re);
    rep.se_imag.push_back(se_im);
    rep.monte_carlo_se.push_back(se);
    const double mag = std::hypot(mean_re, mean_im);
    rep.max_abs_residual = std::max(rep.max_abs_residual, mag);
    if (se > 0.0) rep.max_ratio = std::max(rep.max_ratio, mag / se);
  }
  return rep;
}

std::vector<Vec> default_t_grid(int dim) {
  std::vector<Vec> grid;
  if (dim == 1) {
    for (double m : {0.25, 0.5, 1.0, 2.0}) {
      grid.push_back(Vec::Constant(1, -m));
      grid.push_back(Vec::Constant(1, m));
    }
    return grid;
  }
  for (int i = 0; i < dim; ++i) {
    for (double m : {0.5, 1.0}) {
      for (double sgn : {-1.0, 1.0}) {
        Vec t = Vec::Zero(dim);
        t(i) = sgn * m;
        grid.push_back(t);
      }
    }
  }
  RngState rng(0x7d1c0ffeeULL, static_cast<std::uint64_t>(dim));
  for (int k = 0; k < 8; ++k) {
    Vec t(dim);
    do {
      for (int i = 0; i < dim; ++i) t(i) = rng.normal();
    } while (t.norm() == 0.0);
    grid.push_back(t / t.norm());
  }
  return grid;
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

GofReport gaussian_gof(const Mat& samples, const Mat& sigma_y) {
  const auto n = samples.rows();
  const auto d = samples.cols();
  if (sigma_y.rows() != d || sigma_y.cols() != d) {
    throw std::invalid_argument("gaussian_gof: dimension mismatch");
  }
  if (n < 2) throw std::invalid_argument("gaussian_gof: need at least 2 samples");
  Eigen::LLT<Mat> llt(sigma_y);
  if (llt.info() != Eigen::Success ||
      llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
    throw NumericalError("gaussian_gof: Sigma_Y is singular or not positive definite");
  }

  GofReport rep;
  rep.n = static_cast<long>(n);
  rep.n_eff = effective_sample_size(samples);

  const Vec mean = samples.colwise().mean().transpose();
  const Mat centered = samples.rowwise() - mean.transpose();
  rep.sample_covariance = centered.transpose() * centered / static_cast<double>(n - 1);

  std::vector<double> col(static_cast<std::size_t>(n));
  rep.mean_z.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) col[static_cast<std::size_t>(j)] = samples(j, i);
    const BatchMeans bm = batch_means(col);
    rep.mean_z(i) = bm.se > 0.0 ? bm.mean / bm.se : 0.0;
  }
  rep.mean_pass = (rep.mean_z.cwiseAbs().array() <= kMeanZLimit).all();

  double se_sq = 0.0;
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      for (Eigen::Index j = 0; j < n; ++j) {
        col[static_cast<std::size_t>(j)] = centered(j, a) * centered(j, b);
      }
      const double se = batch_means(col).se;
      se_sq += se * se;
    }
  }
  const double ref = sigma_y.norm();
  rep.cov_rel_err = (rep.sample_covariance - sigma_y).norm() / ref;
  rep.cov_rel_bound = kCovarianceSeMultiple * std::sqrt(se_sq) / ref;
  rep.cov_pass = rep.cov_rel_err <= rep.cov_rel_bound;

  if (d == 1) {
    std::vector<double> sorted(samples.data(), samples.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const double sd = std::sqrt(sigma_y(0, 0));
    double ks = 0.0;
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double f = normal_cdf(sorted[i] / sd);
      ks = std::max(ks, std::max(static_cast<double>(i + 1) / nn - f,
                                 f - static_cast<double>(i) / nn));
    }
    rep.ks_distance = ks;
    rep.ks_threshold = kKsCriticalValue / std::sqrt(rep.n_eff);
    rep.ks_pass = ks <= rep.ks_threshold;
  } else {
    rep.ks_distance = std::numeric_limits<double>::quiet_NaN();
    rep.ks_threshold = std::numeric_limits<double>::quiet_NaN();
  }
  rep.pass = rep.ks_pass && rep.mean_pass && rep.cov_pass;
  return rep;
}

FitReport log_density_fit(const DensityEstimate& est, double q,
                          double tail_trim) {
  if (!(q > 0.0)) throw std::invalid_argument("log_density_fit: q must be positive");
  if (!(tail_trim > 0.0 && tail_trim < 0.5)) {
    throw std::invalid_argument("log_density_fit: tail_trim must lie in (0, 0.5)");
  }
  const auto& g = est.grid;
  const auto& p = est.density;
  if (g.size() < 2) throw std::invalid_argument("log_density_fit: grid too small");
  auto interp = [&](double y) -> double {
    if (y < g.front() || y > g.back()) return 0.0;
    auto it = std::upper_bound(g.begin(), g.end(), y);
    if (it == g.end()) return p.back();
    const auto k = static_cast<std::size_t>(it - g.begin());
    if (k == 0) return p.front();
    const double w = (y - g[k - 1]) / (g[k] - g[k - 1]);
    return (1.0 - w) * p[k - 1] + w * p[k];
  };

  std::vector<double> ys;
  std::vector<double> ps;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 0.0) continue;
    ys.push_back(g[i]);
    ps.push_back(0.5 * (p[i] + interp(-g[i])));
  }
  const double peak = ps.empty() ? 0.0 : *std::max_element(ps.begin(), ps.end());
  std::vector<double> xs;
  std::vector<double> ls;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (ps[i] > 0.0 && ps[i] >= tail_trim * peak) {
      xs.push_back(std::pow(ys[i], q));
      ls.push_back(std::log(ps[i]));
    }
  }
  if (xs.size() < 10) {
    throw NumericalError("log_density_fit: fewer than 10 points retained");
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ls[i];
  }
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ls[i] - my);
    syy += (ls[i] - my) * (ls[i] - my);
  }
  FitReport rep;
  rep.q = q;
  rep.points = static_cast<int>(xs.size());
  rep.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  rep.intercept = my - rep.slope * mx;
  rep.r_squared = (sxx > 0.0 && syy > 0.0)
                      ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0)
                      : 0.0;
  return rep;
}

TrendReport convergence_trend(const std::vector<DensityEstimate>& curves) {
  if (curves.size() < 3) {
    throw std::invalid_argument("convergence_trend: need at least 3 curves");
  }
  auto sup_diff = [](const DensityEstimate& a, const DensityEstimate& b) {
    if (a.grid != b.grid) {
      throw std::invalid_argument("convergence_trend: curves need a common grid");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.density.size(); ++i) {
      m = std::max(m, std::abs(a.density[i] - b.density[i]));
    }
    return m;
  };
  const auto k = curves.size();
  TrendReport rep;
  rep.diff_largest_pair = sup_diff(curves[0], curves[1]);
  rep.diff_smallest_pair = sup_diff(curves[k - 2], curves[k - 1]);
  for (std::size_t i = k - 2; i < k; ++i) {
    for (double v : curves[i].density) {
      rep.peak_smallest_pair = std::max(rep.peak_smallest_pair, v);
    }
  }
  rep.converging =
      rep.diff_smallest_pair <= kTrendSpreadFactor * rep.diff_largest_pair &&
      rep.diff_smallest_pair <= kTrendRelativeLimit * rep.peak_smallest_pair;
  return rep;
}

}  // namespace salab
