#include "salab/cli/figures.hpp"

#include "salab/config.hpp"
#include "salab/csv.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace salab::cli {

namespace {

const std::vector<double> kDecades{1e-1, 1e-2, 1e-3, 1e-4};

std::vector<double> column(const Mat& samples, double factor) {
  std::vector<double> v(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    v[static_cast<std::size_t>(i)] = samples(i, 0) * factor;
  }
  return v;
}

double sample_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> symmetric_grid(double spread, int points) {
  const double half = std::ceil(6.0 * spread * 2.0) / 2.0;
  return linspace(-half, half, points);
}

}  // namespace

const std::vector<FigureFamily>& figure_families() {
  static const std::vector<FigureFamily> families{
      {"quartic", "quartic", 0.25, kDecades, 32, 1000, 0.1, 3.0},
      {"exp_square", "exp_square", 0.5, kDecades, 64, 4000, 0.1, 5.0},
      {"quartic_sine", "quartic_sine", 0.5, kDecades, 64, 4000, 0.1, 5.0},
  };
  return families;
}

const std::vector<FigureSpec>& figure_catalog() {
  static const std::vector<FigureSpec> catalog{
      {"fig1", "quartic", FigureKind::density, 0.5, 1e-3, {},
       "quartic drift, densities under g = alpha^(1/2)"},
      {"fig2", "quartic", FigureKind::density, 0.25, 1e-3, {},
       "quartic drift, densities under g = alpha^(1/4)"},
      {"fig3", "quartic", FigureKind::log_fit, 0.25, 1e-3, {4.0, 2.0},
       "quartic drift, log density against y^4"},
      {"fig4", "exp_square", FigureKind::density, 0.5, 1e-3, {},
       "exp-square drift, densities under g = alpha^(1/2)"},
      {"fig5", "exp_square", FigureKind::log_fit, 0.5, 1e-3, {2.0, 4.0},
       "exp-square drift, log density against y^2"},
      {"fig10", "quartic_sine", FigureKind::density, 0.5, 1e-3, {},
       "quartic-sine drift, densities under g = alpha^(1/2)"},
      {"fig11", "quartic_sine", FigureKind::density, 0.25, 1e-3, {},
       "quartic-sine drift, densities under g = alpha^(1/4)"},
      {"fig12", "quartic_sine", FigureKind::log_fit, 0.5, 1e-3, {2.0, 4.0},
       "quartic-sine drift, log density against y^2"},
  };
  return catalog;
}

const FigureSpec& find_figure(const std::string& name) {
  for (const auto& f : figure_catalog()) {
    if (f.name == name) return f;
  }
  throw ConfigError("unknown figure name '" + name + "'");
}

const FigureFamily& find_family(const std::string& name) {
  for (const auto& f : figure_families()) {
    if (f.name == name) return f;
  }
  throw ConfigError("unknown figure family '" + name + "'");
}

const ChainEnsemble& EnsembleCache::get(const FigureFamily& fam,
                                        std::size_t alpha_index,
                                        std::uint64_t seed, int threads) {
  const auto key = std::make_tuple(fam.name, alpha_index, seed);
  if (auto it = store_.find(key); it != store_.end()) return it->second;

  const DriftOperator op = drift_from_config(fam.drift_id, {});
  const NoiseModel noise(NoiseShape::gaussian, Mat::Identity(1, 1));
  const double alpha = fam.alphas.at(alpha_index);
  const ScalingFn g{fam.natural_exponent, 1.0};
  const double dt = g.effective_step(alpha);
  EnsembleParams p;
  p.n_chains = fam.n_chains;
  p.samples_per_chain = fam.samples_per_chain;
  p.thin = std::max(1L, static_cast<long>(std::ceil(fam.thin_time / dt)));
  p.burn_in = static_cast<long>(std::ceil(fam.burn_in_time / dt));
  p.seed = seed;
  p.stream_base = static_cast<std::uint64_t>(alpha_index) << 32;
  p.threads = threads;
  return store_.emplace(key, run_ensemble(op, noise, StepSize(alpha), g, p)).first->second;
}

FigureResult compute_figure(const std::string& name, std::uint64_t seed,
                            int threads, EnsembleCache& cache) {
  FigureResult out;
  out.spec = find_figure(name);
  const FigureFamily& fam = find_family(out.spec.family);
  // Samples are stored under the natural exponent; Y under g = alpha^q is
  // Y_nat * alpha^(p_nat - q).
  auto display = [&](std::size_t i) {
    const double a = fam.alphas[i];
    const ChainEnsemble& ens = cache.get(fam, i, seed, threads);
    return column(ens.samples, std::pow(a, fam.natural_exponent - out.spec.display_exponent));
  };

  if (out.spec.kind == FigureKind::density) {
    std::vector<std::vector<double>> data;
    for (std::size_t i = 0; i < fam.alphas.size(); ++i) {
      data.push_back(display(i));
      out.alphas.push_back(fam.alphas[i]);
      out.stds.push_back(sample_std(data.back()));
    }
    const auto grid =
        symmetric_grid(*std::max_element(out.stds.begin(), out.stds.end()), 1201);
    for (const auto& d : data) out.curves.push_back(estimate_density(d, grid));
    out.trend = convergence_trend(out.curves);
  } else {
    const auto it = std::find(fam.alphas.begin(), fam.alphas.end(), out.spec.fit_alpha);
    const auto i = static_cast<std::size_t>(it - fam.alphas.begin());
    const auto data = display(i);
    out.alphas.push_back(out.spec.fit_alpha);
    out.stds.push_back(sample_std(data));
    out.fit_density = estimate_density(data, symmetric_grid(out.stds.back(), 801));
    out.curves.push_back(*out.fit_density);
    for (double q : out.spec.fit_q) out.fits.push_back(log_density_fit(*out.fit_density, q));
  }
  return out;
}

std::vector<std::string> write_figure(const FigureResult& fig, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < fig.curves.size(); ++i) {
    const std::string name = "density_" + alpha_tag(fig.alphas[i]) + ".csv";
    CsvWriter w(dir + "/" + name, {"y", "p_hat"});
    const auto& c = fig.curves[i];
    for (std::size_t k = 0; k < c.grid.size(); ++k) {
      w.cell(c.grid[k]);
      w.cell(c.density[k]);
      w.end_row();
    }
    files.push_back(name);
  }
  if (fig.trend) {
    CsvWriter w(dir + "/trend.csv", {"metric", "alpha", "value"});
    for (std::size_t i = 0; i < fig.alphas.size(); ++i) {
      w.cell(std::string("std"));
      w.cell(fig.alphas[i]);
      w.cell(fig.stds[i]);
      w.end_row();
    }
    const auto& t = *fig.trend;
    for (const auto& [k, v] :
         {std::pair<std::string, double>{"diff_largest_pair", t.diff_largest_pair},
          {"diff_smallest_pair", t.diff_smallest_pair},
          {"peak_smallest_pair", t.peak_smallest_pair},
          {"converging", t.converging ? 1.0 : 0.0}}) {
      w.cell(k);
      w.cell(std::string());
      w.cell(v);
      w.end_row();
    }
    files.push_back("trend.csv");
  }
  if (!fig.fits.empty()) {
    CsvWriter w(dir + "/logfit.csv",
                {"alpha", "q", "slope", "intercept", "r_squared", "points"});
    for (const auto& f : fig.fits) {
      w.cell(fig.alphas.front());
      w.cell(f.q);
      w.cell(f.slope);
      w.cell(f.intercept);
      w.cell(f.r_squared);
      w.cell(static_cast<long>(f.points));
      w.end_row();
    }
    files.push_back("logfit.csv");
  }
  return files;
}

}  // namespace salab::cli
