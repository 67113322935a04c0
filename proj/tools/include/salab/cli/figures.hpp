#pragma once

#include "salab/simulate.hpp"
#include "salab/stats.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace salab::cli {

/// One drift simulated across the stepsize decades. Burn-in and thinning are
/// given in units of the scaled recursion's time, alpha / g(alpha) squared
/// per step under the family's natural exponent.
struct FigureFamily {
  std::string name;
  std::string drift_id;
  double natural_exponent = 0.5;
  std::vector<double> alphas;
  int n_chains = 64;
  int samples_per_chain = 1000;
  double thin_time = 0.1;
  double burn_in_time = 5.0;
};

enum class FigureKind { density, log_fit };

struct FigureSpec {
  std::string name;
  std::string family;
  FigureKind kind = FigureKind::density;
  double display_exponent = 0.5;
  double fit_alpha = 1e-3;
  std::vector<double> fit_q;  // first entry is the figure's own axis
  std::string caption;
};

const std::vector<FigureFamily>& figure_families();
const std::vector<FigureSpec>& figure_catalog();
/// Throws ConfigError("unknown figure name ...").
const FigureSpec& find_figure(const std::string& name);
const FigureFamily& find_family(const std::string& name);

/// Ensembles keyed by (family, alpha, seed), so figures drawn from the same
/// chains are simulated once.
class EnsembleCache {
 public:
  const ChainEnsemble& get(const FigureFamily& fam, std::size_t alpha_index,
                           std::uint64_t seed, int threads);

 private:
  std::map<std::tuple<std::string, std::size_t, std::uint64_t>, ChainEnsemble> store_;
};

struct FigureResult {
  FigureSpec spec;
  std::vector<double> alphas;
  std::vector<DensityEstimate> curves;
  std::vector<double> stds;
  std::optional<TrendReport> trend;
  std::optional<DensityEstimate> fit_density;
  std::vector<FitReport> fits;
};

FigureResult compute_figure(const std::string& name, std::uint64_t seed,
                            int threads, EnsembleCache& cache);

/// Writes density_<alpha>.csv per curve plus trend.csv or logfit.csv;
/// returns the file names relative to dir.
std::vector<std::string> write_figure(const FigureResult& fig, const std::string& dir);

}  // namespace salab::cli
