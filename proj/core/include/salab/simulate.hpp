#pragma once

#include "salab/drift.hpp"
#include "salab/noise.hpp"
#include "salab/rng.hpp"
#include "salab/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace salab {

struct ValidatedConfig;

/// x + alpha * (F(x) + w) with w drawn from nm. Throws NumericalError if the
/// result is not finite.
Vec step_chain(const DriftOperator& op, const NoiseModel& nm, StepSize alpha,
               const Vec& x, RngState& rng);

/// The same update with a given noise value.
Vec sa_update(const DriftOperator& op, double alpha, const Vec& x, const Vec& w);

/// In-place single-step engine used by the ensemble runner.
class SaStepper {
 public:
  SaStepper(const DriftOperator& op, const NoiseModel& nm, double alpha);

  /// Returns false once x has a non-finite coordinate.
  bool operator()(std::span<double> x, RngState& rng);

 private:
  const DriftOperator* op_;
  const NoiseModel* nm_;
  double alpha_;
  std::vector<double> f_;
  std::vector<double> w_;
};

/// ceil(10 / dt) and ceil(1 / dt) for dt = g.effective_step(alpha); for
/// g = sqrt(alpha) these are ceil(10 / alpha) and ceil(1 / alpha).
long default_burn_in(double alpha, const ScalingFn& g);
long default_thin(double alpha, const ScalingFn& g);

struct EnsembleParams {
  int n_chains = 64;
  std::optional<long> burn_in;
  int samples_per_chain = 4096;
  std::optional<long> thin;
  std::uint64_t seed = 0;
  std::uint64_t stream_base = 0;
  int threads = 1;
  std::optional<Vec> x0;  // default: the root
};

inline constexpr double kMaxDivergedFraction = 0.01;

struct ChainEnsemble {
  double alpha = 0.0;
  ScalingFn scaling;
  Vec root;
  long burn_in = 0;
  long thin = 1;
  int samples_per_chain = 0;
  std::vector<int> chain_ids;        // retained chains, ascending
  Mat samples;                       // rows grouped by chain, in chain_ids order
  std::vector<Vec> final_states;     // indexed by chain id, including diverged
  int divergences = 0;

  long sample_count() const { return static_cast<long>(samples.rows()); }
  int dim() const { return static_cast<int>(samples.cols()); }
};

/// Runs n_chains independent chains from x0 and records
/// Y = (X - x*) / g(alpha) every `thin` steps after `burn_in`. Diverged
/// chains are dropped; more than 1% diverged throws
/// NumericalError("unstable configuration").
ChainEnsemble run_ensemble(const DriftOperator& op, const NoiseModel& nm,
                           StepSize alpha, const ScalingFn& g,
                           const EnsembleParams& params);

ChainEnsemble run_ensemble(const ValidatedConfig& cfg, StepSize alpha,
                           const ScalingFn& g, int threads = 1,
                           std::uint64_t stream_base = 0);

struct MomentSummary {
  Vec mean;
  Mat covariance;  // n - 1 divisor
  double second_moment_trace = 0.0;  // mean of ||Y||^2
  long count = 0;
  Vec mean_se;
  Mat covariance_se;
  double second_moment_trace_se = 0.0;
  double ess = 0.0;
};

/// Batch-means standard errors are computed over rows in stored order.
MomentSummary moment_summary(const Mat& samples);
MomentSummary moment_summary(const ChainEnsemble& ens);

void write_samples_csv(const ChainEnsemble& ens, const std::string& path);
void write_moments_csv(const MomentSummary& m, const std::string& path);

}  // namespace salab
