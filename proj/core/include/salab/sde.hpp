#pragma once

#include "salab/drift.hpp"
#include "salab/rng.hpp"
#include "salab/simulate.hpp"
#include "salab/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace salab {

/// x + dt * F(x) + sqrt(dt) * z with z standard normal. Throws
/// NumericalError if the result is not finite.
Vec em_step(const DriftOperator& op, double delta_t, const Vec& x, RngState& rng);

/// The same update with a given z.
Vec em_update(const DriftOperator& op, double delta_t, const Vec& x, const Vec& z);

class EmStepper {
 public:
  EmStepper(const DriftOperator& op, double delta_t);

  bool operator()(std::span<double> x, RngState& rng);

 private:
  const DriftOperator* op_;
  double dt_;
  double sqrt_dt_;
  std::vector<double> f_;
};

struct EmConfig {
  double delta_t = 0.01;
  int n_chains = 64;
  std::optional<long> burn_in;  // default ceil(10 / dt)
  int samples_per_chain = 4096;
  std::optional<long> thin;     // default ceil(1 / dt)
  std::uint64_t seed = 0;
  std::uint64_t stream_base = 0;
  int threads = 1;
};

/// Ensemble of EM chains started at the root; samples are X - x*.
ChainEnsemble run_em_ensemble(const DriftOperator& op, const EmConfig& cfg);

/// Stationary variance of EM for F(x) = -theta x: dt / (1 - (1 - theta dt)^2).
double ou_em_stationary_variance(double theta, double delta_t);

/// One-step recursion y <- phi y + gain * noise of a linear drift.
struct Ar1Coefficients {
  Mat phi;
  double noise_gain = 0.0;
};

/// SA in the scaled variable Y = (X - x*) / g(alpha), probed with unit
/// vectors and zero noise.
Ar1Coefficients sa_scaled_ar1(const DriftOperator& op, double alpha, const ScalingFn& g);
/// EM in the centered variable X - x*.
Ar1Coefficients em_ar1(const DriftOperator& op, double delta_t);

struct EmCompareConfig {
  int n_chains = 64;
  int samples_per_chain = 4096;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<ScalingFn> scaling;  // default: find_scaling_exponent
};

struct EmCompareReport {
  double alpha = 0.0;
  ScalingFn scaling;
  Mat sa_cov;
  Mat em_cov;
  Mat sa_cov_se;
  Mat em_cov_se;
  double rel_err = 0.0;        // ||sa - em||_F / ||em||_F
  double max_z = 0.0;          // max entrywise |sa - em| / sqrt(se_sa^2 + se_em^2)
};

/// Stationary covariance of the scaled SA iterate (gaussian noise, Sigma = I)
/// against EM with delta_t = alpha on the same drift. Throws
/// NumericalError("no stationary law") when F vanishes identically near the
/// root or no scaling exists.
EmCompareReport em_vs_sa_compare(const DriftOperator& op, double alpha,
                                 const EmCompareConfig& cfg);

/// One block of rows per report, keyed by alpha.
void write_em_compare_csv(const std::vector<EmCompareReport>& reps,
                          const std::string& path);

}  // namespace salab
