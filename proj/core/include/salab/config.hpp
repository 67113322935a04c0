#pragma once

#include "salab/drift.hpp"
#include "salab/noise.hpp"
#include "salab/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace salab {

/// Experiment description as written in a config file. Keys in the file
/// mirror the field names (`n_chains = 64`); drift parameters live under
/// `drift.<name>` and noise settings under `noise.shape` / `noise.sigma`.
/// Matrix-valued entries use row-major literals: `2`, `[1, 0]`,
/// `[[1, 0], [0, 1]]`. A scalar noise.sigma means sigma * I.
struct ExperimentConfig {
  std::string drift = "grad_quadratic";
  std::map<std::string, std::string> drift_params;
  std::string noise_shape = "gaussian";
  std::string noise_sigma;  // empty: identity
  std::vector<double> alphas{0.01};
  std::string scaling = "0.5";  // exponent p of g = alpha^p, or "auto"
  long n_chains = 64;
  std::string burn_in = "auto";  // steps, or auto = ceil(10 / dt_eff)
  long samples_per_chain = 4096;
  std::string thin = "auto";  // steps, or auto = ceil(1 / dt_eff)
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::optional<double> alpha_max;
};

/// Parses `key = value` lines. Throws ConfigError listing every malformed
/// line or unknown key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);

/// Parses `2`, `[1, 2]` or `[[1, 2], [3, 4]]` into a matrix. A vector
/// literal becomes a column.
Mat parse_matrix_literal(const std::string& text);
std::string format_matrix_literal(const Mat& m);

struct ValidatedConfig {
  ExperimentConfig source;
  DriftOperator drift;
  NoiseModel noise;
  std::vector<double> alphas;
  std::optional<ScalingFn> scaling;  // nullopt when "auto"
  double alpha_max = 0.1;
  int n_chains = 64;
  std::optional<long> burn_in;
  int samples_per_chain = 4096;
  std::optional<long> thin;
  std::uint64_t seed = 0;
};

struct ValidationResult {
  std::optional<ValidatedConfig> config;
  std::vector<std::string> errors;

  bool ok() const { return config.has_value(); }
};

/// Builds the drift from the catalog and checks every field invariant.
/// Never throws for bad input; problems are returned as messages.
ValidationResult validate_config(const ExperimentConfig& cfg);

/// Catalog lookup by config identifier: grad_quadratic, linear,
/// contractive_tanh, quartic, exp_square, quartic_sine, custom.
DriftOperator drift_from_config(const std::string& id,
                                const std::map<std::string, std::string>& params);

}  // namespace salab
