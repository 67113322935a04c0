#pragma once

#include "salab/drift.hpp"
#include "salab/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace salab {

enum class LimitClass { vanishes, nontrivial, blows_up, oscillates };

std::string to_string(LimitClass c);

/// alpha^p * F(y * alpha^p + x*) / alpha.
Vec scaled_drift(const DriftOperator& op, double p, double alpha, const Vec& y);

inline constexpr double kSlopeThreshold = 0.05;
inline constexpr double kFtildeAlpha = 1e-12;
inline constexpr double kBisectionTolerance = 1e-3;

/// 10^(-2 - j/2), j = 0..8.
std::vector<double> default_alpha_sequence();
/// {1/8, 1/6, 1/4, 1/3, 1/2, 2/3, 3/4}.
std::vector<double> default_exponent_grid();
/// Magnitudes {0.25, 0.5, 1, 2} with both signs; for d > 1 along every axis
/// and along the normalized diagonal.
std::vector<Vec> default_probes(int dim);

struct ProbeEvidence {
  Vec probe;
  std::vector<double> magnitudes;  // one per alpha
  double slope = 0.0;              // d log m / d log alpha
  LimitClass classification = LimitClass::vanishes;
};

struct LimitEvidence {
  double exponent = 0.0;
  std::vector<double> alphas;
  std::vector<ProbeEvidence> probes;
  LimitClass classification = LimitClass::vanishes;
};

/// Per probe: slope of log ||scaled_drift|| against log alpha; |slope| < 0.05
/// with a stable tail is nontrivial, >= 0.05 vanishes, <= -0.05 blows up, a
/// sign change in any coordinate oscillates. Overall nontrivial iff some
/// probe is nontrivial and none blows up.
LimitEvidence classify_limit(const DriftOperator& op, double p,
                             const std::vector<Vec>& probes,
                             const std::vector<double>& alphas);

struct FtildeSample {
  Vec y;
  Vec value;
};

struct ScalingReport {
  std::vector<double> exponent_grid;
  std::vector<LimitEvidence> evidence;  // grid points, then bisection points
  std::optional<double> p_star;
  std::vector<FtildeSample> ftilde;
  std::string note;

  std::optional<LimitClass> classification_at(double p) const;
};

/// Classifies every grid exponent. p* is the unique nontrivial exponent, or
/// the vanishes/blows_up boundary refined by bisection to 1e-3. Throws
/// NumericalError("no power-law scaling on grid") when neither exists.
ScalingReport find_scaling_exponent(
    const DriftOperator& op,
    const std::vector<double>& grid = default_exponent_grid(),
    const std::vector<Vec>& probes = {},
    const std::vector<double>& alphas = default_alpha_sequence());

/// Central-difference Jacobian of the limit drift y -> F~(y) at y = 0.
Mat ftilde_jacobian(const DriftOperator& op, double p, double h = 1e-5);

void write_scaling_report_csv(const ScalingReport& rep, const std::string& path);
void write_ftilde_csv(const ScalingReport& rep, const std::string& path);

}  // namespace salab
