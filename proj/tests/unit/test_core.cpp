#include "salab/config.hpp"
#include "salab/csv.hpp"
#include "salab/rng.hpp"
#include "salab/types.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace salab;

namespace {

bool has_error(const ValidationResult& r, const std::string& needle) {
  for (const auto& e : r.errors) {
    if (e.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Rng, SameSeedAndStreamRepeat) {
  RngState a = seed_rng(7, 0);
  RngState b = seed_rng(7, 0);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(Rng, StreamsDiffer) {
  RngState a = seed_rng(7, 0);
  RngState b = seed_rng(7, 1);
  int same = 0;
  for (int i = 0; i < 1000; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, StreamsAreUncorrelated) {
  RngState a = seed_rng(7, 0);
  RngState b = seed_rng(7, 1);
  const int n = 100000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.normal();
    const double y = b.normal();
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double r = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  EXPECT_LT(std::abs(r), 0.02);
}

TEST(Rng, VariateRanges) {
  RngState r = seed_rng(1, 2);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double s = r.rademacher();
    ASSERT_TRUE(s == 1.0 || s == -1.0);
  }
}

TEST(StepSize, RejectsNonPositive) {
  EXPECT_THROW(StepSize(-0.1), ConfigError);
  EXPECT_THROW(StepSize(0.0), ConfigError);
  EXPECT_DOUBLE_EQ(StepSize(0.25).value(), 0.25);
}

TEST(ScalingFn, ConditionOneLimitsAlongAlphaList) {
  const std::vector<double> alphas{1e-1, 1e-2, 1e-3, 1e-4};
  for (double p : {0.125, 0.25, 0.5, 0.75}) {
    const ScalingFn g{p, 1.0};
    for (std::size_t i = 1; i < alphas.size(); ++i) {
      EXPECT_LT(g(alphas[i]), g(alphas[i - 1]));
      EXPECT_LT(alphas[i] / g(alphas[i]), alphas[i - 1] / g(alphas[i - 1]));
    }
  }
  EXPECT_DOUBLE_EQ(ScalingFn{}.effective_step(0.01), 0.01);
}

TEST(Config, ParsesKeyValueText) {
  const auto cfg = parse_config(
      "# comment\n"
      "drift = linear   # trailing\n"
      "drift.a = [[-1, 1], [0, -2]]\n"
      "noise.shape = uniform\n"
      "alphas = 0.1, 0.01\n"
      "n_chains = 8\n"
      "seed = 42\n");
  EXPECT_EQ(cfg.drift, "linear");
  EXPECT_EQ(cfg.drift_params.at("a"), "[[-1, 1], [0, -2]]");
  EXPECT_EQ(cfg.noise_shape, "uniform");
  ASSERT_EQ(cfg.alphas.size(), 2u);
  EXPECT_EQ(cfg.n_chains, 8);
  EXPECT_EQ(cfg.seed, 42u);
}

TEST(Config, RejectsUnknownAndDuplicateKeys) {
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
  EXPECT_THROW(parse_config("n_chains = lots\n"), ConfigError);
}

TEST(Config, TextRoundTrip) {
  auto cfg = parse_config("drift = grad_quadratic\ndrift.hessian = [[2, 0], [0, 1]]\n"
                          "alphas = 0.05, 0.005\nscaling = auto\nalpha_max = 0.2\n");
  const auto again = parse_config(to_text(cfg));
  EXPECT_EQ(to_text(again), to_text(cfg));
  EXPECT_EQ(again.drift_params, cfg.drift_params);
  EXPECT_EQ(again.alphas, cfg.alphas);
  EXPECT_EQ(again.alpha_max, cfg.alpha_max);
}

TEST(Config, MatrixLiterals) {
  EXPECT_EQ(parse_matrix_literal("2"), Mat::Constant(1, 1, 2.0));
  const Mat v = parse_matrix_literal("[1, 2]");
  EXPECT_EQ(v.rows(), 2);
  EXPECT_EQ(v.cols(), 1);
  const Mat m = parse_matrix_literal("[[1, 2], [3, 4]]");
  EXPECT_EQ(m(1, 0), 3.0);
  EXPECT_EQ(parse_matrix_literal(format_matrix_literal(m)), m);
  EXPECT_THROW(parse_matrix_literal("[[1, 2], [3]]"), ConfigError);
}

TEST(Validate, QuadraticConfigIsValid) {
  ExperimentConfig cfg;
  const auto r = validate_config(cfg);
  ASSERT_TRUE(r.ok()) << (r.errors.empty() ? "" : r.errors.front());
  EXPECT_EQ(r.config->drift.kind(), DriftKind::grad_quadratic);
  EXPECT_DOUBLE_EQ(r.config->scaling->exponent, 0.5);
}

TEST(Validate, NegativeAlpha) {
  ExperimentConfig cfg;
  cfg.alphas = {-0.1};
  const auto r = validate_config(cfg);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_error(r, "alpha must be positive"));
}

TEST(Validate, IndefiniteSigma) {
  ExperimentConfig cfg;
  cfg.drift_params["hessian"] = "[[1, 0], [0, 1]]";
  cfg.noise_sigma = "[[1, 2], [2, 1]]";
  const auto r = validate_config(cfg);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_error(r, "Sigma not positive definite"));
}

TEST(Validate, UnknownDrift) {
  ExperimentConfig cfg;
  cfg.drift = "nope";
  EXPECT_TRUE(has_error(validate_config(cfg), "unknown drift id"));
}

TEST(Validate, AlphaAboveThreshold) {
  ExperimentConfig cfg;
  cfg.alphas = {0.5};
  EXPECT_TRUE(has_error(validate_config(cfg), "above stability threshold"));
  cfg.alpha_max = 0.6;
  EXPECT_TRUE(validate_config(cfg).ok());
}

TEST(Validate, ContractiveThresholdFromJacobian) {
  ExperimentConfig cfg;
  cfg.drift = "contractive_tanh";
  cfg.alphas = {0.002};
  EXPECT_TRUE(validate_config(cfg).ok());
  cfg.alphas = {0.01};
  EXPECT_TRUE(has_error(validate_config(cfg), "above stability threshold"));
}

TEST(Validate, StructuralChecks) {
  ExperimentConfig cfg;
  cfg.alphas = {0.01, 0.05};
  EXPECT_TRUE(has_error(validate_config(cfg), "strictly decreasing"));
  cfg = {};
  cfg.scaling = "1";
  EXPECT_TRUE(has_error(validate_config(cfg), "scaling exponent"));
  cfg = {};
  cfg.n_chains = 0;
  EXPECT_FALSE(validate_config(cfg).ok());
  cfg = {};
  cfg.burn_in = "-3";
  EXPECT_FALSE(validate_config(cfg).ok());
  cfg = {};
  cfg.scaling = "auto";
  cfg.burn_in = "100";
  cfg.thin = "7";
  const auto r = validate_config(cfg);
  ASSERT_TRUE(r.ok());
  EXPECT_FALSE(r.config->scaling.has_value());
  EXPECT_EQ(*r.config->burn_in, 100);
  EXPECT_EQ(*r.config->thin, 7);
}

TEST(Validate, CollectsEveryError) {
  ExperimentConfig cfg;
  cfg.drift = "nope";
  cfg.alphas = {-1.0};
  cfg.n_chains = 0;
  EXPECT_GE(validate_config(cfg).errors.size(), 3u);
}

TEST(Csv, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.50251256281407031}) {
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v) << s;
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(alpha_tag(1e-4), "0.0001");
  EXPECT_EQ(alpha_tag(0.01), "0.01");
}

TEST(Csv, WritesHeaderAndRows) {
  const auto path = (std::filesystem::temp_directory_path() / "salab_csv_test.csv").string();
  {
    CsvWriter w(path, {"a", "b"});
    w.cell(1L).cell(0.25);
    w.end_row();
  }
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(ss.str(), "a,b\n1,0.25\n");
  std::filesystem::remove(path);
  EXPECT_THROW(CsvWriter("/nonexistent-dir/x.csv", {"a"}), ConfigError);
}
