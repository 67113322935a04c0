#include "salab/cli/commands.hpp"
#include "salab/cli/figures.hpp"
#include "salab/types.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace salab;
using namespace salab::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("salab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const std::string& name, const std::string& text) {
    const auto p = (dir_ / name).string();
    std::ofstream(p) << text;
    return p;
  }

  RunOptions options(const std::string& cfg, const std::string& out) {
    RunOptions o;
    o.config_path = cfg;
    o.out_dir = (dir_ / out).string();
    return o;
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_exe(const std::string& args) {
  const std::string cmd = std::string(SALAB_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kQuadratic =
    "drift = grad_quadratic\n"
    "alphas = 0.1, 0.01\n"
    "n_chains = 4\n"
    "samples_per_chain = 256\n"
    "seed = 11\n";

}  // namespace

TEST_F(CliTest, SimulateWritesSamplesAndManifest) {
  const auto m = cmd_simulate(options(write_config("q.cfg", kQuadratic), "sim"));
  for (const char* f : {"samples_0.1.csv", "samples_0.01.csv", "moments_0.1.csv",
                        "moments_0.01.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "sim" / f)) << f;
  }
  EXPECT_EQ(m.seed, 11u);
  const std::string manifest = slurp(dir_ / "sim" / "manifest.json");
  EXPECT_NE(manifest.find("\"command\""), std::string::npos);
  EXPECT_NE(manifest.find("grad_quadratic"), std::string::npos);
}

TEST_F(CliTest, SameConfigGivesIdenticalCsv) {
  const auto cfg = write_config("q.cfg", kQuadratic);
  cmd_simulate(options(cfg, "a"));
  cmd_simulate(options(cfg, "b"));
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path();
  }
  auto o = options(cfg, "c");
  o.seed = 12;
  cmd_simulate(o);
  EXPECT_NE(slurp(dir_ / "a" / "samples_0.1.csv"), slurp(dir_ / "c" / "samples_0.1.csv"));
}

TEST_F(CliTest, DryRunWritesNothing) {
  auto o = options(write_config("q.cfg", kQuadratic), "dry");
  o.dry_run = true;
  cmd_simulate(o);
  EXPECT_FALSE(fs::exists(dir_ / "dry"));
}

TEST_F(CliTest, BadConfigThrowsConfigError) {
  const auto cfg = write_config("bad.cfg", "drift = nope\nalphas = -1\n");
  EXPECT_THROW(cmd_simulate(options(cfg, "x")), ConfigError);
  EXPECT_THROW(cmd_figure("fig99", options(cfg, "x")), ConfigError);
}

TEST_F(CliTest, ExitCodes) {
  const auto good = write_config("q.cfg", kQuadratic);
  const auto bad = write_config("bad.cfg", "drift = nope\n");
  const auto rot = write_config("rot.cfg", "drift = linear\ndrift.a = [[0, 1], [-1, 0]]\n");
  const std::string out = "--out " + (dir_ / "exe").string();
  EXPECT_EQ(run_exe("--config " + good + " " + out + " predict"), 0);
  EXPECT_EQ(run_exe("--config " + bad + " " + out + " simulate"), 2);
  EXPECT_EQ(run_exe("--config " + rot + " " + out + " predict"), 3);
  EXPECT_EQ(run_exe("--bogus-flag"), 2);
  EXPECT_EQ(run_exe(out + " figure fig99"), 2);
}

TEST_F(CliTest, PredictWritesLyapunovSolution) {
  cmd_predict(options(write_config("q.cfg", kQuadratic), "pred"));
  const std::string csv = slurp(dir_ / "pred" / "prediction.csv");
  EXPECT_NE(csv.find("0.5"), std::string::npos);
}

TEST_F(CliTest, TestCommandWritesReports) {
  const auto cfg = write_config("t.cfg",
                                "drift = grad_quadratic\nalphas = 0.05\nn_chains = 8\n"
                                "samples_per_chain = 1024\nseed = 2\n");
  cmd_test(options(cfg, "t"));
  for (const char* f : {"gof.csv", "cf_residual.csv", "logfit.csv", "density_0.05.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "t" / f)) << f;
  }
  const std::string gof = slurp(dir_ / "t" / "gof.csv");
  EXPECT_EQ(gof.substr(0, gof.find('\n')),
            "alpha,ks_distance,ks_threshold,n,n_eff,max_abs_mean_z,cov_rel_err,cov_rel_bound,pass");
}

TEST_F(CliTest, PipelineFindsExponent) {
  struct Case {
    const char* drift;
    const char* p;
  };
  for (const Case c : {Case{"grad_quadratic", "0.5"}, Case{"quartic", "0.25"},
                       Case{"exp_square", "0.5"}}) {
    const auto cfg = write_config(std::string(c.drift) + ".cfg",
                                  std::string("drift = ") + c.drift +
                                      "\nscaling = auto\nalphas = 0.01\nn_chains = 4\n"
                                      "samples_per_chain = 1024\nseed = 3\n");
    cmd_pipeline(options(cfg, c.drift));
    const std::string rep = slurp(dir_ / c.drift / "scaling_report.csv");
    EXPECT_NE(rep.find(std::string("p*,,,,") + c.p), std::string::npos) << c.drift;
  }
}

TEST(Figures, Catalog) {
  for (const char* name : {"fig1", "fig2", "fig3", "fig4", "fig5", "fig10", "fig11", "fig12"}) {
    EXPECT_EQ(find_figure(name).name, name);
  }
  EXPECT_THROW(find_figure("fig6"), ConfigError);
}
