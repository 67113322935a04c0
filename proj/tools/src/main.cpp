#include "salab/cli/commands.hpp"
#include "salab/cli/figures.hpp"
#include "salab/types.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void report(const salab::cli::RunManifest& m, bool dry_run) {
  if (dry_run) {
    std::cout << m.command << ": configuration valid (dry run, nothing written)\n";
    return;
  }
  std::cout << m.command << ": wrote " << m.files.size() << " file(s) to " << m.out_dir << '\n';
  for (const auto& n : m.notes) std::cout << "  note: " << n << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using namespace salab::cli;
  CLI::App app{"Constant-stepsize stochastic approximation laboratory"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  RunOptions opt;
  std::uint64_t seed = 0;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "Override the RNG seed");
  auto* out_opt = app.add_option("--out", out, "Output directory");
  app.add_option("--config", opt.config_path, "Experiment config file");
  app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", opt.dry_run, "Validate inputs without writing anything");

  auto* simulate = app.add_subcommand("simulate", "Run SA ensembles for every alpha");
  auto* predict = app.add_subcommand("predict", "Solve the Lyapunov equation for the drift");
  auto* scaling = app.add_subcommand("find-scaling", "Search for the scaling exponent");
  auto* test = app.add_subcommand("test", "Simulate and test against the Gaussian prediction");
  auto* em = app.add_subcommand("em-compare", "Compare SA with Euler-Maruyama at dt = alpha");
  auto* figure = app.add_subcommand("figure", "Reproduce the data behind a figure");
  std::string figure_name;
  figure->add_option("name", figure_name, "fig1 fig2 fig3 fig4 fig5 fig10 fig11 fig12")
      ->required();
  auto* pipeline = app.add_subcommand("pipeline", "find-scaling, simulate, predict and test");

  // Global options may also follow the subcommand.
  for (auto* sub : {simulate, predict, scaling, test, em, figure, pipeline}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) opt.seed = seed;
  if (*out_opt) opt.out_dir = out;

  try {
    RunManifest m;
    if (*simulate) m = cmd_simulate(opt);
    else if (*predict) m = cmd_predict(opt);
    else if (*scaling) m = cmd_find_scaling(opt);
    else if (*test) m = cmd_test(opt);
    else if (*em) m = cmd_em_compare(opt);
    else if (*figure) m = cmd_figure(figure_name, opt);
    else m = cmd_pipeline(opt);
    report(m, opt.dry_run);
    return 0;
  } catch (const salab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const salab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
