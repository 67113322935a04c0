#include "salab/cli/commands.hpp"

#include "salab/cli/figures.hpp"
#include "salab/config.hpp"
#include "salab/csv.hpp"
#include "salab/lyapunov.hpp"
#include "salab/scaling.hpp"
#include "salab/sde.hpp"
#include "salab/simulate.hpp"
#include "salab/stats.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#ifndef SALAB_VERSION
#define SALAB_VERSION "0.0.0"
#endif

namespace salab::cli {

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Loaded {
  ValidatedConfig cfg;
  RunManifest manifest;
};

Loaded load(const std::string& command, const RunOptions& opt) {
  if (opt.config_path.empty()) throw ConfigError("--config is required");
  ExperimentConfig raw = load_config(opt.config_path);
  if (opt.seed) raw.seed = *opt.seed;
  if (opt.out_dir) raw.output_dir = *opt.out_dir;
  ValidationResult v = validate_config(raw);
  if (!v.ok()) {
    std::string msg;
    for (const auto& e : v.errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
  RunManifest m;
  m.command = command;
  m.version = tool_version();
  m.config_text = to_text(raw);
  m.seed = raw.seed;
  m.out_dir = raw.output_dir;
  if (!opt.dry_run) std::filesystem::create_directories(m.out_dir);
  return {std::move(*v.config), std::move(m)};
}

std::string path_in(const RunManifest& m, const std::string& name) {
  return m.out_dir + "/" + name;
}

std::uint64_t stream_base_for(std::size_t alpha_index) {
  return static_cast<std::uint64_t>(alpha_index) << 32;
}

ScalingFn resolve_scaling(const ValidatedConfig& cfg, RunManifest& m) {
  if (cfg.scaling) return *cfg.scaling;
  const ScalingReport rep = find_scaling_exponent(cfg.drift);
  m.notes.push_back("scaling exponent found: " + format_double(*rep.p_star));
  return ScalingFn{*rep.p_star, 1.0};
}

bool is_half(double p) { return std::abs(p - 0.5) < 1e-9; }

std::vector<double> first_column(const Mat& s) {
  return std::vector<double>(s.data(), s.data() + s.rows());
}

void write_prediction(const LyapunovSolution& sol, const std::string& path) {
  CsvWriter w(path, {"stat", "i", "j", "value"});
  const auto d = sol.sigma_y.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      w.cell(std::string("sigma_y"));
      w.cell(static_cast<long>(i + 1));
      w.cell(static_cast<long>(j + 1));
      w.cell(sol.sigma_y(i, j));
      w.end_row();
    }
  }
  w.cell(std::string("residual_norm")).cell(std::string()).cell(std::string());
  w.cell(sol.residual_norm);
  w.end_row();
  w.cell(std::string("min_eigenvalue")).cell(std::string()).cell(std::string());
  w.cell(sol.min_eigenvalue);
  w.end_row();
  w.cell(std::string("method")).cell(std::string()).cell(std::string());
  w.cell(to_string(sol.method));
  w.end_row();
}

// Per-alpha statistical outputs shared by `test` and `pipeline`.
class TestWriters {
 public:
  TestWriters(RunManifest& m, int dim) : m_(m), dim_(dim) {}

  void density_and_fits(double alpha, const Mat& samples) {
    if (dim_ != 1 || samples.rows() < 1000) return;
    const auto v = first_column(samples);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    const double half = std::ceil(12.0 * sd) / 2.0;
    const DensityEstimate est = estimate_density(v, linspace(-half, half, 801));
    const std::string name = "density_" + alpha_tag(alpha) + ".csv";
    CsvWriter w(path_in(m_, name), {"y", "p_hat"});
    for (std::size_t k = 0; k < est.grid.size(); ++k) {
      w.cell(est.grid[k]);
      w.cell(est.density[k]);
      w.end_row();
    }
    m_.files.push_back(name);
    for (double q : {2.0, 4.0}) {
      try {
        fits_.emplace_back(alpha, log_density_fit(est, q));
      } catch (const NumericalError& e) {
        m_.notes.push_back("log-density fit skipped at alpha " + format_double(alpha) +
                           ": " + e.what());
      }
    }
  }

  void gaussian_checks(double alpha, const Mat& samples, const Mat& m_lyap,
                       const Mat& sigma, const Mat& sigma_y) {
    gofs_.emplace_back(alpha, gaussian_gof(samples, sigma_y));
    cfs_.emplace_back(alpha, cf_residual(samples, m_lyap, sigma, default_t_grid(dim_)));
  }

  void flush() {
    if (!gofs_.empty()) {
      CsvWriter w(path_in(m_, "gof.csv"),
                  {"alpha", "ks_distance", "ks_threshold", "n", "n_eff", "max_abs_mean_z",
                   "cov_rel_err", "cov_rel_bound", "pass"});
      for (const auto& [a, g] : gofs_) {
        w.cell(a).cell(g.ks_distance).cell(g.ks_threshold).cell(g.n).cell(g.n_eff);
        w.cell(g.mean_z.cwiseAbs().maxCoeff()).cell(g.cov_rel_err).cell(g.cov_rel_bound);
        w.cell(static_cast<long>(g.pass));
        w.end_row();
      }
      m_.files.push_back("gof.csv");

      std::vector<std::string> header{"alpha"};
      for (int i = 1; i <= dim_; ++i) header.push_back("t_" + std::to_string(i));
      for (const char* c : {"re", "im", "se"}) header.emplace_back(c);
      CsvWriter c(path_in(m_, "cf_residual.csv"), header);
      for (const auto& [a, r] : cfs_) {
        for (std::size_t k = 0; k < r.t_grid.size(); ++k) {
          c.cell(a);
          for (Eigen::Index i = 0; i < r.t_grid[k].size(); ++i) c.cell(r.t_grid[k](i));
          c.cell(r.residual_real[k]).cell(r.residual_imag[k]).cell(r.monte_carlo_se[k]);
          c.end_row();
        }
      }
      m_.files.push_back("cf_residual.csv");
    }
    if (!fits_.empty()) {
      CsvWriter w(path_in(m_, "logfit.csv"),
                  {"alpha", "q", "slope", "intercept", "r_squared", "points"});
      for (const auto& [a, f] : fits_) {
        w.cell(a).cell(f.q).cell(f.slope).cell(f.intercept).cell(f.r_squared);
        w.cell(static_cast<long>(f.points));
        w.end_row();
      }
      m_.files.push_back("logfit.csv");
    }
  }

 private:
  RunManifest& m_;
  int dim_;
  std::vector<std::pair<double, GofReport>> gofs_;
  std::vector<std::pair<double, CfResidualReport>> cfs_;
  std::vector<std::pair<double, FitReport>> fits_;
};

RunManifest finish(RunManifest m, const Stopwatch& total) {
  m.durations.emplace_back("total", total.seconds());
  write_manifest(m);
  return m;
}

void simulate_alphas(const ValidatedConfig& cfg, const ScalingFn& g, const RunOptions& opt,
                     RunManifest& m, std::vector<ChainEnsemble>* keep) {
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
    const double a = cfg.alphas[i];
    Stopwatch sw;
    ChainEnsemble ens = run_ensemble(cfg, StepSize(a), g, opt.threads, stream_base_for(i));
    const std::string tag = alpha_tag(a);
    write_samples_csv(ens, path_in(m, "samples_" + tag + ".csv"));
    write_moments_csv(moment_summary(ens), path_in(m, "moments_" + tag + ".csv"));
    m.files.push_back("samples_" + tag + ".csv");
    m.files.push_back("moments_" + tag + ".csv");
    if (ens.divergences > 0) {
      m.notes.push_back(std::to_string(ens.divergences) + " chain(s) diverged at alpha " +
                        format_double(a));
    }
    m.durations.emplace_back("simulate alpha=" + tag, sw.seconds());
    if (keep) keep->push_back(std::move(ens));
  }
}

}  // namespace

std::string tool_version() { return SALAB_VERSION; }

void write_manifest(RunManifest& m) {
  m.files.push_back("manifest.json");
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["config"] = m.config_text;
  j["files"] = m.files;
  nlohmann::ordered_json d = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.durations) d[k] = v;
  j["durations_s"] = d;
  j["notes"] = m.notes;
  std::filesystem::create_directories(m.out_dir);
  std::ofstream f(m.out_dir + "/manifest.json", std::ios::binary);
  if (!f) throw ConfigError("cannot write " + m.out_dir + "/manifest.json");
  f << j.dump(2) << '\n';
}

RunManifest cmd_simulate(const RunOptions& opt) {
  Stopwatch total;
  auto [cfg, m] = load("simulate", opt);
  if (opt.dry_run) return m;
  const ScalingFn g = resolve_scaling(cfg, m);
  simulate_alphas(cfg, g, opt, m, nullptr);
  return finish(std::move(m), total);
}

RunManifest cmd_predict(const RunOptions& opt) {
  Stopwatch total;
  auto [cfg, m] = load("predict", opt);
  if (opt.dry_run) return m;
  const LyapunovSolution sol = predict_stationary(cfg.drift, cfg.noise);
  write_prediction(sol, path_in(m, "prediction.csv"));
  m.files.push_back("prediction.csv");
  return finish(std::move(m), total);
}

RunManifest cmd_find_scaling(const RunOptions& opt) {
  Stopwatch total;
  auto [cfg, m] = load("find-scaling", opt);
  if (opt.dry_run) return m;
  const ScalingReport rep = find_scaling_exponent(cfg.drift);
  write_scaling_report_csv(rep, path_in(m, "scaling_report.csv"));
  write_ftilde_csv(rep, path_in(m, "ftilde.csv"));
  m.files.push_back("scaling_report.csv");
  m.files.push_back("ftilde.csv");
  if (!rep.note.empty()) m.notes.push_back(rep.note);
  return finish(std::move(m), total);
}

RunManifest cmd_test(const RunOptions& opt) {
  Stopwatch total;
  auto [cfg, m] = load("test", opt);
  if (opt.dry_run) return m;
  const ScalingFn g = resolve_scaling(cfg, m);

  std::optional<LyapunovSolution> pred;
  Mat m_lyap;
  if (is_half(g.exponent)) {
    m_lyap = derivative_at_root(cfg.drift);
    if (check_hurwitz(m_lyap).hurwitz) {
      pred = solve_lyapunov(m_lyap, cfg.noise.sigma());
      write_prediction(*pred, path_in(m, "prediction.csv"));
      m.files.push_back("prediction.csv");
    }
  }
  if (!pred) m.notes.push_back("no Gaussian prediction available");

  TestWriters out(m, cfg.drift.dim());
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
    const double a = cfg.alphas[i];
    Stopwatch sw;
    const ChainEnsemble ens = run_ensemble(cfg, StepSize(a), g, opt.threads, stream_base_for(i));
    out.density_and_fits(a, ens.samples);
    if (pred) out.gaussian_checks(a, ens.samples, m_lyap, cfg.noise.sigma(), pred->sigma_y);
    m.durations.emplace_back("test alpha=" + alpha_tag(a), sw.seconds());
  }
  out.flush();
  return finish(std::move(m), total);
}

RunManifest cmd_em_compare(const RunOptions& opt) {
  Stopwatch total;
  auto [cfg, m] = load("em-compare", opt);
  if (opt.dry_run) return m;
  const auto d = cfg.drift.dim();
  if (cfg.noise.shape() != NoiseShape::gaussian ||
      !cfg.noise.sigma().isApprox(Mat::Identity(d, d), 0.0)) {
    throw ConfigError("em-compare requires gaussian noise with identity covariance");
  }
  EmCompareConfig ec;
  ec.n_chains = cfg.n_chains;
  ec.samples_per_chain = cfg.samples_per_chain;
  ec.seed = cfg.seed;
  ec.threads = opt.threads;
  ec.scaling = cfg.scaling;
  std::vector<EmCompareReport> reps;
  for (double a : cfg.alphas) {
    Stopwatch sw;
    reps.push_back(em_vs_sa_compare(cfg.drift, a, ec));
    m.durations.emplace_back("em-compare alpha=" + alpha_tag(a), sw.seconds());
  }
  write_em_compare_csv(reps, path_in(m, "em_compare.csv"));
  m.files.push_back("em_compare.csv");
  return finish(std::move(m), total);
}

RunManifest cmd_figure(const std::string& name, const RunOptions& opt) {
  Stopwatch total;
  const FigureSpec& spec = find_figure(name);
  RunManifest m;
  m.command = "figure " + name;
  m.version = tool_version();
  m.seed = opt.seed.value_or(0);
  m.out_dir = opt.out_dir.value_or("out/" + name);
  const FigureFamily& fam = find_family(spec.family);
  m.config_text = "figure = " + name + "\nfamily = " + fam.name + "\ndrift = " + fam.drift_id +
                  "\ndisplay_exponent = " + format_double(spec.display_exponent) +
                  "\nnatural_exponent = " + format_double(fam.natural_exponent) +
                  "\nn_chains = " + std::to_string(fam.n_chains) +
                  "\nsamples_per_chain = " + std::to_string(fam.samples_per_chain) +
                  "\nthin_time = " + format_double(fam.thin_time) +
                  "\nburn_in_time = " + format_double(fam.burn_in_time) + "\n";
  if (opt.dry_run) return m;
  EnsembleCache cache;
  const FigureResult fig = compute_figure(name, m.seed, opt.threads, cache);
  for (auto& f : write_figure(fig, m.out_dir)) m.files.push_back(std::move(f));
  m.notes.push_back(spec.caption);
  if (fig.trend) {
    m.notes.push_back(fig.trend->converging ? "densities converge as alpha decreases"
                                            : "densities do not converge as alpha decreases");
  }
  return finish(std::move(m), total);
}

RunManifest cmd_pipeline(const RunOptions& opt) {
  Stopwatch total;
  auto [cfg, m] = load("pipeline", opt);
  if (cfg.source.scaling != "auto") throw ConfigError("pipeline requires scaling = auto");
  if (opt.dry_run) return m;

  Stopwatch sw;
  const ScalingReport rep = find_scaling_exponent(cfg.drift);
  write_scaling_report_csv(rep, path_in(m, "scaling_report.csv"));
  write_ftilde_csv(rep, path_in(m, "ftilde.csv"));
  m.files.push_back("scaling_report.csv");
  m.files.push_back("ftilde.csv");
  m.durations.emplace_back("find-scaling", sw.seconds());
  const ScalingFn g{*rep.p_star, 1.0};
  m.notes.push_back("scaling exponent found: " + format_double(g.exponent));

  std::optional<LyapunovSolution> pred;
  Mat m_lyap;
  if (is_half(g.exponent)) {
    // In the Gaussian regime the limit drift is linear, so its Jacobian at 0
    // plays the role of the Lyapunov matrix.
    m_lyap = ftilde_jacobian(cfg.drift, g.exponent);
    if (check_hurwitz(m_lyap).hurwitz) {
      pred = solve_lyapunov(m_lyap, cfg.noise.sigma());
      write_prediction(*pred, path_in(m, "prediction.csv"));
      m.files.push_back("prediction.csv");
    }
  }
  if (!pred) m.notes.push_back("no Gaussian prediction available");

  std::vector<ChainEnsemble> ensembles;
  simulate_alphas(cfg, g, opt, m, &ensembles);
  TestWriters out(m, cfg.drift.dim());
  for (std::size_t i = 0; i < ensembles.size(); ++i) {
    const double a = cfg.alphas[i];
    out.density_and_fits(a, ensembles[i].samples);
    if (pred) out.gaussian_checks(a, ensembles[i].samples, m_lyap, cfg.noise.sigma(), pred->sigma_y);
  }
  out.flush();
  return finish(std::move(m), total);
}

}  // namespace salab::cli
