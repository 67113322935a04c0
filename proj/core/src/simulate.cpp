#include "salab/simulate.hpp"

#include "salab/config.hpp"
#include "salab/csv.hpp"
#include "salab/detail/chain_runner.hpp"
#include "salab/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace salab {

Vec step_chain(const DriftOperator& op, const NoiseModel& nm, StepSize alpha,
               const Vec& x, RngState& rng) {
  if (x.size() != op.dim() || !x.allFinite()) {
    throw std::invalid_argument("step_chain: state must be finite with the drift's dimension");
  }
  Vec out = x;
  SaStepper step(op, nm, alpha.value());
  if (!step(std::span<double>(out.data(), static_cast<std::size_t>(out.size())), rng)) {
    throw NumericalError("chain diverged");
  }
  return out;
}

Vec sa_update(const DriftOperator& op, double alpha, const Vec& x, const Vec& w) {
  return x + alpha * (eval_drift(op, x) + w);
}

SaStepper::SaStepper(const DriftOperator& op, const NoiseModel& nm, double alpha)
    : op_(&op),
      nm_(&nm),
      alpha_(alpha),
      f_(static_cast<std::size_t>(op.dim())),
      w_(static_cast<std::size_t>(op.dim())) {
  if (nm.dim() != op.dim()) {
    throw std::invalid_argument("noise and drift dimensions differ");
  }
}

bool SaStepper::operator()(std::span<double> x, RngState& rng) {
  op_->evaluate(x, f_);
  nm_->sample(rng, w_);
  bool ok = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] += alpha_ * (f_[i] + w_[i]);
    ok = ok && std::isfinite(x[i]);
  }
  return ok;
}

namespace {

// ceil that ignores last-bit rounding in alpha / g(alpha).
long ceil_steps(double x) { return static_cast<long>(std::ceil(x * (1.0 - 1e-12))); }

}  // namespace

long default_burn_in(double alpha, const ScalingFn& g) {
  return ceil_steps(10.0 / g.effective_step(alpha));
}

long default_thin(double alpha, const ScalingFn& g) {
  return std::max(1L, ceil_steps(1.0 / g.effective_step(alpha)));
}

ChainEnsemble run_ensemble(const DriftOperator& op, const NoiseModel& nm,
                           StepSize alpha, const ScalingFn& g,
                           const EnsembleParams& params) {
  if (params.n_chains < 1 || params.samples_per_chain < 1) {
    throw std::invalid_argument("run_ensemble: need at least one chain and one sample");
  }
  const double a = alpha.value();
  detail::ChainSchedule schedule;
  schedule.n_chains = params.n_chains;
  schedule.samples_per_chain = params.samples_per_chain;
  schedule.burn_in = params.burn_in.value_or(default_burn_in(a, g));
  schedule.thin = params.thin.value_or(default_thin(a, g));
  if (schedule.burn_in < 0 || schedule.thin < 1) {
    throw std::invalid_argument("run_ensemble: burn_in must be >= 0 and thin >= 1");
  }
  const Vec x0 = params.x0.value_or(op.root());
  if (x0.size() != op.dim() || !x0.allFinite()) {
    throw std::invalid_argument("run_ensemble: bad initial state");
  }

  auto records = detail::run_chains(
      x0, op.root(), 1.0 / g(a), schedule, params.seed, params.stream_base,
      params.threads, [&] { return SaStepper(op, nm, a); });

  ChainEnsemble ens;
  ens.alpha = a;
  ens.scaling = g;
  ens.root = op.root();
  ens.burn_in = schedule.burn_in;
  ens.thin = schedule.thin;
  ens.samples_per_chain = schedule.samples_per_chain;
  const auto d = static_cast<Eigen::Index>(op.dim());
  for (std::size_t c = 0; c < records.size(); ++c) {
    ens.final_states.push_back(
        Eigen::Map<const Vec>(records[c].final_state.data(), d));
    if (records[c].diverged) {
      ++ens.divergences;
    } else {
      ens.chain_ids.push_back(static_cast<int>(c));
    }
  }
  if (ens.divergences > kMaxDivergedFraction * params.n_chains) {
    throw NumericalError("unstable configuration");
  }
  const auto per = static_cast<Eigen::Index>(schedule.samples_per_chain);
  ens.samples.resize(static_cast<Eigen::Index>(ens.chain_ids.size()) * per, d);
  Eigen::Index row = 0;
  for (int c : ens.chain_ids) {
    const auto& s = records[static_cast<std::size_t>(c)].samples;
    ens.samples.middleRows(row, per) =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(s.data(), per, d);
    row += per;
  }
  return ens;
}

ChainEnsemble run_ensemble(const ValidatedConfig& cfg, StepSize alpha,
                           const ScalingFn& g, int threads,
                           std::uint64_t stream_base) {
  EnsembleParams p;
  p.n_chains = cfg.n_chains;
  p.burn_in = cfg.burn_in;
  p.samples_per_chain = cfg.samples_per_chain;
  p.thin = cfg.thin;
  p.seed = cfg.seed;
  p.stream_base = stream_base;
  p.threads = threads;
  return run_ensemble(cfg.drift, cfg.noise, alpha, g, p);
}

MomentSummary moment_summary(const Mat& samples) {
  const auto n = samples.rows();
  const auto d = samples.cols();
  if (n < 2) throw std::invalid_argument("moment_summary: need at least 2 samples");
  MomentSummary m;
  m.count = static_cast<long>(n);
  m.mean = samples.colwise().mean().transpose();
  const Mat centered = samples.rowwise() - m.mean.transpose();
  m.covariance = centered.transpose() * centered / static_cast<double>(n - 1);
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose()).eval();

  std::vector<double> col(static_cast<std::size_t>(n));
  m.mean_se.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) col[static_cast<std::size_t>(j)] = samples(j, i);
    m.mean_se(i) = batch_means(col).se;
  }
  m.covariance_se.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      for (Eigen::Index j = 0; j < n; ++j) {
        col[static_cast<std::size_t>(j)] = centered(j, a) * centered(j, b);
      }
      m.covariance_se(a, b) = m.covariance_se(b, a) = batch_means(col).se;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    col[static_cast<std::size_t>(j)] = samples.row(j).squaredNorm();
  }
  const BatchMeans tr = batch_means(col);
  m.second_moment_trace = tr.mean;
  m.second_moment_trace_se = tr.se;
  m.ess = effective_sample_size(samples);
  return m;
}

MomentSummary moment_summary(const ChainEnsemble& ens) {
  if (ens.samples.rows() == 0) throw std::invalid_argument("moment_summary: empty ensemble");
  return moment_summary(ens.samples);
}

void write_samples_csv(const ChainEnsemble& ens, const std::string& path) {
  std::vector<std::string> header{"chain", "step"};
  for (int i = 1; i <= ens.dim(); ++i) header.push_back("y_" + std::to_string(i));
  CsvWriter w(path, header);
  Eigen::Index row = 0;
  for (int c : ens.chain_ids) {
    for (int s = 0; s < ens.samples_per_chain; ++s, ++row) {
      w.cell(static_cast<long>(c));
      w.cell(ens.burn_in + static_cast<long>(s + 1) * ens.thin);
      for (Eigen::Index i = 0; i < ens.samples.cols(); ++i) w.cell(ens.samples(row, i));
      w.end_row();
    }
  }
}

void write_moments_csv(const MomentSummary& m, const std::string& path) {
  CsvWriter w(path, {"stat", "i", "j", "value", "se"});
  const auto d = m.mean.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    w.cell(std::string("mean"));
    w.cell(static_cast<long>(i + 1));
    w.cell(std::string());
    w.cell(m.mean(i));
    w.cell(m.mean_se(i));
    w.end_row();
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      w.cell(std::string("cov"));
      w.cell(static_cast<long>(i + 1));
      w.cell(static_cast<long>(j + 1));
      w.cell(m.covariance(i, j));
      w.cell(m.covariance_se(i, j));
      w.end_row();
    }
  }
  w.cell(std::string("second_moment_trace"));
  w.cell(std::string());
  w.cell(std::string());
  w.cell(m.second_moment_trace);
  w.cell(m.second_moment_trace_se);
  w.end_row();
  w.cell(std::string("count"));
  w.cell(std::string());
  w.cell(std::string());
  w.cell(static_cast<double>(m.count));
  w.cell(std::string());
  w.end_row();
}

}  // namespace salab
