#include "salab/sde.hpp"

#include "salab/csv.hpp"
#include "salab/detail/chain_runner.hpp"
#include "salab/noise.hpp"
#include "salab/scaling.hpp"

#include <cmath>
#include <stdexcept>

namespace salab {

namespace {

// EM chains draw from streams far above the SA ones so the two sides of a
// comparison are independent.
constexpr std::uint64_t kEmStreamOffset = 1ULL << 48;

}  // namespace

Vec em_update(const DriftOperator& op, double delta_t, const Vec& x, const Vec& z) {
  return x + delta_t * eval_drift(op, x) + std::sqrt(delta_t) * z;
}

Vec em_step(const DriftOperator& op, double delta_t, const Vec& x, RngState& rng) {
  if (x.size() != op.dim() || !x.allFinite()) {
    throw std::invalid_argument("em_step: state must be finite with the drift's dimension");
  }
  Vec out = x;
  EmStepper step(op, delta_t);
  if (!step(std::span<double>(out.data(), static_cast<std::size_t>(out.size())), rng)) {
    throw NumericalError("chain diverged");
  }
  return out;
}

EmStepper::EmStepper(const DriftOperator& op, double delta_t)
    : op_(&op),
      dt_(delta_t),
      sqrt_dt_(std::sqrt(delta_t)),
      f_(static_cast<std::size_t>(op.dim())) {
  if (!(delta_t > 0.0)) throw std::invalid_argument("delta_t must be positive");
}

bool EmStepper::operator()(std::span<double> x, RngState& rng) {
  op_->evaluate(x, f_);
  bool ok = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] += dt_ * f_[i] + sqrt_dt_ * rng.normal();
    ok = ok && std::isfinite(x[i]);
  }
  return ok;
}

ChainEnsemble run_em_ensemble(const DriftOperator& op, const EmConfig& cfg) {
  if (!(cfg.delta_t > 0.0)) throw std::invalid_argument("delta_t must be positive");
  detail::ChainSchedule schedule;
  schedule.n_chains = cfg.n_chains;
  schedule.samples_per_chain = cfg.samples_per_chain;
  schedule.burn_in = cfg.burn_in.value_or(static_cast<long>(std::ceil(10.0 / cfg.delta_t)));
  schedule.thin =
      cfg.thin.value_or(std::max(1L, static_cast<long>(std::ceil(1.0 / cfg.delta_t))));
  const double dt = cfg.delta_t;
  auto records = detail::run_chains(op.root(), op.root(), 1.0, schedule, cfg.seed,
                                    cfg.stream_base, cfg.threads,
                                    [&] { return EmStepper(op, dt); });

  ChainEnsemble ens;
  ens.alpha = dt;
  ens.scaling = ScalingFn{0.0, 1.0};
  ens.root = op.root();
  ens.burn_in = schedule.burn_in;
  ens.thin = schedule.thin;
  ens.samples_per_chain = schedule.samples_per_chain;
  const auto d = static_cast<Eigen::Index>(op.dim());
  for (std::size_t c = 0; c < records.size(); ++c) {
    ens.final_states.push_back(Eigen::Map<const Vec>(records[c].final_state.data(), d));
    if (records[c].diverged) {
      ++ens.divergences;
    } else {
      ens.chain_ids.push_back(static_cast<int>(c));
    }
  }
  if (ens.divergences > kMaxDivergedFraction * cfg.n_chains) {
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

double ou_em_stationary_variance(double theta, double delta_t) {
  const double r = 1.0 - theta * delta_t;
  return delta_t / (1.0 - r * r);
}

Ar1Coefficients sa_scaled_ar1(const DriftOperator& op, double alpha, const ScalingFn& g) {
  const int d = op.dim();
  const double ga = g(alpha);
  auto step = [&](const Vec& y) -> Vec {
    return y + (alpha / ga) * eval_drift(op, ga * y + op.root());
  };
  Ar1Coefficients c;
  const Vec base = step(Vec::Zero(d));
  c.phi.resize(d, d);
  for (int i = 0; i < d; ++i) c.phi.col(i) = step(Vec::Unit(d, i)) - base;
  c.noise_gain = alpha / ga;
  return c;
}

Ar1Coefficients em_ar1(const DriftOperator& op, double delta_t) {
  const int d = op.dim();
  auto step = [&](const Vec& x) -> Vec {
    return x + delta_t * eval_drift(op, x + op.root());
  };
  Ar1Coefficients c;
  const Vec base = step(Vec::Zero(d));
  c.phi.resize(d, d);
  for (int i = 0; i < d; ++i) c.phi.col(i) = step(Vec::Unit(d, i)) - base;
  c.noise_gain = std::sqrt(delta_t);
  return c;
}

EmCompareReport em_vs_sa_compare(const DriftOperator& op, double alpha,
                                 const EmCompareConfig& cfg) {
  const StepSize step(alpha);
  const int d = op.dim();

  bool all_zero = true;
  for (const Vec& y : default_probes(d)) {
    all_zero = all_zero && eval_drift(op, op.root() + y).isZero(0.0);
  }
  if (all_zero) throw NumericalError("no stationary law");

  ScalingFn g;
  if (cfg.scaling) {
    g = *cfg.scaling;
  } else {
    try {
      g.exponent = *find_scaling_exponent(op).p_star;
    } catch (const NumericalError&) {
      throw NumericalError("no stationary law");
    }
  }

  const NoiseModel noise(NoiseShape::gaussian, Mat::Identity(d, d));
  EnsembleParams sp;
  sp.n_chains = cfg.n_chains;
  sp.samples_per_chain = cfg.samples_per_chain;
  sp.seed = cfg.seed;
  sp.threads = cfg.threads;
  const ChainEnsemble sa = run_ensemble(op, noise, step, g, sp);

  EmConfig ec;
  ec.delta_t = alpha;
  ec.n_chains = cfg.n_chains;
  ec.samples_per_chain = cfg.samples_per_chain;
  ec.seed = cfg.seed;
  ec.stream_base = kEmStreamOffset;
  ec.threads = cfg.threads;
  const ChainEnsemble em = run_em_ensemble(op, ec);

  const MomentSummary ms = moment_summary(sa);
  const MomentSummary me = moment_summary(em);
  EmCompareReport rep;
  rep.alpha = alpha;
  rep.scaling = g;
  rep.sa_cov = ms.covariance;
  rep.em_cov = me.covariance;
  rep.sa_cov_se = ms.covariance_se;
  rep.em_cov_se = me.covariance_se;
  rep.rel_err = (rep.sa_cov - rep.em_cov).norm() / rep.em_cov.norm();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double se = std::hypot(rep.sa_cov_se(i, j), rep.em_cov_se(i, j));
      if (se > 0.0) {
        rep.max_z = std::max(rep.max_z, std::abs(rep.sa_cov(i, j) - rep.em_cov(i, j)) / se);
      }
    }
  }
  return rep;
}

void write_em_compare_csv(const std::vector<EmCompareReport>& reps,
                          const std::string& path) {
  CsvWriter w(path, {"alpha", "stat", "i", "j", "sa", "sa_se", "em", "em_se"});
  for (const auto& rep : reps) {
    const auto d = rep.sa_cov.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        w.cell(rep.alpha);
        w.cell(std::string("cov"));
        w.cell(static_cast<long>(i + 1));
        w.cell(static_cast<long>(j + 1));
        w.cell(rep.sa_cov(i, j));
        w.cell(rep.sa_cov_se(i, j));
        w.cell(rep.em_cov(i, j));
        w.cell(rep.em_cov_se(i, j));
        w.end_row();
      }
    }
    for (const auto& [name, value] :
         {std::pair<std::string, double>{"rel_err", rep.rel_err},
          {"max_z", rep.max_z},
          {"scaling_exponent", rep.scaling.exponent}}) {
      w.cell(rep.alpha);
      w.cell(name);
      w.cell(std::string());
      w.cell(std::string());
      w.cell(value);
      for (int k = 0; k < 3; ++k) w.cell(std::string());
      w.end_row();
    }
  }
}

}  // namespace salab
