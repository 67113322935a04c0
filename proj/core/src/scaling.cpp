#include "salab/scaling.hpp"

#include "salab/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace salab {

namespace {

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

ProbeEvidence classify_probe(const DriftOperator& op, double p, const Vec& y,
                             const std::vector<double>& alphas) {
  ProbeEvidence ev;
  ev.probe = y;
  const auto d = y.size();
  std::vector<Vec> values;
  bool overflow = false;
  for (double a : alphas) {
    Vec s;
    try {
      s = scaled_drift(op, p, a, y);
    } catch (const NumericalError&) {
      overflow = true;
      s = Vec::Constant(d, std::numeric_limits<double>::infinity());
    }
    ev.magnitudes.push_back(s.norm());
    values.push_back(std::move(s));
  }
  if (overflow) {
    ev.slope = -std::numeric_limits<double>::infinity();
    ev.classification = LimitClass::blows_up;
    return ev;
  }

  for (Eigen::Index i = 0; i < d; ++i) {
    double sign = 0.0;
    for (const Vec& v : values) {
      const double s = v(i) > 0.0 ? 1.0 : (v(i) < 0.0 ? -1.0 : 0.0);
      if (s == 0.0) continue;
      if (sign != 0.0 && s != sign) {
        ev.slope = std::numeric_limits<double>::quiet_NaN();
        ev.classification = LimitClass::oscillates;
        return ev;
      }
      sign = s;
    }
  }

  std::vector<double> la;
  std::vector<double> lm;
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    if (ev.magnitudes[j] > 0.0) {
      la.push_back(std::log10(alphas[j]));
      lm.push_back(std::log10(ev.magnitudes[j]));
    }
  }
  if (la.size() < 2) {
    // Identically zero along the sequence.
    ev.slope = std::numeric_limits<double>::infinity();
    ev.classification = LimitClass::vanishes;
    return ev;
  }
  ev.slope = ols_slope(la, lm);
  if (ev.slope >= kSlopeThreshold) {
    ev.classification = LimitClass::vanishes;
  } else if (ev.slope <= -kSlopeThreshold) {
    ev.classification = LimitClass::blows_up;
  } else {
    const double m1 = ev.magnitudes[ev.magnitudes.size() - 2];
    const double m2 = ev.magnitudes.back();
    const bool stable = m1 > 0.0 && m2 > 0.0 && std::abs(m2 - m1) <= kSlopeThreshold * m1;
    ev.classification = stable ? LimitClass::nontrivial
                               : (m2 < m1 ? LimitClass::vanishes : LimitClass::blows_up);
  }
  return ev;
}

}  // namespace

std::string to_string(LimitClass c) {
  switch (c) {
    case LimitClass::vanishes: return "vanishes";
    case LimitClass::nontrivial: return "nontrivial";
    case LimitClass::blows_up: return "blows_up";
    case LimitClass::oscillates: return "oscillates";
  }
  return "unknown";
}

Vec scaled_drift(const DriftOperator& op, double p, double alpha, const Vec& y) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const double g = std::pow(alpha, p);
  return g * eval_drift(op, y * g + op.root()) / alpha;
}

std::vector<double> default_alpha_sequence() {
  std::vector<double> a;
  for (int j = 0; j <= 8; ++j) a.push_back(std::pow(10.0, -2.0 - j / 2.0));
  return a;
}

std::vector<double> default_exponent_grid() {
  return {1.0 / 8, 1.0 / 6, 1.0 / 4, 1.0 / 3, 1.0 / 2, 2.0 / 3, 3.0 / 4};
}

std::vector<Vec> default_probes(int dim) {
  std::vector<Vec> dirs;
  if (dim == 1) {
    dirs.push_back(Vec::Ones(1));
  } else {
    for (int i = 0; i < dim; ++i) dirs.push_back(Vec::Unit(dim, i));
    dirs.push_back(Vec::Ones(dim) / std::sqrt(static_cast<double>(dim)));
  }
  std::vector<Vec> probes;
  for (const Vec& u : dirs) {
    for (double m : {0.25, 0.5, 1.0, 2.0}) {
      probes.push_back(-m * u);
      probes.push_back(m * u);
    }
  }
  return probes;
}

LimitEvidence classify_limit(const DriftOperator& op, double p,
                             const std::vector<Vec>& probes,
                             const std::vector<double>& alphas) {
  if (alphas.size() < 6) throw std::invalid_argument("classify_limit: need at least 6 alphas");
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    if (!(alphas[j] > 0.0) || (j > 0 && !(alphas[j] < alphas[j - 1]))) {
      throw std::invalid_argument("classify_limit: alphas must be positive and strictly decreasing");
    }
  }
  if (std::log10(alphas.front() / alphas.back()) < 4.0 - 1e-9) {
    throw std::invalid_argument("classify_limit: alphas must span at least 4 decades");
  }
  if (probes.empty()) throw std::invalid_argument("classify_limit: no probes");

  LimitEvidence out;
  out.exponent = p;
  out.alphas = alphas;
  bool any_nontrivial = false, any_blow = false, any_osc = false;
  for (const Vec& y : probes) {
    if (y.size() != op.dim()) throw std::invalid_argument("classify_limit: probe dimension");
    ProbeEvidence ev = classify_probe(op, p, y, alphas);
    any_nontrivial = any_nontrivial || ev.classification == LimitClass::nontrivial;
    any_blow = any_blow || ev.classification == LimitClass::blows_up;
    any_osc = any_osc || ev.classification == LimitClass::oscillates;
    out.probes.push_back(std::move(ev));
  }
  if (any_osc) {
    out.classification = LimitClass::oscillates;
  } else if (any_blow) {
    out.classification = LimitClass::blows_up;
  } else if (any_nontrivial) {
    out.classification = LimitClass::nontrivial;
  } else {
    out.classification = LimitClass::vanishes;
  }
  return out;
}

std::optional<LimitClass> ScalingReport::classification_at(double p) const {
  for (const auto& ev : evidence) {
    if (ev.exponent == p) return ev.classification;
  }
  return std::nullopt;
}

ScalingReport find_scaling_exponent(const DriftOperator& op,
                                    const std::vector<double>& grid,
                                    const std::vector<Vec>& probes_in,
                                    const std::vector<double>& alphas) {
  if (grid.empty()) throw std::invalid_argument("find_scaling_exponent: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] < 1.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument("exponent grid must be increasing inside (0, 1)");
    }
  }
  const std::vector<Vec> probes = probes_in.empty() ? default_probes(op.dim()) : probes_in;

  ScalingReport rep;
  rep.exponent_grid = grid;
  for (double p : grid) rep.evidence.push_back(classify_limit(op, p, probes, alphas));

  std::vector<std::size_t> nontrivial;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (rep.evidence[i].classification == LimitClass::nontrivial) nontrivial.push_back(i);
  }

  if (nontrivial.size() == 1) {
    rep.p_star = grid[nontrivial.front()];
  } else if (nontrivial.size() > 1) {
    const bool adjacent = nontrivial.back() - nontrivial.front() == nontrivial.size() - 1;
    if (!adjacent) {
      throw NumericalError("no power-law scaling on grid");
    }
    const double mid = 0.5 * (grid[nontrivial.front()] + grid[nontrivial.back()]);
    rep.evidence.push_back(classify_limit(op, mid, probes, alphas));
    if (rep.evidence.back().classification != LimitClass::nontrivial) {
      throw NumericalError("no power-law scaling on grid");
    }
    rep.p_star = mid;
    rep.note = "several adjacent exponents read nontrivial; reporting their midpoint";
  } else {
    std::optional<std::size_t> lo_idx;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      if (rep.evidence[i].classification == LimitClass::blows_up &&
          rep.evidence[i + 1].classification == LimitClass::vanishes) {
        lo_idx = i;
        break;
      }
    }
    if (!lo_idx) throw NumericalError("no power-law scaling on grid");
    // Small exponents blow up, large ones vanish.
    double lo = grid[*lo_idx];
    double hi = grid[*lo_idx + 1];
    while (hi - lo > kBisectionTolerance) {
      const double mid = 0.5 * (lo + hi);
      rep.evidence.push_back(classify_limit(op, mid, probes, alphas));
      const LimitEvidence& ev = rep.evidence.back();
      LimitClass c = ev.classification;
      if (c == LimitClass::nontrivial) {
        // Inside the slope threshold; keep narrowing on the sign of the slope.
        double slope = 0.0;
        for (const auto& pe : ev.probes) slope += pe.slope;
        c = slope > 0.0 ? LimitClass::vanishes : LimitClass::blows_up;
      }
      if (c == LimitClass::blows_up) {
        lo = mid;
      } else if (c == LimitClass::vanishes) {
        hi = mid;
      } else {
        throw NumericalError("no power-law scaling on grid");
      }
    }
    rep.p_star = 0.5 * (lo + hi);
    rep.note = "p* located by bisection between grid exponents";
  }

  if (!(*rep.p_star < 1.0)) throw NumericalError("scaling exponent must lie in (0, 1)");

  for (const Vec& y : probes) {
    rep.ftilde.push_back({y, scaled_drift(op, *rep.p_star, kFtildeAlpha, y)});
  }
  return rep;
}

Mat ftilde_jacobian(const DriftOperator& op, double p, double h) {
  const int d = op.dim();
  Mat j(d, d);
  for (int i = 0; i < d; ++i) {
    const Vec e = h * Vec::Unit(d, i);
    j.col(i) = (scaled_drift(op, p, kFtildeAlpha, e) -
                scaled_drift(op, p, kFtildeAlpha, -e)) /
               (2.0 * h);
  }
  return j;
}

namespace {

std::string probe_text(const Vec& y) {
  std::string s;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (i > 0) s += ';';
    s += format_double(y(i));
  }
  return s;
}

}  // namespace

void write_scaling_report_csv(const ScalingReport& rep, const std::string& path) {
  CsvWriter w(path, {"p", "probe", "alpha", "magnitude", "classification"});
  for (const auto& ev : rep.evidence) {
    for (const auto& pr : ev.probes) {
      for (std::size_t j = 0; j < ev.alphas.size(); ++j) {
        w.cell(ev.exponent);
        w.cell(probe_text(pr.probe));
        w.cell(ev.alphas[j]);
        w.cell(pr.magnitudes[j]);
        w.cell(to_string(ev.classification));
        w.end_row();
      }
    }
  }
  w.cell(std::string("p*"));
  w.cell(std::string());
  w.cell(std::string());
  w.cell(std::string());
  if (rep.p_star) {
    w.cell(*rep.p_star);
  } else {
    w.cell(std::string("none"));
  }
  w.end_row();
}

void write_ftilde_csv(const ScalingReport& rep, const std::string& path) {
  const int d = rep.ftilde.empty() ? 1 : static_cast<int>(rep.ftilde.front().y.size());
  std::vector<std::string> header;
  for (int i = 1; i <= d; ++i) header.push_back("y_" + std::to_string(i));
  for (int i = 1; i <= d; ++i) header.push_back("ftilde_" + std::to_string(i));
  CsvWriter w(path, header);
  for (const auto& s : rep.ftilde) {
    for (Eigen::Index i = 0; i < s.y.size(); ++i) w.cell(s.y(i));
    for (Eigen::Index i = 0; i < s.value.size(); ++i) w.cell(s.value(i));
    w.end_row();
  }
}

}  // namespace salab
