#include "salab/config.hpp"

#include "salab/csv.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace salab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected a number, got '" + t + "'");
  }
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected an integer, got '" + t + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + t + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[' && t.back() == ']') {
    t = t.substr(1, t.size() - 2);
  }
  std::vector<double> out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += format_double(xs[i]);
  }
  return s;
}

Mat param_matrix(const std::map<std::string, std::string>& params,
                 const std::string& key, const std::string& fallback) {
  auto it = params.find(key);
  return parse_matrix_literal(it == params.end() ? fallback : it->second);
}

Vec param_vector(const std::map<std::string, std::string>& params,
                 const std::string& key, Eigen::Index dim) {
  auto it = params.find(key);
  if (it == params.end()) return Vec::Zero(dim);
  Mat m = parse_matrix_literal(it->second);
  if (m.cols() != 1 || m.rows() != dim) {
    throw ConfigError("drift." + key + " must be a vector of length " +
                      std::to_string(dim));
  }
  return m.col(0);
}

void require_params(const std::string& id,
                    const std::map<std::string, std::string>& params,
                    const std::set<std::string>& allowed) {
  for (const auto& [k, v] : params) {
    if (!allowed.count(k)) {
      throw ConfigError("drift '" + id + "' does not take parameter drift." + k);
    }
  }
}

}  // namespace

Mat parse_matrix_literal(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("malformed matrix literal '" + trim(text) + "'");
  }
  auto number = [&](const nlohmann::json& v) {
    if (!v.is_number()) {
      throw ConfigError("matrix literal '" + trim(text) + "' has a non-number");
    }
    return v.get<double>();
  };
  if (j.is_number()) return Mat::Constant(1, 1, number(j));
  if (!j.is_array() || j.empty()) {
    throw ConfigError("malformed matrix literal '" + trim(text) + "'");
  }
  if (!j.front().is_array()) {
    Mat m(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) {
      m(static_cast<Eigen::Index>(i), 0) = number(j[i]);
    }
    return m;
  }
  const auto rows = j.size();
  const auto cols = j.front().size();
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError("matrix literal '" + trim(text) + "' is ragged");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(j[r][c]);
    }
  }
  return m;
}

std::string format_matrix_literal(const Mat& m) {
  if (m.size() == 1) return format_double(m(0, 0));
  std::string s = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) s += ", ";
    s += "[";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) s += ", ";
      s += format_double(m(r, c));
    }
    s += "]";
  }
  return s + "]";
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      errors.push_back("line " + std::to_string(lineno) + ": duplicate key " + key);
      continue;
    }
    try {
      if (key == "drift") {
        cfg.drift = value;
      } else if (key.rfind("drift.", 0) == 0) {
        cfg.drift_params[key.substr(6)] = value;
      } else if (key == "noise.shape") {
        cfg.noise_shape = value;
      } else if (key == "noise.sigma") {
        cfg.noise_sigma = value;
      } else if (key == "alphas") {
        cfg.alphas = parse_list(key, value);
      } else if (key == "scaling") {
        cfg.scaling = value;
      } else if (key == "n_chains") {
        cfg.n_chains = parse_long(key, value);
      } else if (key == "burn_in") {
        cfg.burn_in = value;
      } else if (key == "samples_per_chain") {
        cfg.samples_per_chain = parse_long(key, value);
      } else if (key == "thin") {
        cfg.thin = value;
      } else if (key == "seed") {
        cfg.seed = parse_u64(key, value);
      } else if (key == "output_dir") {
        cfg.output_dir = value;
      } else if (key == "alpha_max") {
        cfg.alpha_max = parse_double(key, value);
      } else {
        errors.push_back("line " + std::to_string(lineno) + ": unknown key " + key);
      }
    } catch (const ConfigError& e) {
      errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string s;
  auto put = [&](const std::string& k, const std::string& v) {
    s += k + " = " + v + "\n";
  };
  put("drift", cfg.drift);
  for (const auto& [k, v] : cfg.drift_params) put("drift." + k, v);
  put("noise.shape", cfg.noise_shape);
  if (!cfg.noise_sigma.empty()) put("noise.sigma", cfg.noise_sigma);
  put("alphas", join(cfg.alphas));
  put("scaling", cfg.scaling);
  put("n_chains", std::to_string(cfg.n_chains));
  put("burn_in", cfg.burn_in);
  put("samples_per_chain", std::to_string(cfg.samples_per_chain));
  put("thin", cfg.thin);
  put("seed", std::to_string(cfg.seed));
  put("output_dir", cfg.output_dir);
  if (cfg.alpha_max) put("alpha_max", format_double(*cfg.alpha_max));
  return s;
}

DriftOperator drift_from_config(const std::string& id,
                                const std::map<std::string, std::string>& params) {
  if (id == "grad_quadratic") {
    require_params(id, params, {"hessian", "minimizer"});
    Mat h = param_matrix(params, "hessian", "1");
    return make_grad_quadratic(h, param_vector(params, "minimizer", h.rows()));
  }
  if (id == "linear") {
    require_params(id, params, {"a", "b"});
    if (!params.count("a")) throw ConfigError("drift linear requires drift.a");
    Mat a = param_matrix(params, "a", "");
    return make_linear(a, param_vector(params, "b", a.rows()));
  }
  if (id == "contractive_tanh") {
    require_params(id, params, {"gain"});
    return make_contractive_tanh(param_matrix(params, "gain", "0.9"));
  }
  if (id == "quartic" || id == "exp_square" || id == "quartic_sine") {
    require_params(id, params, {});
    if (id == "quartic") return make_quartic();
    if (id == "exp_square") return make_exp_square();
    return make_quartic_sine();
  }
  if (id == "custom") {
    require_params(id, params, {"name"});
    auto it = params.find("name");
    if (it == params.end()) throw ConfigError("drift custom requires drift.name");
    auto op = find_custom_drift(it->second);
    if (!op) {
      throw ConfigError("no registered evaluator for custom drift '" +
                        it->second + "'");
    }
    return *op;
  }
  throw ConfigError("unknown drift id '" + id + "'");
}

ValidationResult validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  auto guard = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.emplace_back(e.what());
    }
  };

  std::optional<DriftOperator> drift;
  guard([&] { drift = drift_from_config(cfg.drift, cfg.drift_params); });

  std::optional<NoiseModel> noise;
  guard([&] {
    const NoiseShape shape = parse_noise_shape(cfg.noise_shape);
    if (!drift) {
      if (!cfg.noise_sigma.empty()) {
        const Mat m = parse_matrix_literal(cfg.noise_sigma);
        if (m.rows() == m.cols()) NoiseModel(shape, m);
      }
      return;
    }
    const auto d = drift->dim();
    Mat sigma = Mat::Identity(d, d);
    if (!cfg.noise_sigma.empty()) {
      Mat m = parse_matrix_literal(cfg.noise_sigma);
      if (m.size() == 1) {
        sigma *= m(0, 0);
      } else {
        sigma = m;
      }
    }
    if (sigma.rows() != d || sigma.cols() != d) {
      throw ConfigError("noise.sigma must be " + std::to_string(d) + "x" +
                        std::to_string(d));
    }
    noise.emplace(shape, sigma);
  });

  if (cfg.alphas.empty()) errors.emplace_back("alphas must not be empty");
  bool alphas_positive = true;
  for (double a : cfg.alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) alphas_positive = false;
  }
  if (!alphas_positive) errors.emplace_back("alpha must be positive");
  for (std::size_t i = 1; i < cfg.alphas.size(); ++i) {
    if (!(cfg.alphas[i] < cfg.alphas[i - 1])) {
      errors.emplace_back("alphas must be strictly decreasing");
      break;
    }
  }

  double alpha_max = drift ? drift->default_alpha_max() : 0.1;
  if (cfg.alpha_max) {
    if (!(*cfg.alpha_max > 0.0)) {
      errors.emplace_back("alpha_max must be positive");
    } else {
      alpha_max = *cfg.alpha_max;
    }
  }
  if (drift && alphas_positive) {
    for (double a : cfg.alphas) {
      if (a > alpha_max) {
        errors.emplace_back("alpha " + format_double(a) +
                            " above stability threshold " +
                            format_double(alpha_max));
        break;
      }
    }
  }

  std::optional<ScalingFn> scaling;
  if (cfg.scaling != "auto") {
    guard([&] {
      const double p = parse_double("scaling", cfg.scaling);
      if (!(p > 0.0 && p < 1.0)) {
        throw ConfigError("scaling exponent must lie in (0, 1)");
      }
      const ScalingFn g{p, 1.0};
      // g(alpha) -> 0 and alpha / g(alpha) -> 0 along the alpha list.
      for (std::size_t i = 1; i < cfg.alphas.size(); ++i) {
        const double a0 = cfg.alphas[i - 1];
        const double a1 = cfg.alphas[i];
        if (!(g(a1) < g(a0)) || !(a1 / g(a1) < a0 / g(a0))) {
          throw ConfigError("scaling does not decrease along the alpha list");
        }
      }
      scaling = g;
    });
  }

  if (cfg.n_chains < 1) errors.emplace_back("n_chains must be >= 1");
  if (cfg.samples_per_chain < 1) {
    errors.emplace_back("samples_per_chain must be >= 1");
  }
  std::optional<long> burn_in;
  if (cfg.burn_in != "auto") {
    guard([&] {
      burn_in = parse_long("burn_in", cfg.burn_in);
      if (*burn_in < 0) throw ConfigError("burn_in must be >= 0");
    });
  }
  std::optional<long> thin;
  if (cfg.thin != "auto") {
    guard([&] {
      thin = parse_long("thin", cfg.thin);
      if (*thin < 1) throw ConfigError("thin must be >= 1");
    });
  }

  ValidationResult result;
  result.errors = std::move(errors);
  if (result.errors.empty() && drift && noise) {
    result.config = ValidatedConfig{
        cfg,
        *drift,
        *noise,
        cfg.alphas,
        scaling,
        alpha_max,
        static_cast<int>(cfg.n_chains),
        burn_in,
        static_cast<int>(cfg.samples_per_chain),
        thin,
        cfg.seed,
    };
  }
  return result;
}

}  // namespace salab
