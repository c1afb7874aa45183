#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "marcus/coefficients.hpp"
#include "marcus/levy.hpp"
#include "marcus/montecarlo.hpp"
#include "marcus/test_functions.hpp"

namespace marcus {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment description. INI layout:
///
///   [model]  name, params
///   [levy]   family, params, delta
///   [run]    f, f_params, x0, T, h_list, n_paths, seed, oracle, h_fine,
///            ode_tol, identity_tol, n_probes, out_dir
///
/// Lists are comma separated.
struct ExperimentConfig {
  std::string model_name = "bounded_trig";
  std::vector<double> model_params{0.3, 0.4, 0.5};
  std::string levy_family = "compound_poisson_normal";
  std::vector<double> levy_params{1.0, 0.0, 0.5};
  double delta = kDefaultTruncation;
  std::string f_tag = "gaussian_bump";
  std::vector<double> f_params{0.5, 1.0};
  double x0 = 0.5;
  double T = 1.0;
  std::vector<double> h_list{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  std::size_t n_paths = 100000;
  std::uint64_t seed = 20240601;
  std::string oracle = "reference";
  double h_fine = 1.0 / 4096.0;
  double ode_tol = kMonteCarloFlowTol;
  double identity_tol = 1e-5;
  std::size_t n_probes = 100;
  std::string out_dir = ".";

  bool operator==(const ExperimentConfig&) const = default;

  CoefficientModel model() const { return builtin_model(model_name, model_params); }
  LevyModel levy() const {
    return LevyModel(levy_family_from_string(levy_family), levy_params, delta);
  }
  TestFunction f() const { return make_test_function(f_tag, f_params); }
  Oracle oracle_kind() const { return oracle_from_string(oracle); }

  ExperimentSetup setup() const {
    ExperimentSetup s{model(), levy(), f()};
    s.x0 = x0;
    s.T = T;
    s.h_list = h_list;
    s.n_paths = n_paths;
    s.seed = seed;
    s.oracle = oracle_kind();
    s.h_fine = h_fine;
    s.ode_tol = ode_tol;
    return s;
  }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string tok = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ConfigError(key + ": bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_g17(v[i]);
  }
  return out;
}

template <class T>
T get_value(const boost::property_tree::ptree& pt, const std::string& key, T fallback) {
  const auto node = pt.get_optional<std::string>(key);
  if (!node) return fallback;
  std::istringstream is(*node);
  T v{};
  is >> v;
  if (is.fail() || !(is >> std::ws).eof()) {
    throw ConfigError(key + ": cannot parse '" + *node + "'");
  }
  return v;
}

}  // namespace detail

/// Checks that every name resolves and the grid is usable.
inline void validate(const ExperimentConfig& c) {
  try {
    (void)c.model();
    (void)c.levy();
    (void)c.f();
    (void)c.oracle_kind();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.h_list.empty()) throw ConfigError("run.h_list is empty");
  for (std::size_t i = 0; i < c.h_list.size(); ++i) {
    if (!(c.h_list[i] > 0.0)) throw ConfigError("run.h_list entries must be > 0");
    if (i > 0 && !(c.h_list[i] < c.h_list[i - 1])) {
      throw ConfigError("run.h_list must be strictly decreasing");
    }
  }
  if (!(c.T > 0.0)) throw ConfigError("run.T must be > 0");
  const double min_h = std::min(c.h_list.back(), c.h_fine);
  if (!(c.h_fine > 0.0)) throw ConfigError("run.h_fine must be > 0");
  if (c.T / min_h > kMaxGridSteps) throw ConfigError("T / min(h) exceeds 1e8");
  if (!(c.ode_tol > 0.0) || !(c.identity_tol > 0.0)) {
    throw ConfigError("tolerances must be > 0");
  }
  if (!std::isfinite(c.x0)) throw ConfigError("run.x0 must be finite");
}

inline ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  for (const auto& [section, body] : pt) {
    if (section != "model" && section != "levy" && section != "run") {
      throw ConfigError("unknown section [" + section + "]");
    }
    (void)body;
  }
  ExperimentConfig c;
  using detail::get_value;
  auto list = [&](const std::string& key, const std::vector<double>& fallback) {
    const auto node = pt.get_optional<std::string>(key);
    return node ? detail::parse_list(key, *node) : fallback;
  };
  c.model_name = pt.get<std::string>("model.name", c.model_name);
  c.model_params = list("model.params", c.model_params);
  c.levy_family = pt.get<std::string>("levy.family", c.levy_family);
  c.levy_params = list("levy.params", c.levy_params);
  c.delta = get_value(pt, "levy.delta", c.delta);
  c.f_tag = pt.get<std::string>("run.f", c.f_tag);
  c.f_params = list("run.f_params", c.f_params);
  c.x0 = get_value(pt, "run.x0", c.x0);
  c.T = get_value(pt, "run.T", c.T);
  c.h_list = list("run.h_list", c.h_list);
  c.n_paths = get_value(pt, "run.n_paths", c.n_paths);
  c.seed = get_value(pt, "run.seed", c.seed);
  c.oracle = pt.get<std::string>("run.oracle", c.oracle);
  c.h_fine = get_value(pt, "run.h_fine", c.h_fine);
  c.ode_tol = get_value(pt, "run.ode_tol", c.ode_tol);
  c.identity_tol = get_value(pt, "run.identity_tol", c.identity_tol);
  c.n_probes = get_value(pt, "run.n_probes", c.n_probes);
  c.out_dir = pt.get<std::string>("run.out_dir", c.out_dir);
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  return parse_config(is);
}

inline std::string serialize_config(const ExperimentConfig& c) {
  using detail::format_list;
  std::ostringstream os;
  os << "[model]\n"
     << "name = " << c.model_name << "\n"
     << "params = " << format_list(c.model_params) << "\n\n"
     << "[levy]\n"
     << "family = " << c.levy_family << "\n"
     << "params = " << format_list(c.levy_params) << "\n"
     << "delta = " << format_g17(c.delta) << "\n\n"
     << "[run]\n"
     << "f = " << c.f_tag << "\n"
     << "f_params = " << format_list(c.f_params) << "\n"
     << "x0 = " << format_g17(c.x0) << "\n"
     << "T = " << format_g17(c.T) << "\n"
     << "h_list = " << format_list(c.h_list) << "\n"
     << "n_paths = " << c.n_paths << "\n"
     << "seed = " << c.seed << "\n"
     << "oracle = " << c.oracle << "\n"
     << "h_fine = " << format_g17(c.h_fine) << "\n"
     << "ode_tol = " << format_g17(c.ode_tol) << "\n"
     << "identity_tol = " << format_g17(c.identity_tol) << "\n"
     << "n_probes = " << c.n_probes << "\n"
     << "out_dir = " << c.out_dir << "\n";
  return os.str();
}

}  // namespace marcus
