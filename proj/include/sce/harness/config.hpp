#pragma once

// Strict key = value run configuration. Lines are `key = value`; `#` starts
// a comment; unknown keys and malformed values are errors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sce/dynamics.hpp"
#include "sce/noise.hpp"
#include "sce/thermo.hpp"

namespace sce {

/// Thrown for anything wrong with a configuration; the CLI maps it to exit 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Recipe { constant, sine, bump, steep };

struct InitialData {
  Recipe recipe = Recipe::sine;
  double amplitude = 0.5;      // velocity amplitude
  double rho_amplitude = 0.0;  // relative density perturbation
  int wavenumber = 1;
  double width = 0.0;          // bump width; 0 means L/4
  double steepness = 10.0;     // tanh sharpness of the steep recipe
};

enum class IllPrepared { off, sqrt_eps };

struct RunConfig {
  int dim = 1;
  int n = 256;
  double length = 2.0 * std::numbers::pi;

  PhysParams phys;
  NoiseSpec noise;
  double path_dt = 1e-2;

  StopConfig stop;
  Formulation formulation = Formulation::conservative;
  Integrator integrator = Integrator::ssp_rk3;
  Scheme scheme = Scheme::spectral;

  InitialData init;
  IllPrepared ill = IllPrepared::off;
  double ill_rho_min = 0.25;  // clamp corridor of the perturbed density, relative to rho_bar
  double ill_rho_max = 4.0;

  int output_every = 1;
  int snapshot_every = 0;  // 0: no snapshots

  std::uint64_t seed = 1;
  int paths = 32;
  int workers = 1;
  std::vector<double> eps_list{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};

  Grid grid() const { return Grid(dim, n, length); }
  void validate() const;
};

namespace config {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "off") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

/// Applies one key = value pair.
inline void apply(RunConfig& c, const std::string& key, const std::string& v) {
  auto pick = [&](std::initializer_list<std::pair<const char*, int>> options) {
    for (const auto& [name, value] : options) {
      if (v == name) return value;
    }
    throw ConfigError("config: bad value for " + key + ": '" + v + "'");
  };
  auto box_corner = [&](std::array<double, 2>& corner) {
    const auto xs = parse_list(key, v);
    if (xs.size() > 2) throw ConfigError("config: too many coordinates for " + key);
    corner = {xs[0], xs.size() > 1 ? xs[1] : xs[0]};
  };

  if (key == "grid.dim") c.dim = static_cast<int>(parse_int(key, v));
  else if (key == "grid.n") c.n = static_cast<int>(parse_int(key, v));
  else if (key == "grid.length") c.length = parse_double(key, v);
  else if (key == "phys.gamma") c.phys.gamma = parse_double(key, v);
  else if (key == "phys.a") c.phys.a = parse_double(key, v);
  else if (key == "phys.rho_bar") c.phys.rho_bar = parse_double(key, v);
  else if (key == "phys.nu") c.phys.nu = parse_double(key, v);
  else if (key == "phys.lambda") c.phys.lambda = parse_double(key, v);
  else if (key == "phys.epsilon") c.phys.epsilon = parse_double(key, v);
  else if (key == "noise.modes") c.noise.modes = static_cast<int>(parse_int(key, v));
  else if (key == "noise.alpha0") c.noise.alpha0 = parse_double(key, v);
  else if (key == "noise.support_lo") box_corner(c.noise.support.lo);
  else if (key == "noise.support_hi") box_corner(c.noise.support.hi);
  else if (key == "noise.cutoff") {
    c.noise.cutoff = v == "off" ? std::nullopt : std::optional<double>(parse_double(key, v));
  }
  else if (key == "noise.matrix_scale") c.noise.matrix_scale = parse_double(key, v);
  else if (key == "noise.dt") c.path_dt = parse_double(key, v);
  else if (key == "stop.R") c.stop.R_detector = parse_double(key, v);
  else if (key == "stop.N") c.stop.N_level = parse_double(key, v);
  else if (key == "stop.s") c.stop.s_order = v == "auto" ? std::nullopt : std::optional<double>(parse_double(key, v));
  else if (key == "stop.T") c.stop.T_max = parse_double(key, v);
  else if (key == "stop.cfl") c.stop.cfl = parse_double(key, v);
  else if (key == "solver.formulation") {
    c.formulation = static_cast<Formulation>(pick({{"conservative", 0}, {"symmetric", 1}}));
  }
  else if (key == "solver.integrator") c.integrator = static_cast<Integrator>(pick({{"heun", 0}, {"ssp_rk3", 1}}));
  else if (key == "solver.scheme") c.scheme = static_cast<Scheme>(pick({{"spectral", 0}, {"rusanov", 1}}));
  else if (key == "init.recipe") {
    c.init.recipe = static_cast<Recipe>(pick({{"constant", 0}, {"sine", 1}, {"bump", 2}, {"steep", 3}}));
  }
  else if (key == "init.amplitude") c.init.amplitude = parse_double(key, v);
  else if (key == "init.rho_amplitude") c.init.rho_amplitude = parse_double(key, v);
  else if (key == "init.wavenumber") c.init.wavenumber = static_cast<int>(parse_int(key, v));
  else if (key == "init.width") c.init.width = parse_double(key, v);
  else if (key == "init.steepness") c.init.steepness = parse_double(key, v);
  else if (key == "ill.recipe") c.ill = static_cast<IllPrepared>(pick({{"off", 0}, {"sqrt_eps", 1}}));
  else if (key == "ill.rho_min") c.ill_rho_min = parse_double(key, v);
  else if (key == "ill.rho_max") c.ill_rho_max = parse_double(key, v);
  else if (key == "output.every") c.output_every = static_cast<int>(parse_int(key, v));
  else if (key == "output.snapshot_every") c.snapshot_every = static_cast<int>(parse_int(key, v));
  else if (key == "run.seed") c.seed = static_cast<std::uint64_t>(parse_int(key, v));
  else if (key == "run.paths") c.paths = static_cast<int>(parse_int(key, v));
  else if (key == "run.workers") c.workers = static_cast<int>(parse_int(key, v));
  else if (key == "sweep.eps") c.eps_list = parse_list(key, v);
  else throw ConfigError("config: unknown key '" + key + "'");
}

/// Applies an override of the form key=value.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("config: override must be key=value: '" + assignment + "'");
  apply(c, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

inline RunConfig parse(std::istream& in, const std::string& origin = "<config>") {
  RunConfig c;
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (seen.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    seen[key] = lineno;
    try {
      apply(c, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

inline RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse(in, path.string());
}

inline std::string format_double(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Canonical text form; parse(serialize(c)) reproduces c.
inline std::string serialize(const RunConfig& c) {
  std::ostringstream o;
  auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << "\n"; };
  auto d = [&](double v) { return format_double(v); };
  auto pair = [&](const std::array<double, 2>& a) { return c.dim == 2 ? d(a[0]) + ", " + d(a[1]) : d(a[0]); };
  kv("grid.dim", std::to_string(c.dim));
  kv("grid.n", std::to_string(c.n));
  kv("grid.length", d(c.length));
  kv("phys.gamma", d(c.phys.gamma));
  kv("phys.a", d(c.phys.a));
  kv("phys.rho_bar", d(c.phys.rho_bar));
  kv("phys.nu", d(c.phys.nu));
  kv("phys.lambda", d(c.phys.lambda));
  kv("phys.epsilon", d(c.phys.epsilon));
  kv("noise.modes", std::to_string(c.noise.modes));
  kv("noise.alpha0", d(c.noise.alpha0));
  kv("noise.support_lo", pair(c.noise.support.lo));
  kv("noise.support_hi", pair(c.noise.support.hi));
  kv("noise.cutoff", c.noise.cutoff ? d(*c.noise.cutoff) : "off");
  kv("noise.matrix_scale", d(c.noise.matrix_scale));
  kv("noise.dt", d(c.path_dt));
  kv("stop.R", d(c.stop.R_detector));
  kv("stop.N", d(c.stop.N_level));
  kv("stop.s", c.stop.s_order ? d(*c.stop.s_order) : "auto");
  kv("stop.T", d(c.stop.T_max));
  kv("stop.cfl", d(c.stop.cfl));
  kv("solver.formulation", c.formulation == Formulation::conservative ? "conservative" : "symmetric");
  kv("solver.integrator", c.integrator == Integrator::heun ? "heun" : "ssp_rk3");
  kv("solver.scheme", c.scheme == Scheme::spectral ? "spectral" : "rusanov");
  const char* recipes[] = {"constant", "sine", "bump", "steep"};
  kv("init.recipe", recipes[static_cast<int>(c.init.recipe)]);
  kv("init.amplitude", d(c.init.amplitude));
  kv("init.rho_amplitude", d(c.init.rho_amplitude));
  kv("init.wavenumber", std::to_string(c.init.wavenumber));
  kv("init.width", d(c.init.width));
  kv("init.steepness", d(c.init.steepness));
  kv("ill.recipe", c.ill == IllPrepared::off ? "off" : "sqrt_eps");
  kv("ill.rho_min", d(c.ill_rho_min));
  kv("ill.rho_max", d(c.ill_rho_max));
  kv("output.every", std::to_string(c.output_every));
  kv("output.snapshot_every", std::to_string(c.snapshot_every));
  kv("run.seed", std::to_string(c.seed));
  kv("run.paths", std::to_string(c.paths));
  kv("run.workers", std::to_string(c.workers));
  std::string eps;
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) eps += (i ? ", " : "") + d(c.eps_list[i]);
  kv("sweep.eps", eps);
  return o.str();
}

}  // namespace config

inline void RunConfig::validate() const {
  try {
    (void)grid();
    phys.validate();
    stop.validate();
    (void)NoiseModel::linear(grid(), NoiseSpec{0, noise.alpha0, noise.support, noise.cutoff, noise.matrix_scale,
                                                noise.derivative_order});
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (noise.modes < 0) throw ConfigError("config: noise.modes must be >= 0");
  if (noise.cutoff && !(*noise.cutoff > 0.0)) throw ConfigError("config: noise.cutoff must be > 0");
  if (!(path_dt > 0.0)) throw ConfigError("config: noise.dt must be > 0");
  if (formulation == Formulation::symmetric && scheme == Scheme::rusanov) {
    throw ConfigError("config: the rusanov scheme needs the conservative formulation");
  }
  if (init.wavenumber < 1) throw ConfigError("config: init.wavenumber must be >= 1");
  if (!(ill_rho_min > 0.0 && ill_rho_min < ill_rho_max)) throw ConfigError("config: need 0 < ill.rho_min < ill.rho_max");
  if (output_every < 1) throw ConfigError("config: output.every must be >= 1");
  if (snapshot_every < 0) throw ConfigError("config: output.snapshot_every must be >= 0");
  if (paths < 1) throw ConfigError("config: run.paths must be >= 1");
  if (workers < 1) throw ConfigError("config: run.workers must be >= 1");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] >= 0.0 && eps_list[i] <= 1.0)) throw ConfigError("config: sweep.eps entries must lie in [0,1]");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("config: sweep.eps must be strictly decreasing");
  }
}

}  // namespace sce
