#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diracstar/units.hpp"

namespace diracstar {

/// Flat run configuration. Sources in increasing precedence:
/// defaults, key=value file, DIRACSTAR_<KEY> environment variables, flags.
struct RunConfig {
  // grid
  std::size_t n = 1000;
  double r_max = 40.0;
  double stretch = 2.0;
  // tolerances
  double shoot_tol = 1e-12;
  double polish_tol = 1e-8;
  double newton_tol = 1e-10;
  double tail_tol = 1e-6;
  int max_newton_iterations = 10;
  // eps schedule, geometric
  double eps_min = 1e-3;
  double eps_max = 0.1;
  int steps = 12;
  // 0 selects half the fitted decay rate
  double delta = 0.0;
  // spectrum levels spectrum_n * 2^j, j < refinements
  std::size_t spectrum_n = 500;
  int refinements = 3;
  UnitSystem units;
  std::string out = "run";
  std::uint64_t seed = 20240611;

  void validate() const;
  std::vector<double> schedule() const;

  // canonical key=value text, keys sorted
  std::string to_text() const;
};

std::vector<std::string> config_keys();
void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value);
// '#' starts a comment; blank lines ignored
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::string& path);
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_environment(RunConfig& cfg, const EnvLookup& lookup);
void apply_process_environment(RunConfig& cfg);

}  // namespace diracstar
