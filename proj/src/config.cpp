#include "diracstar/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "diracstar/einstein_dirac.hpp"
#include "diracstar/profile_io.hpp"

namespace diracstar {

namespace {

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw config_error("bad-value", key + " expects a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x)) throw config_error("bad-value", key + " expects a finite number, got '" + v + "'");
  return x;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw config_error("bad-value", key + " expects an integer, got '" + v + "'");
  }
  if (pos != v.size()) throw config_error("bad-value", key + " expects an integer, got '" + v + "'");
  return x;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  long long x = parse_int(key, v);
  if (x < 0) throw config_error("bad-value", key + " must be >= 0");
  return static_cast<std::size_t>(x);
}

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

const std::map<std::string, std::pair<Setter, Getter>>& table() {
  static const std::map<std::string, std::pair<Setter, Getter>> t = [] {
    std::map<std::string, std::pair<Setter, Getter>> m;
    auto dbl = [&](const std::string& k, double RunConfig::*f) {
      m[k] = {[k, f](RunConfig& c, const std::string& v) { c.*f = parse_double(k, v); },
              [f](const RunConfig& c) { return format_double(c.*f); }};
    };
    auto integer = [&](const std::string& k, int RunConfig::*f) {
      m[k] = {[k, f](RunConfig& c, const std::string& v) { c.*f = static_cast<int>(parse_int(k, v)); },
              [f](const RunConfig& c) { return std::to_string(c.*f); }};
    };
    auto count = [&](const std::string& k, std::size_t RunConfig::*f) {
      m[k] = {[k, f](RunConfig& c, const std::string& v) { c.*f = parse_count(k, v); },
              [f](const RunConfig& c) { return std::to_string(c.*f); }};
    };
    auto unit = [&](const std::string& k, double UnitSystem::*f) {
      m[k] = {[k, f](RunConfig& c, const std::string& v) { c.units.*f = parse_double(k, v); },
              [f](const RunConfig& c) { return format_double(c.units.*f); }};
    };
    count("n", &RunConfig::n);
    dbl("r_max", &RunConfig::r_max);
    dbl("stretch", &RunConfig::stretch);
    dbl("shoot_tol", &RunConfig::shoot_tol);
    dbl("polish_tol", &RunConfig::polish_tol);
    dbl("newton_tol", &RunConfig::newton_tol);
    dbl("tail_tol", &RunConfig::tail_tol);
    integer("max_newton_iterations", &RunConfig::max_newton_iterations);
    dbl("eps_min", &RunConfig::eps_min);
    dbl("eps_max", &RunConfig::eps_max);
    integer("steps", &RunConfig::steps);
    dbl("delta", &RunConfig::delta);
    count("spectrum_n", &RunConfig::spectrum_n);
    integer("refinements", &RunConfig::refinements);
    unit("hbar", &UnitSystem::hbar);
    unit("m", &UnitSystem::m);
    unit("G", &UnitSystem::G);
    m["out"] = {[](RunConfig& c, const std::string& v) { c.out = v; }, [](const RunConfig& c) { return c.out; }};
    m["seed"] = {[](RunConfig& c, const std::string& v) {
                   long long x = parse_int("seed", v);
                   if (x < 0) throw config_error("bad-value", "seed must be >= 0");
                   c.seed = static_cast<std::uint64_t>(x);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }};
    return m;
  }();
  return t;
}

}  // namespace

void RunConfig::validate() const {
  if (n < 200) throw config_error("grid", "n must be >= 200");
  if (spectrum_n < 200) throw config_error("grid", "spectrum_n must be >= 200");
  if (!(r_max > 0.0)) throw config_error("grid", "r_max must be > 0");
  if (!(stretch >= 1.0)) throw config_error("grid", "stretch must be >= 1");
  for (double t : {shoot_tol, polish_tol, newton_tol, tail_tol})
    if (!(t > 0.0)) throw config_error("tolerance", "all tolerances must be > 0");
  if (max_newton_iterations < 1) throw config_error("tolerance", "max_newton_iterations must be >= 1");
  if (steps < 0) throw config_error("schedule", "steps must be >= 0");
  if (steps > 0 && !(eps_min > 0.0 && eps_max >= eps_min))
    throw config_error("schedule", "need 0 < eps_min <= eps_max");
  if (steps > 1 && !(eps_max > eps_min)) throw config_error("schedule", "schedule must be strictly increasing");
  if (delta < 0.0) throw config_error("norm-spec", "delta must be >= 0");
  if (refinements < 1) throw config_error("refinements", "refinements must be >= 1");
  if (out.empty()) throw config_error("out", "output directory must be set");
  units.validate();
}

std::vector<double> RunConfig::schedule() const { return geometric_schedule(eps_min, eps_max, steps); }

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [k, fns] : table()) os << k << "=" << fns.second(*this) << "\n";
  return os.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& e : table()) k.push_back(e.first);
  return k;
}

void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto it = table().find(key);
  if (it == table().end()) throw config_error("unknown-key", "unknown configuration key '" + key + "'");
  it->second.first(cfg, trim(value));
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("syntax", "line " + std::to_string(lineno) + ": expected key=value");
    set_config_key(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw config_error("config-file", e.what());
  }
  apply_config_text(cfg, text);
}

void apply_environment(RunConfig& cfg, const EnvLookup& lookup) {
  for (const auto& [k, fns] : table()) {
    std::string name = "DIRACSTAR_";
    for (char ch : k) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (auto v = lookup(name)) fns.first(cfg, trim(*v));
  }
}

void apply_process_environment(RunConfig& cfg) {
  apply_environment(cfg, [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  });
}

}  // namespace diracstar
