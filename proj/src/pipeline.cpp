#include "diracstar/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "json.hpp"

#include "diracstar/digest.hpp"
#include "diracstar/profile_io.hpp"

namespace diracstar {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("mkdir", "cannot create " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_json(const std::string& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw io_error("malformed-json", path + ": " + e.what());
  }
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string index_name(const std::string& stem, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu.csv", stem.c_str(), k);
  return buf;
}

json norms_json(const NormReport& n) {
  return {{"l", n.l_diff}, {"Q", n.Q}, {"N", n.N}, {"Phi1", n.Phi1}, {"psi2", n.psi2}, {"total", n.total()}};
}

json slope_json(const SlopeFit& s) {
  return {{"total", finite_or_null(s.total)}, {"Q", finite_or_null(s.Q)},       {"N", finite_or_null(s.N)},
          {"Phi1", finite_or_null(s.Phi1)},   {"psi2", finite_or_null(s.psi2)}, {"points", s.points}};
}

}  // namespace

bool RunManifest::completed() const {
  for (const auto& s : stages)
    if (s.status != "completed" && s.status != "skipped") return false;
  return true;
}

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["config"] = config_text;
  j["exit_code"] = exit_code;
  j["stages"] = json::array();
  for (const auto& s : stages) j["stages"].push_back({{"name", s.name}, {"status", s.status}, {"message", s.message}});
  j["files"] = json::array();
  for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return j.dump(2) + "\n";
}

ChoquardControls choquard_controls(const RunConfig& cfg) {
  ChoquardControls c;
  c.shoot.bracket_tol = cfg.shoot_tol;
  c.shoot.residual_tol = cfg.polish_tol;
  return c;
}

void save_choquard(const ChoquardSolution& sol, const std::string& profiles_csv, const std::string& summary_json) {
  for (const auto& f : {profiles_csv, summary_json}) {
    auto parent = fs::path(f).parent_path();
    if (!parent.empty()) make_dir(parent.string());
  }
  save_profiles(profiles_csv, ProfileTable{sol.grid->nodes(), {"phi", "u"}, {sol.phi.f, sol.u.f}});
  const auto& c = sol.canonical;
  json j = {{"schema_version", 1},
            {"amplitude", c.amplitude},
            {"eta", sol.eta},
            {"E", sol.E},
            {"u0", sol.u0},
            {"energy", sol.energy},
            {"decay_rate", sol.decay_rate},
            {"residual_sup", c.residual_sup},
            {"grid_n", sol.grid->size()},
            {"r_max", sol.grid->r_max()},
            {"stretch", sol.grid->stretch()},
            {"units", {{"hbar", sol.units.hbar}, {"m", sol.units.m}, {"G", sol.units.G}}},
            {"diagnostics",
             {{"decay_amplitude", sol.decay_amplitude},
              {"linearized_decay_rate", linearized_decay_rate(sol)},
              {"alpha", sol.alpha},
              {"beta", sol.beta},
              {"normalization", sol.normalization},
              {"ele_residual_sup", sol.ele_residual_sup},
              {"shooting_amplitude", c.shooting_amplitude},
              {"W_inf", c.W_inf},
              {"canonical_mass", c.mass},
              {"newton_iterations", c.newton_iterations}}}};
  write_json(summary_json, j);
}

void save_choquard(const ChoquardSolution& sol, const std::string& dir) {
  make_dir(dir);
  save_choquard(sol, join(dir, "profiles.csv"), join(dir, "summary.json"));
}

ChoquardSolution run_choquard_stage(const RunConfig& cfg, const std::string& dir) {
  auto sol = solve_choquard(RadialGrid::stretched(cfg.n, cfg.r_max, cfg.stretch), cfg.units, choquard_controls(cfg));
  save_choquard(sol, dir);
  return sol;
}

ChoquardSolution load_choquard(const std::string& profiles_csv, const std::string& summary_json) {
  auto table = load_profiles(profiles_csv);
  json j = read_json(summary_json);
  ChoquardSolution sol;
  try {
    sol.grid = RadialGrid::from_nodes(table.r);
    double stretch = j.at("stretch").get<double>();
    if (stretch > 0.0) {
      auto g = RadialGrid::stretched(table.r.size(), table.r.back(), stretch);
      if (g->nodes() == table.r) sol.grid = g;
    }
    const auto& u = j.at("units");
    sol.units = UnitSystem(u.at("hbar").get<double>(), u.at("m").get<double>(), u.at("G").get<double>());
    sol.eta = j.at("eta").get<double>();
    sol.E = j.at("E").get<double>();
    sol.u0 = j.at("u0").get<double>();
    sol.energy = j.at("energy").get<double>();
    sol.decay_rate = j.at("decay_rate").get<double>();
    sol.canonical.amplitude = j.at("amplitude").get<double>();
    sol.canonical.residual_sup = j.at("residual_sup").get<double>();
  } catch (const json::exception& e) {
    throw io_error("malformed-json", summary_json + ": " + e.what());
  } catch (const Error& e) {
    throw io_error("malformed-csv", e.what());
  }
  sol.phi = RadialProfile(sol.grid, table.column("phi"), Parity::even);
  sol.u = RadialProfile(sol.grid, table.column("u"), Parity::even);
  const auto& g = *sol.grid;
  sol.dphi.resize(g.cells());
  sol.du.resize(g.cells());
  for (std::size_t c = 0; c < g.cells(); ++c) {
    sol.dphi[c] = (sol.phi.f[c + 1] - sol.phi.f[c]) / g.width(c);
    sol.du[c] = (sol.u.f[c + 1] - sol.u.f[c]) / g.width(c);
  }
  return sol;
}

ChoquardSolution load_choquard(const std::string& dir) {
  return load_choquard(join(dir, "profiles.csv"), join(dir, "summary.json"));
}

SpectrumReport run_spectrum_stage(const RunConfig& cfg, const std::optional<ChoquardSolution>& level0,
                                  const std::string& out_json) {
  SpectrumReport rep;
  std::size_t n0 = level0 ? level0->grid->size() : cfg.spectrum_n;
  double r_max = level0 ? level0->grid->r_max() : cfg.r_max;
  double stretch = level0 ? level0->grid->stretch() : cfg.stretch;
  UnitSystem units = level0 ? level0->units : cfg.units;
  for (int j = 0; j < cfg.refinements; ++j) {
    std::size_t n = n0 << j;
    SpectrumReport s;
    try {
      if (j == 0 && level0) {
        s = spectrum(assemble_L(*level0));
      } else {
        auto sol = solve_choquard(RadialGrid::stretched(n, r_max, stretch > 0.0 ? stretch : 2.0), units,
                                  choquard_controls(cfg));
        s = spectrum(assemble_L(sol));
      }
    } catch (const Error& e) {
      throw Error(e.error_class(), e.code(), std::string(e.what()) + " (level " + std::to_string(j) + ")");
    }
    rep.levels.push_back(n);
    rep.negative_counts.push_back(s.negative_count);
    rep.refinement_trace.push_back(s.min_abs_eigenvalue);
    rep.eigenvalues = std::move(s.eigenvalues);
    rep.negative_count = s.negative_count;
    rep.min_abs_eigenvalue = s.min_abs_eigenvalue;
  }
  json j;
  std::size_t k = std::min<std::size_t>(10, rep.eigenvalues.size());
  j["eigenvalues_bottom10"] = std::vector<double>(rep.eigenvalues.begin(), rep.eigenvalues.begin() + k);
  j["negative_count"] = rep.negative_count;
  j["min_abs_eigenvalue"] = rep.min_abs_eigenvalue;
  j["refinement_trace"] = rep.refinement_trace;
  write_json(out_json, j);
  return rep;
}

ContinuationResult run_continue_stage(const RunConfig& cfg, const ChoquardSolution& sol, const std::string& dir) {
  make_dir(dir);
  auto lp = limit_point(sol);
  ContinuationControls ctl;
  ctl.newton.tol = cfg.newton_tol;
  ctl.max_iterations_per_step = cfg.max_newton_iterations;
  ctl.delta = cfg.delta;
  auto res = continue_in_eps(lp, cfg.schedule(), sol.eta, ctl, sol.decay_rate);

  json steps = json::array();
  const auto& r = sol.grid->nodes();
  for (std::size_t k = 0; k < res.steps.size(); ++k) {
    const auto& st = res.steps[k];
    const auto& s = st.state;
    save_profiles(join(dir, index_name("state", k)),
                  ProfileTable{r, {"Q", "N", "phi1", "psi2"}, {s.Q_nodes().f, s.N, s.Phi1, s.psi2_nodes().f}});
    json step = {{"eps", st.eps},
                 {"l", s.l},
                 {"iterations", st.iterations},
                 {"residual", st.residual},
                 {"norms", norms_json(st.norms)}};
    if (st.eps > 0.0) {
      auto pf = reconstruct_physical(s, sol.eta, sol.units);
      save_profiles(join(dir, index_name("physical", k)),
                    ProfileTable{r, {"lambda", "nu", "phi1", "phi2"}, {pf.lambda.f, pf.nu.f, pf.Phi1.f, pf.Phi2.f}});
      step["physical"] = {{"omega", pf.omega},
                          {"adm_mass_observable", pf.adm_mass_observable},
                          {"unscaled_residual", pf.residuals.sup()},
                          {"norm_flat", pf.norm_flat},
                          {"norm_curved", pf.norm_curved}};
    }
    steps.push_back(step);
  }
  json j = {{"schema_version", 1},
            {"eta", sol.eta},
            {"delta", res.delta},
            {"units", {{"hbar", sol.units.hbar}, {"m", sol.units.m}, {"G", sol.units.G}}},
            {"stalled", res.stalled},
            {"stall_eps", res.stall_eps},
            {"stall_reason", res.stall_reason},
            {"steps", steps},
            {"slope", slope_json(res.slope)}};
  write_json(join(dir, "run.json"), j);
  return res;
}

SlopeFit run_convergence_stage(const std::string& run_dir, const std::string& out_dir) {
  json j = read_json(join(run_dir, "run.json"));
  std::vector<ContinuationStep> steps;
  try {
    for (const auto& s : j.at("steps")) {
      ContinuationStep st;
      st.eps = s.at("eps").get<double>();
      const auto& n = s.at("norms");
      st.norms.l_diff = n.at("l").get<double>();
      st.norms.Q = n.at("Q").get<double>();
      st.norms.N = n.at("N").get<double>();
      st.norms.Phi1 = n.at("Phi1").get<double>();
      st.norms.psi2 = n.at("psi2").get<double>();
      steps.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw io_error("malformed-json", "run.json: " + std::string(e.what()));
  }
  make_dir(out_dir);
  std::string csv = "eps,total,Q,N,Phi1,psi2\n";
  for (const auto& s : steps) {
    csv += format_double(s.eps) + "," + format_double(s.norms.total()) + "," + format_double(s.norms.Q) + "," +
           format_double(s.norms.N) + "," + format_double(s.norms.Phi1) + "," + format_double(s.norms.psi2) + "\n";
  }
  atomic_write(join(out_dir, "convergence.csv"), csv);
  auto fit = fit_slopes(steps);
  write_json(join(out_dir, "slopes.json"), slope_json(fit));
  return fit;
}

RunManifest run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  const std::string out = cfg.out;
  make_dir(out);
  atomic_write(join(out, "config.txt"), cfg.to_text());

  RunManifest man;
  man.config_text = cfg.to_text();
  man.stages = {{"solve-choquard", "not-run", ""},
                {"spectrum", "not-run", ""},
                {"continue", "not-run", ""},
                {"convergence", "not-run", ""}};
  auto run = [&](std::size_t k, const std::function<std::string()>& body) {
    if (man.exit_code != 0) return;
    try {
      man.stages[k].status = body();
    } catch (const Error& e) {
      man.stages[k].status = "failed";
      man.stages[k].message = e.what();
      man.exit_code = e.exit_code();
    }
  };

  std::optional<ChoquardSolution> sol;
  run(0, [&] {
    sol = run_choquard_stage(cfg, join(out, "choquard"));
    return "completed";
  });
  run(1, [&] {
    run_spectrum_stage(cfg, std::nullopt, join(out, "spectrum.json"));
    return "completed";
  });
  bool continued = false;
  run(2, [&] {
    if (cfg.steps == 0) return "skipped";
    auto res = run_continue_stage(cfg, *sol, join(out, "continue"));
    continued = true;
    if (res.stalled)
      throw numerical_error("continuation-stall",
                            "stalled at eps = " + format_double(res.stall_eps) + ": " + res.stall_reason);
    return "completed";
  });
  run(3, [&] {
    if (!continued) return "skipped";
    run_convergence_stage(join(out, "continue"), out);
    return "completed";
  });

  std::vector<std::string> paths;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    std::string rel = fs::relative(e.path(), out).generic_string();
    if (rel == "manifest.json" || rel.ends_with(".tmp")) continue;
    paths.push_back(rel);
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    std::string full = join(out, p);
    man.files.push_back({p, sha256_file(full), fs::file_size(full)});
  }
  atomic_write(join(out, "manifest.json"), man.to_json());
  return man;
}

bool verify_manifest(const std::string& dir, std::string* problem) {
  auto fail = [&](const std::string& why) {
    if (problem) *problem = why;
    return false;
  };
  json j;
  try {
    j = read_json(join(dir, "manifest.json"));
    for (const auto& f : j.at("files")) {
      std::string p = f.at("path").get<std::string>();
      std::string full = join(dir, p);
      if (!fs::exists(full)) return fail("missing file " + p);
      if (sha256_file(full) != f.at("sha256").get<std::string>()) return fail("digest mismatch for " + p);
    }
  } catch (const json::exception& e) {
    return fail(e.what());
  } catch (const Error& e) {
    return fail(e.what());
  }
  return true;
}

}  // namespace diracstar
