#include <cstdio>
#include <deque>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "diracstar/config.hpp"
#include "diracstar/pipeline.hpp"
#include "diracstar/profile_io.hpp"

using namespace diracstar;

namespace {

struct FlagBinding {
  std::string key;
  std::string value;
  CLI::Option* opt = nullptr;
};

struct Flags {
  std::deque<FlagBinding> items;

  void add(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
    items.push_back({key, "", nullptr});
    items.back().opt = app->add_option(name, items.back().value, help);
  }
  void apply(RunConfig& cfg) const {
    for (const auto& b : items)
      if (b.opt->count() > 0) set_config_key(cfg, b.key, b.value);
  }
};

std::string fmt(double x) { return format_double(x); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Choquard ground states and the Einstein-Dirac branch near the Newtonian limit"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--set", sets, "override a configuration key, key=value (repeatable)");
  app.set_version_flag("--version", tool_version);

  Flags common;
  auto* choq = app.add_subcommand("solve-choquard", "solve the normalized ground state");
  std::string choq_out = "profiles.csv", choq_summary = "summary.json";
  common.add(choq, "--grid-n", "n", "number of grid nodes");
  common.add(choq, "--r-max", "r_max", "outer radius");
  common.add(choq, "--stretch", "stretch", "grid stretch exponent");
  common.add(choq, "--tol", "polish_tol", "plug-back residual tolerance");
  choq->add_option("--out", choq_out, "profile CSV (r, phi, u)");
  choq->add_option("--summary", choq_summary, "summary JSON");

  auto* spec = app.add_subcommand("spectrum", "spectrum of the linearized operator");
  std::string spec_in, spec_out = "spectrum.json";
  spec->add_option("--in", spec_in, "directory holding profiles.csv and summary.json")->required();
  common.add(spec, "--refinements", "refinements", "number of refinement levels");
  spec->add_option("--out", spec_out, "output JSON file");

  auto* cont = app.add_subcommand("continue", "continuation in eps from the Newtonian limit point");
  std::string cont_out = "run";
  common.add(cont, "--eps-min", "eps_min", "first eps of the geometric schedule");
  common.add(cont, "--eps-max", "eps_max", "last eps of the geometric schedule");
  common.add(cont, "--steps", "steps", "schedule length");
  common.add(cont, "--grid-n", "n", "number of grid nodes");
  common.add(cont, "--r-max", "r_max", "outer radius");
  common.add(cont, "--tol", "newton_tol", "Newton residual tolerance");
  common.add(cont, "--delta", "delta", "exponential weight in the norm report");
  cont->add_option("--out", cont_out, "run directory");

  auto* conv = app.add_subcommand("convergence", "slopes of the norm report of a continuation run");
  std::string conv_in, conv_out;
  conv->add_option("--in,--run-dir", conv_in, "run directory written by continue")->required();
  conv->add_option("--out", conv_out, "output directory (default: the run directory)");

  auto* pipe = app.add_subcommand("pipeline", "solve-choquard, spectrum, continue and convergence in order");
  common.add(pipe, "--out", "out", "run directory");
  common.add(pipe, "--grid-n", "n", "number of grid nodes");
  common.add(pipe, "--r-max", "r_max", "outer radius");
  common.add(pipe, "--eps-max", "eps_max", "last eps of the schedule");
  common.add(pipe, "--steps", "steps", "schedule length");
  common.add(pipe, "--refinements", "refinements", "spectrum refinement levels");
  common.add(pipe, "--seed", "seed", "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    apply_process_environment(cfg);
    for (const auto& s : sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw config_error("syntax", "--set expects key=value");
      set_config_key(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    common.apply(cfg);
    cfg.validate();

    if (choq->parsed()) {
      auto sol = solve_choquard(RadialGrid::stretched(cfg.n, cfg.r_max, cfg.stretch), cfg.units,
                                choquard_controls(cfg));
      save_choquard(sol, choq_out, choq_summary);
      std::cout << "eta " << fmt(sol.eta) << "\nenergy " << fmt(sol.energy) << "\ndecay_rate " << fmt(sol.decay_rate)
                << "\nresidual " << fmt(sol.canonical.residual_sup) << "\n";
    } else if (spec->parsed()) {
      auto sol = load_choquard(spec_in);
      auto rep = run_spectrum_stage(cfg, sol, spec_out);
      std::cout << "negative_count " << rep.negative_count << "\nmin_abs_eigenvalue " << fmt(rep.min_abs_eigenvalue)
                << "\n";
    } else if (cont->parsed()) {
      auto sol = run_choquard_stage(cfg, (std::filesystem::path(cont_out) / "choquard").string());
      auto res = run_continue_stage(cfg, sol, cont_out);
      for (const auto& st : res.steps)
        std::cout << "eps " << fmt(st.eps) << " iterations " << st.iterations << " residual " << fmt(st.residual)
                  << "\n";
      std::cout << "slope " << fmt(res.slope.total) << "\n";
      if (res.stalled) {
        std::cerr << "continuation stalled at eps " << fmt(res.stall_eps) << ": " << res.stall_reason << "\n";
        return 3;
      }
    } else if (conv->parsed()) {
      auto fit = run_convergence_stage(conv_in, conv_out.empty() ? conv_in : conv_out);
      std::cout << "slope " << fmt(fit.total) << "\n";
    } else if (pipe->parsed()) {
      auto man = run_pipeline(cfg);
      for (const auto& s : man.stages)
        std::cout << s.name << " " << s.status << (s.message.empty() ? "" : " (" + s.message + ")") << "\n";
      return man.exit_code;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
