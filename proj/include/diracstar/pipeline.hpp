#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diracstar/choquard.hpp"
#include "diracstar/config.hpp"
#include "diracstar/einstein_dirac.hpp"
#include "diracstar/linearized.hpp"

namespace diracstar {

inline constexpr const char* tool_version = "diracstar 0.1.0";

struct StageStatus {
  std::string name;
  std::string status;  // completed, skipped, failed, not-run
  std::string message;
};

struct ManifestFile {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_text;
  std::string version = tool_version;
  std::vector<StageStatus> stages;
  std::vector<ManifestFile> files;
  int exit_code = 0;

  std::string to_json() const;
  bool completed() const;
};

ChoquardControls choquard_controls(const RunConfig& cfg);

// dir/profiles.csv (r, phi, u) and dir/summary.json
ChoquardSolution run_choquard_stage(const RunConfig& cfg, const std::string& dir);
void save_choquard(const ChoquardSolution& sol, const std::string& dir);
void save_choquard(const ChoquardSolution& sol, const std::string& profiles_csv, const std::string& summary_json);
// grid, profiles, eta and units; cell derivatives from node differences
ChoquardSolution load_choquard(const std::string& dir);
ChoquardSolution load_choquard(const std::string& profiles_csv, const std::string& summary_json);

// level 0 is `level0` when given, otherwise a fresh solve on cfg.spectrum_n nodes
SpectrumReport run_spectrum_stage(const RunConfig& cfg, const std::optional<ChoquardSolution>& level0,
                                  const std::string& out_json);

// state_<idx>.csv, physical_<idx>.csv and run.json in dir
ContinuationResult run_continue_stage(const RunConfig& cfg, const ChoquardSolution& sol, const std::string& dir);

// reads run_dir/run.json, writes out_dir/convergence.csv and out_dir/slopes.json
SlopeFit run_convergence_stage(const std::string& run_dir, const std::string& out_dir);

RunManifest run_pipeline(const RunConfig& cfg);

// every listed file exists with the recorded digest
bool verify_manifest(const std::string& dir, std::string* problem = nullptr);

}  // namespace diracstar
