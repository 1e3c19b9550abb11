#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tscenejal/config.hpp"
#include "tscenejal/sampler.hpp"

namespace tscenejal::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct GlobalOptions {
  std::optional<std::filesystem::path> config_file;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path out = "out";
  ConfigValues overrides;  // --set key=value
  bool use_environment = true;

  EngineConfig load_config() const;
};

// <out>/predictions/<id>.txt + <id>.mdn and <out>/ground_truth/<id>.txt.
void cmd_synth(const GlobalOptions& opts);

// entropy|uncertainty: <out>/scores_<metric>.csv (scene_id,score sorted by id);
// similarity: <out>/similarity_matrix.csv.
void cmd_score(const GlobalOptions& opts, const std::filesystem::path& pool_dir, Metric metric);

struct SelectOptions {
  std::filesystem::path pool_dir;
  std::filesystem::path state_path;
  bool init = false;
  std::size_t n0 = 0;
  std::optional<std::size_t> budget;  // default: plan.rounds * plan.n_r
};

// --init writes a fresh state; otherwise runs one joint-selection round and
// writes <out>/selected_round_<r>.txt, <out>/round_<r>/ reports and the state.
void cmd_select(const GlobalOptions& opts, const SelectOptions& select);

// <out>/<strategy>/rounds.csv + state.json, <out>/comparison.csv, <out>/final_summary.csv.
void cmd_simulate(const GlobalOptions& opts, const std::vector<Strategy>& strategies);

// Diagnostics for a pool or for the ids listed in `selection_file`.
void cmd_stats(const GlobalOptions& opts, const std::filesystem::path& pool_dir,
               const std::optional<std::filesystem::path>& selection_file);

int exit_code_for(const std::exception& e);

// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace tscenejal::cli
