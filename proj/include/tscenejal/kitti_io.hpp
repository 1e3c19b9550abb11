#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tscenejal/core_model.hpp"

namespace tscenejal {

// One line of a KITTI object label file:
//   type truncated occluded alpha left top right bottom h w l x y z rotation_y [score]
struct KittiLabelLine {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = -10.0;
  std::array<double, 4> bbox2d{};
  double h = 0.0;
  double w = 0.0;
  double l = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double rotation_y = 0.0;
  std::optional<double> score;
};

enum class UnknownClassPolicy { skip, error };

// Throws ParseError (with `line_number`) on a malformed line.
KittiLabelLine parse_kitti_line(std::string_view line, std::size_t line_number = 0);

// Location is taken as-is as the box center in the ego frame (no calibration
// transform). "DontCare" lines are dropped; a missing score means confidence 1.
Scene parse_label_text(std::string_view text, std::string scene_id, const ClassCatalog& catalog,
                       UnknownClassPolicy policy = UnknownClassPolicy::skip);

// Scene id is the file stem.
Scene parse_label_file(const std::filesystem::path& path, const ClassCatalog& catalog,
                       UnknownClassPolicy policy = UnknownClassPolicy::skip);

// Sixteen fields per detection, reals printed with 6 decimals. Fields the
// scene does not carry are written as truncated 0, occluded 0, alpha -10 and an
// all-zero 2D box.
std::string serialize_label_file(const Scene& scene);

// Mixture sidecar (".mdn"): a JSON document
//   {"version": 1, "scene": "<id>", "detections": [
//      {"index": i, "residuals": {"dx": {"weights": [...], "means": [...], "variances": [...]},
//                                 "dy": ..., "dz": ..., "dw": ..., "dh": ..., "dl": ..., "dtheta": ...}}]}
// with one entry per detection of the label file, in any order of "index".
Scene apply_mixture_sidecar(std::string_view text, Scene scene);
Scene load_mixture_sidecar(const std::filesystem::path& path, Scene scene);
// Every detection must carry mixture parameters.
std::string serialize_mixture_sidecar(const Scene& scene);

// Active-learning bookkeeping persisted between `select` invocations.
struct RoundState {
  inline static constexpr int kVersion = 1;

  std::size_t round_index = 0;
  std::vector<std::string> labeled_ids;
  std::vector<std::string> unlabeled_ids;
  std::size_t budget_total = 0;
  std::vector<std::vector<std::string>> per_round_selected;
  std::uint64_t rng_seed = 0;

  // Disjoint id sets, per-round history length == round_index, selections within budget.
  void validate() const;
  std::size_t spent() const;

  bool operator==(const RoundState&) const = default;
};

std::string round_state_to_text(const RoundState& state);
RoundState round_state_from_text(std::string_view text);
void save_round_state(const RoundState& state, const std::filesystem::path& path);
RoundState load_round_state(const std::filesystem::path& path);

// Prediction pool directory: <id>.txt label files with optional <id>.mdn sidecars.
// Scenes are returned sorted by id.
std::vector<Scene> load_pool_dir(const std::filesystem::path& dir, const ClassCatalog& catalog,
                                 bool with_sidecars, UnknownClassPolicy policy = UnknownClassPolicy::skip);

// Expected .mdn sidecar paths that do not exist for the label files in `dir`, sorted.
std::vector<std::filesystem::path> missing_sidecars(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace tscenejal
