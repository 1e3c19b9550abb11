#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tscenejal/core_model.hpp"

namespace tscenejal {

// Synthetic pool layout. Scenes are split into `redundancy_groups` contiguous
// runs; every scene of a run is a jittered copy of the run's template layout.
struct PoolSpec {
  std::size_t n_scenes = 1000;
  std::vector<double> class_mix{0.9, 0.05, 0.05};  // one entry per catalog class
  std::size_t objects_min = 2;
  std::size_t objects_max = 8;
  double spatial_extent = 60.0;        // meters, max object range
  std::size_t redundancy_groups = 1000;
  double duplicate_jitter = 0.3;       // meters, position noise between near-duplicates
  std::uint64_t rng_seed = 0;

  void validate(const ClassCatalog& catalog) const;
};

// Stand-in predictor noise.
struct NoiseModel {
  double confidence_noise = 0.4;           // confidence = exp(-|N(0, confidence_noise)|)
  double position_noise_per_meter = 0.02;  // metric variance growth per meter of range
  double base_variance = 0.05;             // metric variance at range 0 (m^2)
  double false_positive_rate = 1.0;        // Poisson mean per scene
  double misclass_rate = 0.05;
  std::size_t mixture_components = 3;
  double mean_spread = 0.5;                // component mean offsets, in residual std units

  void validate() const;

  // Every parameter that adds noise multiplied by `factor` in [0, 1].
  NoiseModel scaled(double factor) const;

  // All-zero noise with a single mixture component.
  static NoiseModel noiseless();
};

std::string scene_id_for_index(std::size_t index);

// Ground-truth scenes (confidence 1, no mixtures), ids "000000", "000001", ...
std::vector<Scene> generate_pool(const PoolSpec& spec, const ClassCatalog& catalog, const AnchorTable& anchors);

// Noisy detections with mixture parameters for one ground-truth scene. Draws
// only from `rng`.
Scene simulate_predictions(const Scene& ground_truth, const NoiseModel& noise, const ClassCatalog& catalog,
                           const AnchorTable& anchors, std::mt19937_64& rng);

// Per-scene stream derived from (seed, scene index, purpose) so scenes can be
// generated independently and in any order.
std::mt19937_64 scene_rng(std::uint64_t seed, std::size_t scene_index, std::uint32_t purpose);

// Residual means the predictor would regress for `box` against `anchor`:
// offsets to a 0.16 m anchor grid over the diagonal (x, y) and height (z), log
// size ratios (w, h, l) and yaw relative to the nearest anchor rotation.
std::array<double, kBoxDims> box_residuals(const Box3D& box, const Anchor& anchor);

}  // namespace tscenejal
