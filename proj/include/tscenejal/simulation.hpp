#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tscenejal/config.hpp"
#include "tscenejal/sampler.hpp"

namespace tscenejal {

// Ground truth plus the stand-in predictor's output for a synthetic pool.
struct SyntheticPool {
  std::vector<Scene> ground_truth;
  std::vector<Scene> predictions;  // same order and ids as ground_truth
};

// Pool from config.pool with its seed replaced by `seed`; predictions use
// config.noise and per-scene streams of the same seed.
SyntheticPool make_synthetic_pool(const EngineConfig& config, std::uint64_t seed);

// Predictions under `noise` for every scene of `ground_truth`.
std::vector<Scene> predict_pool(const std::vector<Scene>& ground_truth, const NoiseModel& noise,
                                const EngineConfig& config, std::uint64_t seed);

struct StrategyOutcome {
  Strategy strategy = Strategy::random;
  RoundsResult rounds;
  std::vector<std::string> selected;  // all ids picked across rounds, in order
  std::optional<double> category_kl;  // revealed class histogram vs uniform
  double mean_similarity = 0.0;       // sampled pairwise similarity of revealed scenes
  double mean_uncertainty = 0.0;      // mean predicted uncertainty of the picks
  std::vector<std::size_t> class_histogram;
};

// Runs config.rounds rounds of each strategy from the same initial state
// (config.initial_labeled random scenes, seeded).
std::vector<StrategyOutcome> simulate_strategies(const EngineConfig& config, const SyntheticPool& pool,
                                                 const std::vector<Strategy>& strategies, std::uint64_t seed,
                                                 std::size_t jobs = 1);

std::string format_comparison_csv(const std::vector<StrategyOutcome>& outcomes, const ClassCatalog& catalog);
std::string format_final_summary_csv(const std::vector<StrategyOutcome>& outcomes);

}  // namespace tscenejal
