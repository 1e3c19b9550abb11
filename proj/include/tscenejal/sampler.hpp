#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tscenejal/core_model.hpp"
#include "tscenejal/entropy.hpp"
#include "tscenejal/kitti_io.hpp"
#include "tscenejal/scene_graph.hpp"
#include "tscenejal/uncertainty.hpp"

namespace tscenejal {

enum class Metric { entropy, similarity, uncertainty };

std::string_view metric_name(Metric m);
Metric metric_from_name(std::string_view name);

// Stage order and shrink factors of the joint selector. Stage sizes are
// floor(k1 * n_r), floor(k2 * n_r) and n_r.
struct StagePlan {
  std::array<Metric, 3> order{Metric::entropy, Metric::similarity, Metric::uncertainty};
  double k1 = 3.0;
  double k2 = 2.5;
  std::size_t n_r = 1;

  void validate() const;
  std::array<std::size_t, 3> stage_sizes() const;

  // Plan whose first stage takes exactly `pool_size` scenes, with k1 and k2
  // scaled by the same factor. Returns *this when the pool is large enough.
  StagePlan degraded_for(std::size_t pool_size) const;
};

// "E,S,U" style order string.
std::array<Metric, 3> parse_stage_order(std::string_view text);
std::string format_stage_order(const std::array<Metric, 3>& order);

struct MetricConfigs {
  EntropyConfig entropy;
  KernelConfig kernel;
  UncertaintyConfig uncertainty;
  std::size_t jobs = 1;
};

// Counters filled by the selectors.
struct SelectionStats {
  std::array<std::size_t, 3> stage_sizes{};
  std::size_t kernel_evaluations = 0;
  std::size_t entropy_sorts = 0;        // full sorts performed by the entropy stage
  std::size_t entropy_sorted_items = 0;  // elements in those sorts
  bool degraded = false;
};

// Greedy max-min selection over 1 - S. Starts from the scene least similar to
// the scene with the largest similarity row sum. Ties go to the smaller id.
// Output is in selection order.
std::vector<std::string> farthest_sampling(std::span<const std::string> pool_ids,
                                           const SimilarityMatrix& similarity, std::size_t k);

// Index form of farthest_sampling.
std::vector<std::size_t> farthest_sampling_indices(std::span<const std::string> pool_ids,
                                                   const SimilarityMatrix& similarity, std::size_t k);

// Three successive filters in plan.order. Requires |unlabeled| >= floor(k1 * n_r)
// and mixture parameters on every filtered detection when the uncertainty
// stage runs.
std::vector<std::string> three_stage_select(std::span<const Scene> unlabeled, const StagePlan& plan,
                                            const MetricConfigs& configs, const ClassCatalog& catalog,
                                            const AnchorTable& anchors, SelectionStats* stats = nullptr);

enum class Strategy { random, entropy_only, fs_only, uncertainty_only, tscenejal };

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);
std::vector<Strategy> all_strategies();

struct SelectionContext {
  StagePlan plan;
  MetricConfigs configs;
  ClassCatalog catalog = ClassCatalog::kitti_default();
  AnchorTable anchors = AnchorTable::kitti_default();
};

// Picks plan.n_r ids from `unlabeled` with the given strategy. The fs-only
// baseline runs farthest sampling over a random candidate set of
// floor(k1 * n_r) scenes. Random choices draw from `rng`.
std::vector<std::string> select_with_strategy(Strategy strategy, std::span<const Scene> unlabeled,
                                              const SelectionContext& ctx, std::mt19937_64& rng,
                                              SelectionStats* stats = nullptr);

using Predictor = std::function<Scene(const std::string& id)>;
using Oracle = std::function<Scene(const std::string& id)>;

struct RoundReport {
  std::size_t round = 0;
  bool degraded = false;
  std::array<std::size_t, 3> stage_sizes{};
  std::size_t kernel_evaluations = 0;
  std::vector<std::string> selected;
  double selected_entropy = 0.0;         // class entropy of the revealed labels
  double mean_similarity = 0.0;          // mean pairwise similarity of revealed scenes
  double mean_uncertainty = 0.0;         // mean predicted scene uncertainty
  std::vector<std::size_t> class_counts;  // revealed objects per catalog class
};

struct RoundsResult {
  RoundState state;
  std::vector<RoundReport> reports;
  std::map<std::string, Scene> revealed;  // oracle output per selected id
};

// Runs `rounds` selection rounds on top of `state`. Each round predicts every
// unlabeled scene, selects plan.n_r ids, reveals them through the oracle and
// moves them to the labeled set. A throwing predictor or oracle aborts the round
// and leaves the previous state untouched (the exception propagates).
RoundsResult run_al_rounds(Strategy strategy, const SelectionContext& ctx, std::size_t rounds,
                           const Predictor& predictor, const Oracle& oracle, RoundState state);

// Fresh state: `initial` random ids labeled (seeded), the rest unlabeled.
RoundState initial_round_state(std::vector<std::string> pool_ids, std::size_t initial, std::size_t budget,
                               std::uint64_t seed);

// Deterministic stream for (seed, round); used for every per-round random draw.
std::mt19937_64 round_rng(std::uint64_t seed, std::size_t round);

// CSV with one row per round report.
std::string format_round_reports_csv(const std::vector<RoundReport>& reports, const ClassCatalog& catalog);

}  // namespace tscenejal
