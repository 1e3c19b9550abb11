#include "tscenejal/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "tscenejal/diagnostics.hpp"
#include "tscenejal/errors.hpp"
#include "tscenejal/synth.hpp"

namespace tscenejal {

namespace {
constexpr std::uint32_t kPredictionStream = 3;
}

std::vector<Scene> predict_pool(const std::vector<Scene>& ground_truth, const NoiseModel& noise,
                                const EngineConfig& config, std::uint64_t seed) {
  std::vector<Scene> out;
  out.reserve(ground_truth.size());
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    auto rng = scene_rng(seed, i, kPredictionStream);
    out.push_back(simulate_predictions(ground_truth[i], noise, config.catalog, config.anchors, rng));
  }
  return out;
}

SyntheticPool make_synthetic_pool(const EngineConfig& config, std::uint64_t seed) {
  PoolSpec spec = config.pool;
  spec.rng_seed = seed;
  SyntheticPool pool;
  pool.ground_truth = generate_pool(spec, config.catalog, config.anchors);
  pool.predictions = predict_pool(pool.ground_truth, config.noise, config, seed);
  return pool;
}

std::vector<StrategyOutcome> simulate_strategies(const EngineConfig& config, const SyntheticPool& pool,
                                                 const std::vector<Strategy>& strategies, std::uint64_t seed,
                                                 std::size_t jobs) {
  if (strategies.empty()) throw InvalidArgument("no strategies requested");
  std::map<std::string, std::size_t> index;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < pool.ground_truth.size(); ++i) {
    index[pool.ground_truth[i].id] = i;
    ids.push_back(pool.ground_truth[i].id);
  }
  const std::size_t budget = config.rounds * config.plan.n_r;
  const RoundState initial = initial_round_state(ids, config.initial_labeled, budget, seed);
  const SelectionContext ctx = config.selection_context(jobs);
  const Oracle oracle = [&](const std::string& id) { return pool.ground_truth.at(index.at(id)); };

  std::vector<StrategyOutcome> outcomes;
  for (Strategy strategy : strategies) {
    StrategyOutcome out;
    out.strategy = strategy;
    if (config.learning_schedule > 0.0) {
      // Predictions get less noisy as the labeled set grows; one round at a time.
      RoundState state = initial;
      for (std::size_t r = 0; r < config.rounds; ++r) {
        const double labeled_share =
            static_cast<double>(state.labeled_ids.size()) / static_cast<double>(std::max<std::size_t>(ids.size(), 1));
        const NoiseModel noise = config.noise.scaled(1.0 / (1.0 + config.learning_schedule * labeled_share));
        const Predictor predictor = [&](const std::string& id) {
          const std::size_t i = index.at(id);
          auto rng = scene_rng(seed, i, kPredictionStream);
          return simulate_predictions(pool.ground_truth[i], noise, config.catalog, config.anchors, rng);
        };
        RoundsResult step = run_al_rounds(strategy, ctx, 1, predictor, oracle, state);
        state = step.state;
        out.rounds.reports.insert(out.rounds.reports.end(), step.reports.begin(), step.reports.end());
        out.rounds.revealed.merge(step.revealed);
      }
      out.rounds.state = state;
    } else {
      const Predictor predictor = [&](const std::string& id) { return pool.predictions.at(index.at(id)); };
      out.rounds = run_al_rounds(strategy, ctx, config.rounds, predictor, oracle, initial);
    }

    std::vector<Scene> revealed;
    double unc = 0.0;
    for (const auto& report : out.rounds.reports) {
      out.selected.insert(out.selected.end(), report.selected.begin(), report.selected.end());
      unc += report.mean_uncertainty * static_cast<double>(report.selected.size());
    }
    for (const auto& id : out.selected) revealed.push_back(out.rounds.revealed.at(id));
    out.mean_uncertainty = out.selected.empty() ? 0.0 : unc / static_cast<double>(out.selected.size());

    DiagInputs diag{config.catalog, config.anchors, config.entropy, config.kernel, config.uncertainty,
                    config.diag,    seed,           jobs};
    const DiagReport report = selection_report(revealed, pool.ground_truth, diag);
    out.category_kl = report.category_kl;
    out.mean_similarity = report.similarity_mean;
    out.class_histogram = report.class_histogram;
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

std::string format_comparison_csv(const std::vector<StrategyOutcome>& outcomes, const ClassCatalog& catalog) {
  std::string out = "strategy,round,selected_entropy,mean_similarity,mean_uncertainty";
  for (const auto& c : catalog.classes()) out += ",count_" + c;
  out += "\n";
  for (const auto& o : outcomes)
    for (const auto& r : o.rounds.reports) {
      out += fmt::format("{},{},{:.9g},{:.9g},{:.9g}", strategy_name(o.strategy), r.round, r.selected_entropy,
                         r.mean_similarity, r.mean_uncertainty);
      for (std::size_t c : r.class_counts) out += fmt::format(",{}", c);
      out += "\n";
    }
  return out;
}

std::string format_final_summary_csv(const std::vector<StrategyOutcome>& outcomes) {
  std::string out = "strategy,selected,category_kl,mean_similarity,mean_uncertainty\n";
  for (const auto& o : outcomes)
    out += fmt::format("{},{},{},{:.9g},{:.9g}\n", strategy_name(o.strategy), o.selected.size(),
                       o.category_kl ? fmt::format("{:.9g}", *o.category_kl) : std::string("n/a"),
                       o.mean_similarity, o.mean_uncertainty);
  return out;
}

}  // namespace tscenejal
