#include "tscenejal/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tscenejal/detail/ranking.hpp"
#include "tscenejal/errors.hpp"

namespace tscenejal {

namespace {
// Guards floor(k * n_r) against products like 2.3333.. * 3 landing just below an integer.
constexpr double kFloorSlack = 1e-9;

std::size_t scaled_size(double k, std::size_t n_r) {
  return static_cast<std::size_t>(std::floor(k * static_cast<double>(n_r) + kFloorSlack));
}
}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::entropy: return "entropy";
    case Metric::similarity: return "similarity";
    case Metric::uncertainty: return "uncertainty";
  }
  return "?";
}

Metric metric_from_name(std::string_view name) {
  if (name == "entropy" || name == "E") return Metric::entropy;
  if (name == "similarity" || name == "S") return Metric::similarity;
  if (name == "uncertainty" || name == "U") return Metric::uncertainty;
  throw InvalidArgument(fmt::format("unknown metric '{}' (expected entropy|similarity|uncertainty)", name));
}

std::array<Metric, 3> parse_stage_order(std::string_view text) {
  std::vector<Metric> metrics;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(pos, end - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    metrics.push_back(metric_from_name(token));
    pos = end + 1;
  }
  if (metrics.size() != 3) throw InvalidArgument(fmt::format("stage order '{}' must name three metrics", text));
  std::array<Metric, 3> order{metrics[0], metrics[1], metrics[2]};
  std::set<Metric> distinct(order.begin(), order.end());
  if (distinct.size() != 3) throw InvalidArgument(fmt::format("stage order '{}' must be a permutation", text));
  return order;
}

std::string format_stage_order(const std::array<Metric, 3>& order) {
  return fmt::format("{},{},{}", metric_name(order[0]), metric_name(order[1]), metric_name(order[2]));
}

void StagePlan::validate() const {
  if (std::set<Metric>(order.begin(), order.end()).size() != 3)
    throw InvalidArgument("plan.order must be a permutation of entropy, similarity, uncertainty");
  if (n_r < 1) throw InvalidArgument("plan.n_r must be >= 1");
  if (!(k2 >= 1.0) || !(k1 >= k2) || !std::isfinite(k1))
    throw InvalidArgument(fmt::format("plan requires k1 >= k2 >= 1 (got k1={}, k2={})", k1, k2));
}

std::array<std::size_t, 3> StagePlan::stage_sizes() const {
  return {scaled_size(k1, n_r), scaled_size(k2, n_r), n_r};
}

StagePlan StagePlan::degraded_for(std::size_t pool_size) const {
  validate();
  if (pool_size >= stage_sizes()[0]) return *this;
  if (pool_size < n_r)
    throw DataError(fmt::format("unlabeled pool of {} scenes cannot supply {} selections", pool_size, n_r));
  StagePlan p = *this;
  const double scale = static_cast<double>(pool_size) / (k1 * static_cast<double>(n_r));
  p.k1 = static_cast<double>(pool_size) / static_cast<double>(n_r);
  p.k2 = std::clamp(k2 * scale, 1.0, p.k1);
  return p;
}

std::vector<std::size_t> farthest_sampling_indices(std::span<const std::string> ids, const SimilarityMatrix& s,
                                                   std::size_t k) {
  const std::size_t n = ids.size();
  if (s.size != n) throw InvalidArgument(fmt::format("similarity matrix is {}x{} for {} ids", s.size, s.size, n));
  if (k > n) throw InvalidArgument(fmt::format("cannot sample {} of {} scenes", k, n));
  if (k == 0) return {};

  auto better = [&](std::size_t a, double va, std::size_t b, double vb, bool larger) {
    if (va != vb) return larger ? va > vb : va < vb;
    return ids[a] < ids[b];
  };

  std::vector<double> row_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) row_sum[i] += s.at(i, j);
  std::size_t hub = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (better(i, row_sum[i], hub, row_sum[hub], true)) hub = i;

  std::size_t first = hub;
  if (n > 1) {
    first = hub == 0 ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == hub) continue;
      if (better(i, s.at(i, hub), first, s.at(first, hub), false)) first = i;
    }
  }

  std::vector<std::size_t> chosen{first};
  std::vector<bool> taken(n, false);
  taken[first] = true;
  std::vector<double> min_dissim(n);
  for (std::size_t i = 0; i < n; ++i) min_dissim[i] = 1.0 - s.at(i, first);

  while (chosen.size() < k) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || better(i, min_dissim[i], best, min_dissim[best], true)) best = i;
    }
    chosen.push_back(best);
    taken[best] = true;
    for (std::size_t i = 0; i < n; ++i) min_dissim[i] = std::min(min_dissim[i], 1.0 - s.at(i, best));
  }
  return chosen;
}

std::vector<std::string> farthest_sampling(std::span<const std::string> ids, const SimilarityMatrix& s, std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i : farthest_sampling_indices(ids, s, k)) out.push_back(ids[i]);
  return out;
}

namespace {

std::vector<Scene> pick(const std::vector<Scene>& scenes, const std::vector<std::string>& ids) {
  std::vector<Scene> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = std::find_if(scenes.begin(), scenes.end(), [&](const Scene& s) { return s.id == id; });
    out.push_back(*it);
  }
  return out;
}

std::vector<std::string> ids_of(std::span<const Scene> scenes) {
  std::vector<std::string> ids;
  ids.reserve(scenes.size());
  for (const auto& s : scenes) ids.push_back(s.id);
  return ids;
}

void require_mixtures(std::span<const Scene> scenes, double tau) {
  std::vector<std::string> missing;
  for (const auto& s : scenes) {
    auto m = first_missing_mixture(s, tau);
    if (!m.empty()) missing.push_back(std::move(m));
  }
  if (!missing.empty())
    throw DataError(fmt::format("uncertainty stage needs mixture parameters; missing for {} detection(s), first: {}",
                                missing.size(), missing.front()));
}

std::vector<std::string> run_stage(Metric metric, const std::vector<Scene>& current, std::size_t size,
                                   const MetricConfigs& configs, const ClassCatalog& catalog,
                                   const AnchorTable& anchors, SelectionStats& stats) {
  switch (metric) {
    case Metric::entropy:
      ++stats.entropy_sorts;
      stats.entropy_sorted_items += current.size();
      return rank_by_entropy(current, catalog, configs.entropy, size);
    case Metric::similarity: {
      const auto m = pairwise_similarity_matrix(current, catalog, configs.kernel, configs.jobs);
      stats.kernel_evaluations += m.kernel_evaluations;
      const auto ids = ids_of(current);
      return farthest_sampling(ids, m, size);
    }
    case Metric::uncertainty:
      return rank_by_uncertainty(current, anchors, configs.uncertainty, size);
  }
  return {};
}

}  // namespace

std::vector<std::string> three_stage_select(std::span<const Scene> unlabeled, const StagePlan& plan,
                                            const MetricConfigs& configs, const ClassCatalog& catalog,
                                            const AnchorTable& anchors, SelectionStats* stats) {
  plan.validate();
  const auto sizes = plan.stage_sizes();
  if (unlabeled.size() < sizes[0])
    throw DataError(fmt::format("three-stage selection needs at least {} unlabeled scenes, got {}", sizes[0],
                                unlabeled.size()));
  require_mixtures(unlabeled, configs.uncertainty.tau);

  SelectionStats local;
  local.stage_sizes = sizes;
  std::vector<Scene> current(unlabeled.begin(), unlabeled.end());
  std::vector<std::string> chosen;
  for (std::size_t stage = 0; stage < 3; ++stage) {
    chosen = run_stage(plan.order[stage], current, sizes[stage], configs, catalog, anchors, local);
    current = pick(current, chosen);
  }
  if (stats) {
    stats->stage_sizes = local.stage_sizes;
    stats->kernel_evaluations += local.kernel_evaluations;
    stats->entropy_sorts += local.entropy_sorts;
    stats->entropy_sorted_items += local.entropy_sorted_items;
  }
  return chosen;
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::entropy_only: return "entropy-only";
    case Strategy::fs_only: return "fs-only";
    case Strategy::uncertainty_only: return "uncertainty-only";
    case Strategy::tscenejal: return "tscenejal";
  }
  return "?";
}

std::vector<Strategy> all_strategies() {
  return {Strategy::random, Strategy::entropy_only, Strategy::fs_only, Strategy::uncertainty_only,
          Strategy::tscenejal};
}

Strategy strategy_from_name(std::string_view name) {
  for (Strategy s : all_strategies())
    if (strategy_name(s) == name) return s;
  throw InvalidArgument(
      fmt::format("unknown strategy '{}' (valid: random, entropy-only, fs-only, uncertainty-only, tscenejal)", name));
}

std::vector<std::string> select_with_strategy(Strategy strategy, std::span<const Scene> unlabeled,
                                              const SelectionContext& ctx, std::mt19937_64& rng,
                                              SelectionStats* stats) {
  const StagePlan& plan = ctx.plan;
  plan.validate();
  if (unlabeled.size() < plan.n_r)
    throw DataError(fmt::format("need {} unlabeled scenes, only {} left", plan.n_r, unlabeled.size()));
  SelectionStats local;
  local.stage_sizes = {0, 0, plan.n_r};
  std::vector<std::string> out;
  switch (strategy) {
    case Strategy::random: {
      auto ids = ids_of(unlabeled);
      std::sort(ids.begin(), ids.end());
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(plan.n_r);
      out = std::move(ids);
      break;
    }
    case Strategy::entropy_only:
      ++local.entropy_sorts;
      local.entropy_sorted_items += unlabeled.size();
      out = rank_by_entropy(unlabeled, ctx.catalog, ctx.configs.entropy, plan.n_r);
      break;
    case Strategy::uncertainty_only:
      require_mixtures(unlabeled, ctx.configs.uncertainty.tau);
      out = rank_by_uncertainty(unlabeled, ctx.anchors, ctx.configs.uncertainty, plan.n_r);
      break;
    case Strategy::fs_only: {
      std::vector<std::size_t> idx(unlabeled.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(std::min(unlabeled.size(), plan.stage_sizes()[0]));
      std::sort(idx.begin(), idx.end());
      std::vector<Scene> candidates;
      for (std::size_t i : idx) candidates.push_back(unlabeled[i]);
      const auto m = pairwise_similarity_matrix(candidates, ctx.catalog, ctx.configs.kernel, ctx.configs.jobs);
      local.kernel_evaluations += m.kernel_evaluations;
      local.stage_sizes = {candidates.size(), plan.n_r, plan.n_r};
      out = farthest_sampling(ids_of(candidates), m, plan.n_r);
      break;
    }
    case Strategy::tscenejal:
      out = three_stage_select(unlabeled, plan, ctx.configs, ctx.catalog, ctx.anchors, &local);
      break;
  }
  if (stats) *stats = local;
  return out;
}

std::mt19937_64 round_rng(std::uint64_t seed, std::size_t round) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(round), 0x5ce7e5u};
  return std::mt19937_64(seq);
}

RoundState initial_round_state(std::vector<std::string> pool_ids, std::size_t initial, std::size_t budget,
                               std::uint64_t seed) {
  std::sort(pool_ids.begin(), pool_ids.end());
  if (std::adjacent_find(pool_ids.begin(), pool_ids.end()) != pool_ids.end())
    throw DataError("pool contains duplicate ids");
  if (initial > pool_ids.size())
    throw InvalidArgument(fmt::format("cannot label {} initial scenes from a pool of {}", initial, pool_ids.size()));
  auto rng = round_rng(seed, 0);
  std::vector<std::string> shuffled = pool_ids;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  RoundState state;
  state.rng_seed = seed;
  state.budget_total = budget;
  state.labeled_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(initial));
  std::sort(state.labeled_ids.begin(), state.labeled_ids.end());
  const std::set<std::string> labeled(state.labeled_ids.begin(), state.labeled_ids.end());
  for (const auto& id : pool_ids)
    if (!labeled.contains(id)) state.unlabeled_ids.push_back(id);
  state.validate();
  return state;
}

namespace {

double mean_offdiagonal(const SimilarityMatrix& m) {
  if (m.size < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size; ++i)
    for (std::size_t j = i + 1; j < m.size; ++j) sum += m.at(i, j);
  return sum / static_cast<double>(m.size * (m.size - 1) / 2);
}

}  // namespace

RoundsResult run_al_rounds(Strategy strategy, const SelectionContext& ctx, std::size_t rounds,
                           const Predictor& predictor, const Oracle& oracle, RoundState state) {
  if (rounds == 0) throw InvalidArgument("at least one round is required");
  state.validate();
  ctx.plan.validate();
  if (state.spent() + rounds * ctx.plan.n_r > state.budget_total)
    throw DataError(fmt::format("{} rounds of {} exceed the remaining budget of {}", rounds, ctx.plan.n_r,
                                state.budget_total - state.spent()));

  RoundsResult result;
  for (std::size_t r = 0; r < rounds; ++r) {
    RoundState next = state;
    const std::size_t round = next.round_index + 1;

    std::vector<Scene> predicted;
    predicted.reserve(next.unlabeled_ids.size());
    for (const auto& id : next.unlabeled_ids) predicted.push_back(predictor(id));

    SelectionContext round_ctx = ctx;
    round_ctx.plan = ctx.plan.degraded_for(predicted.size());
    const bool degraded = round_ctx.plan.k1 != ctx.plan.k1;
    if (degraded)
      spdlog::warn("round {}: only {} unlabeled scenes, stage sizes reduced to {}/{}/{}", round, predicted.size(),
                   round_ctx.plan.stage_sizes()[0], round_ctx.plan.stage_sizes()[1], round_ctx.plan.n_r);

    auto rng = round_rng(next.rng_seed, round);
    SelectionStats stats;
    const auto selected = select_with_strategy(strategy, predicted, round_ctx, rng, &stats);
    spdlog::info("{} round {}: stage sizes {} -> {} -> {} ({} kernel evaluations)", strategy_name(strategy), round,
                 stats.stage_sizes[0], stats.stage_sizes[1], stats.stage_sizes[2], stats.kernel_evaluations);

    std::vector<Scene> revealed;
    for (const auto& id : selected) revealed.push_back(oracle(id));

    RoundReport report;
    report.round = round;
    report.degraded = degraded;
    report.stage_sizes = stats.stage_sizes;
    report.kernel_evaluations = stats.kernel_evaluations;
    report.selected = selected;
    report.class_counts.assign(ctx.catalog.size(), 0);
    for (const auto& s : revealed) {
      const auto counts = filtered_class_counts(s, ctx.catalog, ctx.configs.entropy);
      for (std::size_t c = 0; c < counts.size(); ++c) report.class_counts[c] += counts[c];
    }
    report.selected_entropy = entropy_from_counts(report.class_counts, ctx.configs.entropy.zeta);
    report.mean_similarity =
        mean_offdiagonal(pairwise_similarity_matrix(revealed, ctx.catalog, ctx.configs.kernel, ctx.configs.jobs));
    double unc = 0.0;
    for (const auto& id : selected) {
      const auto& scene = *std::find_if(predicted.begin(), predicted.end(), [&](const Scene& s) { return s.id == id; });
      if (!first_missing_mixture(scene, ctx.configs.uncertainty.tau).empty()) {
        unc = std::numeric_limits<double>::quiet_NaN();
        break;
      }
      try {
        unc += scene_uncertainty(scene, ctx.anchors, ctx.configs.uncertainty);
      } catch (const SingularYawError&) {
        // excluded scene contributes nothing
      }
    }
    report.mean_uncertainty = selected.empty() ? 0.0 : unc / static_cast<double>(selected.size());

    const std::set<std::string> chosen(selected.begin(), selected.end());
    std::erase_if(next.unlabeled_ids, [&](const std::string& id) { return chosen.contains(id); });
    next.labeled_ids.insert(next.labeled_ids.end(), selected.begin(), selected.end());
    next.per_round_selected.push_back(selected);
    next.round_index = round;
    next.validate();

    for (auto& s : revealed) result.revealed[s.id] = std::move(s);
    result.reports.push_back(std::move(report));
    state = std::move(next);
  }
  result.state = std::move(state);
  return result;
}

std::string format_round_reports_csv(const std::vector<RoundReport>& reports, const ClassCatalog& catalog) {
  std::string out = "round,degraded,stage1,stage2,stage3,kernel_evaluations,selected_entropy,mean_similarity,"
                    "mean_uncertainty";
  for (const auto& c : catalog.classes()) out += ",count_" + c;
  out += ",selected\n";
  for (const auto& r : reports) {
    out += fmt::format("{},{},{},{},{},{},{:.9g},{:.9g},{:.9g}", r.round, r.degraded ? 1 : 0, r.stage_sizes[0],
                       r.stage_sizes[1], r.stage_sizes[2], r.kernel_evaluations, r.selected_entropy,
                       r.mean_similarity, r.mean_uncertainty);
    for (std::size_t c : r.class_counts) out += fmt::format(",{}", c);
    out += ",";
    for (std::size_t i = 0; i < r.selected.size(); ++i) out += (i ? ";" : "") + r.selected[i];
    out += "\n";
  }
  return out;
}

}  // namespace tscenejal
