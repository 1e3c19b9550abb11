#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "test_support.hpp"
#include "tscenejal/errors.hpp"
#include "tscenejal/sampler.hpp"
#include "tscenejal/synth.hpp"

namespace tscenejal {
namespace {

SimilarityMatrix matrix(std::vector<std::vector<double>> rows) {
  SimilarityMatrix m;
  m.size = rows.size();
  for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  return m;
}

TEST(FarthestSampling, ThreePointExample) {
  const auto s = matrix({{1, .9, .1}, {.9, 1, .2}, {.1, .2, 1}});
  const std::vector<std::string> ids{"id0", "id1", "id2"};
  // Row sums 2.0, 2.1, 1.3: hub is id1, least similar to it is id2 (0.2).
  // Next: min dissimilarity to {id2} is 0.9 for id0 and 0.8 for id1.
  EXPECT_EQ(farthest_sampling(ids, s, 2), (std::vector<std::string>{"id2", "id0"}));
}

TEST(FarthestSampling, KOneIsInitialPoint) {
  const auto s = matrix({{1, .9, .1}, {.9, 1, .2}, {.1, .2, 1}});
  const std::vector<std::string> ids{"id0", "id1", "id2"};
  EXPECT_EQ(farthest_sampling(ids, s, 1), (std::vector<std::string>{"id2"}));
}

TEST(FarthestSampling, FullPoolIsPermutation) {
  std::mt19937_64 rng(7);
  const auto d = testing::random_metric(rng, 9);
  SimilarityMatrix s;
  s.size = 9;
  for (const auto& row : d)
    for (double v : row) s.values.push_back(1.0 - v);
  std::vector<std::string> ids;
  for (int i = 0; i < 9; ++i) ids.push_back("s" + std::to_string(i));
  auto out = farthest_sampling(ids, s, 9);
  std::sort(out.begin(), out.end());
  EXPECT_EQ(out, ids);
  EXPECT_THROW(farthest_sampling(ids, s, 10), InvalidArgument);
}

TEST(FarthestSampling, TiesGoToSmallerId) {
  const auto s = matrix({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  // Hub is a (all row sums tie); least similar to a among the rest is b.
  EXPECT_EQ(farthest_sampling(ids, s, 3), (std::vector<std::string>{"b", "a", "c"}));
}

TEST(FarthestSampling, HalfOptimalOnSmallMetrics) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6 + trial % 5;
    const auto d = testing::random_metric(rng, n);
    SimilarityMatrix s;
    s.size = n;
    for (const auto& row : d)
      for (double v : row) s.values.push_back(1.0 - v);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::string(1, static_cast<char>('a' + i)));
    for (std::size_t k = 2; k <= 4; ++k) {
      const auto picked = farthest_sampling_indices(ids, s, k);
      double worst = 1e9;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) worst = std::min(worst, d[picked[i]][picked[j]]);
      EXPECT_GE(worst, 0.5 * testing::best_min_pairwise(d, k) - 1e-12);
    }
  }
}

TEST(StagePlan, SizesFloorWithDefaults) {
  StagePlan p;
  p.n_r = 2;
  EXPECT_EQ(p.stage_sizes(), (std::array<std::size_t, 3>{6, 5, 2}));
  p.n_r = 7;
  EXPECT_EQ(p.stage_sizes(), (std::array<std::size_t, 3>{21, 17, 7}));
  p.n_r = 200;
  EXPECT_EQ(p.stage_sizes(), (std::array<std::size_t, 3>{600, 500, 200}));
}

TEST(StagePlan, ValidationAndOrderParsing) {
  StagePlan p;
  p.k1 = 2.0;
  p.k2 = 2.5;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = StagePlan{};
  p.n_r = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_EQ(parse_stage_order("U,S,E"),
            (std::array<Metric, 3>{Metric::uncertainty, Metric::similarity, Metric::entropy}));
  EXPECT_EQ(format_stage_order(parse_stage_order("entropy,similarity,uncertainty")), "entropy,similarity,uncertainty");
  EXPECT_THROW(parse_stage_order("E,E,U"), InvalidArgument);
  EXPECT_THROW(parse_stage_order("E,S"), InvalidArgument);
}

TEST(StagePlan, DegradedPlanConsumesWholePool) {
  StagePlan p;
  p.n_r = 4;  // 12, 10, 4
  const auto d = p.degraded_for(9);
  EXPECT_EQ(d.stage_sizes()[0], 9u);
  EXPECT_LE(d.stage_sizes()[1], 9u);
  EXPECT_GE(d.stage_sizes()[1], 4u);
  EXPECT_EQ(d.stage_sizes()[2], 4u);
  EXPECT_NEAR(d.k1 / d.k2, p.k1 / p.k2, 1e-12);
  EXPECT_EQ(p.degraded_for(12).k1, p.k1);
}

class ThreeStageTest : public ::testing::Test {
 protected:
  ClassCatalog catalog = ClassCatalog::kitti_default();
  AnchorTable anchors = AnchorTable::kitti_default();
  MetricConfigs configs;

  std::vector<Scene> pool(std::size_t n, std::uint64_t seed) {
    PoolSpec spec;
    spec.n_scenes = n;
    spec.redundancy_groups = n;
    spec.rng_seed = seed;
    const auto gt = generate_pool(spec, catalog, anchors);
    std::vector<Scene> out;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      auto rng = scene_rng(seed, i, 3);
      out.push_back(simulate_predictions(gt[i], NoiseModel{}, catalog, anchors, rng));
    }
    return out;
  }
};

TEST_F(ThreeStageTest, StageSizesForTwo) {
  StagePlan plan;
  plan.n_r = 2;
  SelectionStats stats;
  const auto out = three_stage_select(pool(10, 1), plan, configs, catalog, anchors, &stats);
  EXPECT_EQ(stats.stage_sizes, (std::array<std::size_t, 3>{6, 5, 2}));
  EXPECT_EQ(out.size(), 2u);
  EXPECT_NE(out[0], out[1]);
  EXPECT_EQ(stats.kernel_evaluations, 21u);  // 6 * 7 / 2
  EXPECT_EQ(stats.entropy_sorts, 1u);
  EXPECT_EQ(stats.entropy_sorted_items, 10u);
}

TEST_F(ThreeStageTest, DominantSceneSurvivesEveryStage) {
  auto scenes = pool(12, 2);
  Scene star{"star", {}};
  const char* classes[] = {"Car", "Pedestrian", "Cyclist"};
  for (int i = 0; i < 3; ++i) {
    std::array<GaussianMixture1D, kBoxDims> dims;
    dims.fill(GaussianMixture1D{{0.5, 0.5}, {-3.0, 3.0}, {50.0, 50.0}});
    star.detections.push_back(ScoredDetection{classes[i], 1.0, Box3D{5.0 * (i + 1), 0, 0, 1, 1, 1, 0}, MixtureParams(dims)});
  }
  scenes.push_back(star);
  StagePlan plan;
  plan.n_r = 2;
  const auto out = three_stage_select(scenes, plan, configs, catalog, anchors);
  EXPECT_NE(std::find(out.begin(), out.end(), "star"), out.end());
}

TEST_F(ThreeStageTest, OrderChangesOutputButNotSizes) {
  const auto scenes = pool(40, 3);
  StagePlan esu;
  esu.n_r = 4;
  StagePlan use = esu;
  use.order = parse_stage_order("U,S,E");
  SelectionStats a, b;
  const auto x = three_stage_select(scenes, esu, configs, catalog, anchors, &a);
  const auto y = three_stage_select(scenes, use, configs, catalog, anchors, &b);
  EXPECT_EQ(a.stage_sizes, b.stage_sizes);
  EXPECT_EQ(x.size(), 4u);
  EXPECT_EQ(y.size(), 4u);
  EXPECT_NE(x, y);
}

TEST_F(ThreeStageTest, InsufficientPoolAndMissingMixtures) {
  StagePlan plan;
  plan.n_r = 4;
  try {
    three_stage_select(pool(11, 4), plan, configs, catalog, anchors);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("12"), std::string::npos);
  }
  auto scenes = pool(12, 4);
  scenes[3].detections.push_back(ScoredDetection{"Car", 0.9, Box3D{}, std::nullopt});
  EXPECT_THROW(three_stage_select(scenes, plan, configs, catalog, anchors), DataError);
}

TEST_F(ThreeStageTest, StrategiesReturnDistinctSubsets) {
  const auto scenes = pool(30, 5);
  SelectionContext ctx;
  ctx.plan.n_r = 3;
  std::set<std::string> all;
  for (const auto& s : scenes) all.insert(s.id);
  for (Strategy st : all_strategies()) {
    std::mt19937_64 rng(1);
    SelectionStats stats;
    const auto out = select_with_strategy(st, scenes, ctx, rng, &stats);
    ASSERT_EQ(out.size(), 3u) << strategy_name(st);
    EXPECT_EQ(std::set<std::string>(out.begin(), out.end()).size(), 3u);
    for (const auto& id : out) EXPECT_TRUE(all.contains(id));
    EXPECT_LE(stats.kernel_evaluations, 9u * 9u);
  }
  EXPECT_THROW(strategy_from_name("greedy"), InvalidArgument);
  EXPECT_EQ(strategy_from_name("fs-only"), Strategy::fs_only);
}

class RoundsTest : public ThreeStageTest {
 protected:
  std::vector<Scene> predictions = pool(20, 6);
  Predictor predictor = [this](const std::string& id) {
    return predictions.at(static_cast<std::size_t>(std::stoi(id)));
  };
  Oracle oracle = [this](const std::string& id) {
    Scene s = predictions.at(static_cast<std::size_t>(std::stoi(id)));
    for (auto& d : s.detections) d.mixture.reset();
    return s;
  };
  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& s : predictions) out.push_back(s.id);
    return out;
  }
};

TEST_F(RoundsTest, AccountingAfterTwoRounds) {
  SelectionContext ctx;
  ctx.plan.n_r = 2;
  const auto state = initial_round_state(ids(), 4, 4, 11);
  EXPECT_EQ(state.labeled_ids.size(), 4u);
  EXPECT_EQ(state.unlabeled_ids.size(), 16u);
  const auto res = run_al_rounds(Strategy::tscenejal, ctx, 2, predictor, oracle, state);
  EXPECT_EQ(res.state.labeled_ids.size(), 8u);
  EXPECT_EQ(res.state.unlabeled_ids.size(), 12u);
  EXPECT_EQ(res.state.round_index, 2u);
  ASSERT_EQ(res.reports.size(), 2u);
  std::set<std::string> seen(state.labeled_ids.begin(), state.labeled_ids.end());
  for (const auto& r : res.reports) {
    EXPECT_EQ(r.stage_sizes, (std::array<std::size_t, 3>{6, 5, 2}));
    for (const auto& id : r.selected) EXPECT_TRUE(seen.insert(id).second) << id;
  }
  EXPECT_NO_THROW(res.state.validate());
}

TEST_F(RoundsTest, ZeroRoundsAndBudgetOverrunAreErrors) {
  SelectionContext ctx;
  ctx.plan.n_r = 2;
  const auto state = initial_round_state(ids(), 0, 3, 1);
  EXPECT_THROW(run_al_rounds(Strategy::random, ctx, 0, predictor, oracle, state), InvalidArgument);
  EXPECT_THROW(run_al_rounds(Strategy::random, ctx, 2, predictor, oracle, state), DataError);
}

TEST_F(RoundsTest, SameSeedSameReport) {
  SelectionContext ctx;
  ctx.plan.n_r = 3;
  const auto state = initial_round_state(ids(), 2, 9, 5);
  for (Strategy st : all_strategies()) {
    const auto a = run_al_rounds(st, ctx, 3, predictor, oracle, state);
    const auto b = run_al_rounds(st, ctx, 3, predictor, oracle, state);
    EXPECT_EQ(format_round_reports_csv(a.reports, catalog), format_round_reports_csv(b.reports, catalog));
    EXPECT_EQ(a.state, b.state);
  }
}

TEST_F(RoundsTest, FailingOracleLeavesStateUntouched) {
  SelectionContext ctx;
  ctx.plan.n_r = 2;
  const auto state = initial_round_state(ids(), 0, 10, 5);
  Oracle broken = [](const std::string&) -> Scene { throw DataError("oracle offline"); };
  EXPECT_THROW(run_al_rounds(Strategy::tscenejal, ctx, 1, predictor, broken, state), DataError);
}

TEST_F(RoundsTest, LateRoundsDegradeToWholePool) {
  SelectionContext ctx;
  ctx.plan.n_r = 4;
  const auto state = initial_round_state(ids(), 0, 20, 5);
  const auto res = run_al_rounds(Strategy::tscenejal, ctx, 4, predictor, oracle, state);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_FALSE(res.reports[r].degraded) << r;
  ASSERT_TRUE(res.reports[3].degraded);
  EXPECT_EQ(res.reports[3].stage_sizes[0], 8u);
  EXPECT_EQ(res.reports[3].stage_sizes[2], 4u);
}

}  // namespace
}  // namespace tscenejal
