#include <gtest/gtest.h>

#include <cmath>

#include "tscenejal/entropy.hpp"
#include "tscenejal/errors.hpp"

namespace tscenejal {
namespace {

ScoredDetection det(std::string cls, double conf) { return {std::move(cls), conf, Box3D{}, std::nullopt}; }

class EntropyTest : public ::testing::Test {
 protected:
  ClassCatalog catalog = ClassCatalog::kitti_default();
  EntropyConfig cfg;
};

TEST_F(EntropyTest, FilteredCountsApplyThreshold) {
  Scene s{"s", {det("Car", 0.9), det("Car", 0.1), det("Pedestrian", 0.5)}};
  EXPECT_EQ(filtered_class_counts(s, catalog, cfg), (std::vector<std::size_t>{1, 1, 0}));
  cfg.tau = 0.0;
  EXPECT_EQ(filtered_class_counts(s, catalog, cfg), (std::vector<std::size_t>{2, 1, 0}));
}

TEST_F(EntropyTest, ThresholdIsInclusive) {
  Scene s{"s", {det("Car", 0.3)}};
  EXPECT_EQ(filtered_class_counts(s, catalog, cfg)[0], 1u);
}

TEST_F(EntropyTest, EmptySceneCountsAndEntropyAreZero) {
  Scene s{"s", {}};
  EXPECT_EQ(filtered_class_counts(s, catalog, cfg), (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(category_entropy(s, catalog, cfg), 0.0);
}

TEST_F(EntropyTest, SingleClassIsZero) {
  const std::size_t counts[] = {1, 0, 0};
  EXPECT_LE(std::abs(entropy_from_counts(counts, cfg.zeta)), 1e-12);
}

TEST_F(EntropyTest, UniformCountsGiveLogC) {
  const std::size_t counts[] = {2, 2, 2};
  EXPECT_NEAR(entropy_from_counts(counts, cfg.zeta), std::log(3.0), 1e-9);
}

TEST_F(EntropyTest, ThreeToOneSplit) {
  // -(0.75 ln 0.75 + 0.25 ln 0.25)
  const std::size_t counts[] = {3, 1, 0};
  EXPECT_NEAR(entropy_from_counts(counts, cfg.zeta), 0.5623351446188083, 1e-9);
}

TEST_F(EntropyTest, CarWithSubThresholdNoiseScoresZero) {
  Scene s{"s", {det("Car", 0.95), det("Pedestrian", 0.2), det("Cyclist", 0.12), det("Pedestrian", 0.29)}};
  EXPECT_LE(category_entropy(s, catalog, cfg), 1e-9);
  cfg.tau = 0.0;
  EXPECT_GT(category_entropy(s, catalog, cfg), 0.5);
}

TEST_F(EntropyTest, RankOrdersByDescendingEntropy) {
  std::vector<Scene> scenes{
      Scene{"a", {det("Car", 1), det("Pedestrian", 1)}},                      // ln 2
      Scene{"b", {det("Car", 1)}},                                            // 0
      Scene{"c", {det("Car", 1), det("Car", 1), det("Car", 1), det("Cyclist", 1)}},  // 0.5623
  };
  EXPECT_EQ(rank_by_entropy(scenes, catalog, cfg, 2), (std::vector<std::string>{"a", "c"}));
}

TEST_F(EntropyTest, RankTiesBreakByAscendingId) {
  std::vector<Scene> scenes{Scene{"z", {det("Car", 1), det("Cyclist", 1)}},
                            Scene{"m", {det("Car", 1), det("Pedestrian", 1)}}};
  EXPECT_EQ(rank_by_entropy(scenes, catalog, cfg, 2), (std::vector<std::string>{"m", "z"}));
}

TEST_F(EntropyTest, RankAllIsPermutationAndTooManyThrows) {
  std::vector<Scene> scenes{Scene{"a", {}}, Scene{"b", {}}, Scene{"c", {}}};
  EXPECT_EQ(rank_by_entropy(scenes, catalog, cfg, 3).size(), 3u);
  EXPECT_THROW(rank_by_entropy(scenes, catalog, cfg, 4), InvalidArgument);
}

TEST_F(EntropyTest, ConfigValidation) {
  cfg.tau = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.tau = 0.3;
  cfg.zeta = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

}  // namespace
}  // namespace tscenejal
