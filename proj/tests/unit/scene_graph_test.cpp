#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "tscenejal/errors.hpp"
#include "tscenejal/scene_graph.hpp"

namespace tscenejal {
namespace {

using testing::ego_mirror_self_kernel;
using testing::random_graph;
using testing::walk_enumeration_kernel;

ScoredDetection at(std::string cls, double x, double y, double z, double conf = 1.0) {
  return {std::move(cls), conf, Box3D{x, y, z, 1.6, 3.9, 1.5, 0.0}, std::nullopt};
}

class SceneGraphTest : public ::testing::Test {
 protected:
  ClassCatalog catalog = ClassCatalog::kitti_default();
  KernelConfig cfg;
};

TEST_F(SceneGraphTest, EmptySceneBuildsEgoMirrorPair) {
  const auto g = build_scene_graph(Scene{"e", {at("Car", 1, 1, 1, 0.1)}}, catalog, cfg);
  ASSERT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.labels()[0], catalog.ego_index());
  EXPECT_EQ(g.labels()[1], catalog.mirror_index());
  EXPECT_EQ(g.weight(0, 1), 1.0);
  EXPECT_EQ(g.weight(1, 0), 1.0);
}

TEST_F(SceneGraphTest, SingleObjectAtDistanceFive) {
  const auto g = build_scene_graph(Scene{"s", {at("Car", 3, 0, 4)}}, catalog, cfg);
  ASSERT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.labels()[1], 0);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), 0.2);
  EXPECT_DOUBLE_EQ(g.weight(1, 0), 0.2);
}

TEST_F(SceneGraphTest, CoincidentObjectsUseClampedDistance) {
  const auto g = build_scene_graph(Scene{"s", {at("Car", 5, 5, 0), at("Pedestrian", 5, 5, 0)}}, catalog, cfg);
  ASSERT_EQ(g.node_count(), 3u);
  EXPECT_DOUBLE_EQ(g.weight(1, 2), 10.0);
  EXPECT_DOUBLE_EQ(g.weight(2, 1), 10.0);
}

TEST_F(SceneGraphTest, FullyConnectedWithoutSelfLoops) {
  const auto g = build_scene_graph(
      Scene{"s", {at("Car", 1, 2, 0), at("Car", -4, 2, 0), at("Cyclist", 7, 7, 1)}}, catalog, cfg);
  ASSERT_EQ(g.node_count(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(g.out_degree(i), 3u);
    EXPECT_FALSE(g.has_edge(i, i));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(g.weight(i, j), g.weight(j, i));
  }
}

TEST_F(SceneGraphTest, GraphRejectsSelfLoopsAndNegativeWeights) {
  EXPECT_THROW(SceneGraph({0, 1}, {1.0, 1.0, 1.0, 0.0}), InvalidArgument);
  EXPECT_THROW(SceneGraph({0, 1}, {0.0, -1.0, 1.0, 0.0}), InvalidArgument);
  EXPECT_THROW(SceneGraph({0, 1}, {0.0, 1.0}), InvalidArgument);
}

TEST_F(SceneGraphTest, EgoMirrorSelfKernelMatchesClosedForm) {
  const auto g = build_scene_graph(Scene{"e", {}}, catalog, cfg);
  const double expected = ego_mirror_self_kernel(cfg.gamma);
  EXPECT_NEAR(kernel_brute_force(g, g, cfg, 40), expected, 1e-8 * expected);
  EXPECT_NEAR(marginalized_kernel(g, g, cfg), expected, 10 * cfg.tol);
  KernelConfig tight = cfg;
  tight.tol = 1e-15;
  EXPECT_NEAR(marginalized_kernel(g, g, tight), expected, 1e-12 * expected);
}

TEST_F(SceneGraphTest, DisjointLabelsGiveZeroAtEveryLength) {
  SceneGraph a({0, 1}, {0, 1, 1, 0});
  SceneGraph b({2, 3}, {0, 2, 2, 0});
  EXPECT_EQ(marginalized_kernel(a, b, cfg), 0.0);
  for (int len : {1, 2, 10, 40}) EXPECT_EQ(kernel_brute_force(a, b, cfg, len), 0.0);
}

TEST_F(SceneGraphTest, BruteForceLengthOneClosedForm) {
  std::mt19937_64 rng(3);
  const auto a = random_graph(rng, 4, 2, 0.7);
  const auto b = random_graph(rng, 3, 2, 0.7);
  double expected = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (a.labels()[i] != b.labels()[j]) continue;
      const double stop_a = a.out_degree(i) == 0 ? 1.0 : cfg.gamma;
      const double stop_b = b.out_degree(j) == 0 ? 1.0 : cfg.gamma;
      expected += (1.0 / 4.0) * (1.0 / 3.0) * stop_a * stop_b * 0.5;
    }
  EXPECT_NEAR(kernel_brute_force(a, b, cfg, 1), expected, 1e-15);
}

TEST_F(SceneGraphTest, BruteForceAgreesWithExplicitWalkEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_graph(rng, 2 + trial % 3, 2, 0.6);
    const auto b = random_graph(rng, 2 + (trial / 3) % 3, 2, 0.6);
    for (int len : {1, 3, 5}) {
      const double oracle = walk_enumeration_kernel(a, b, cfg, static_cast<std::size_t>(len));
      EXPECT_NEAR(kernel_brute_force(a, b, cfg, len), oracle, 1e-14 + 1e-12 * oracle)
          << "trial " << trial << " len " << len;
    }
  }
}

TEST_F(SceneGraphTest, BruteForceIsMonotoneInLength) {
  std::mt19937_64 rng(5);
  const auto a = random_graph(rng, 5, 2, 0.8);
  const auto b = random_graph(rng, 4, 2, 0.8);
  double prev = 0.0;
  for (int len = 1; len <= 40; ++len) {
    const double k = kernel_brute_force(a, b, cfg, len);
    EXPECT_GE(k, prev);
    prev = k;
  }
}

TEST_F(SceneGraphTest, BruteForceBoundsAreEnforced) {
  SceneGraph big(std::vector<int>(9, 0), std::vector<double>(81, 0.0));
  EXPECT_THROW(kernel_brute_force(big, big, cfg, 5), InvalidArgument);
  SceneGraph small({0}, {0.0});
  EXPECT_THROW(kernel_brute_force(small, small, cfg, 0), InvalidArgument);
  EXPECT_THROW(kernel_brute_force(small, small, cfg, 41), InvalidArgument);
}

TEST_F(SceneGraphTest, FixedPointMatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_graph(rng, 1 + trial % 5, 3, 0.7);
    const auto b = random_graph(rng, 1 + (trial / 5) % 5, 3, 0.7);
    const double exact = marginalized_kernel(a, b, cfg);
    const double series = kernel_brute_force(a, b, cfg, 40);
    EXPECT_LE(std::abs(exact - series), 1e-6 * std::max(exact, 1e-300)) << "trial " << trial;
  }
}

TEST_F(SceneGraphTest, KernelIsExactlySymmetric) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_graph(rng, 1 + trial % 6, 3, 0.5);
    const auto b = random_graph(rng, 1 + (trial * 7) % 6, 3, 0.5);
    EXPECT_EQ(marginalized_kernel(a, b, cfg), marginalized_kernel(b, a, cfg));
  }
}

TEST_F(SceneGraphTest, ResidualsShrinkGeometrically) {
  const auto g = build_scene_graph(
      Scene{"s", {at("Car", 1, 2, 0), at("Car", -4, 2, 0), at("Cyclist", 7, 7, 1), at("Car", 0, 9, 0)}}, catalog,
      cfg);
  KernelTrace trace;
  marginalized_kernel(g, g, cfg, &trace);
  ASSERT_GE(trace.residuals.size(), 3u);
  EXPECT_EQ(static_cast<std::size_t>(trace.iterations), trace.residuals.size());
  EXPECT_LT(trace.residuals.back(), cfg.tol);
  for (std::size_t i = 1; i < trace.residuals.size(); ++i)
    if (trace.residuals[i - 1] > 0.0) EXPECT_LE(trace.residuals[i], (1.0 - cfg.gamma) * trace.residuals[i - 1] * (1 + 1e-9));
}

TEST_F(SceneGraphTest, NonConvergenceCarriesResidual) {
  cfg.max_iter = 2;
  const auto g = build_scene_graph(Scene{"s", {at("Car", 1, 2, 0), at("Car", -4, 2, 0)}}, catalog, cfg);
  try {
    marginalized_kernel(g, g, cfg);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), cfg.tol);
  }
}

TEST_F(SceneGraphTest, SelfSimilarityIsOne) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 20; ++i) {
    const auto s = testing::random_scene(rng, catalog, "s", 6, false);
    EXPECT_NEAR(similarity(s, s, catalog, cfg), 1.0, 1e-9);
  }
}

// Rotation about the vertical axis through the ego keeps every pairwise
// distance, ego included.
TEST_F(SceneGraphTest, RigidRotationAboutEgoKeepsSimilarityAtOne) {
  Scene a{"a", {at("Car", 10, 0, 0), at("Pedestrian", 0, 10, 0), at("Car", -6, -8, 0)}};
  Scene b{"b", {}};
  const double c = std::cos(0.7), s = std::sin(0.7);
  for (const auto& d : a.detections)
    b.detections.push_back(at(d.class_label, c * d.box.x - s * d.box.y, s * d.box.x + c * d.box.y, d.box.z));
  EXPECT_NEAR(similarity(a, b, catalog, cfg), 1.0, 1e-6);
}

TEST_F(SceneGraphTest, SharedClassesAreMoreSimilarThanDisjointOnes) {
  Scene cars{"a", {at("Car", 10, 0, 0), at("Car", 0, 10, 0)}};
  Scene cars2{"b", {at("Car", 11, 0, 0), at("Car", 0, 9, 0)}};
  Scene people{"c", {at("Pedestrian", 10, 0, 0), at("Cyclist", 0, 10, 0)}};
  EXPECT_LT(similarity(cars, people, catalog, cfg), similarity(cars, cars2, catalog, cfg));
}

TEST_F(SceneGraphTest, NormalizedSimilarityGuardsSelfKernel) {
  EXPECT_THROW(normalized_similarity(0.1, 0.0, 1.0), Error);
  EXPECT_DOUBLE_EQ(normalized_similarity(2.0, 4.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(normalized_similarity(3.0, 4.0, 1.0), 1.0);  // clamped
}

TEST_F(SceneGraphTest, PairwiseMatrixSingleScene) {
  std::vector<Scene> scenes{Scene{"a", {at("Car", 1, 1, 0)}}};
  const auto m = pairwise_similarity_matrix(scenes, catalog, cfg);
  ASSERT_EQ(m.size, 1u);
  EXPECT_EQ(m.at(0, 0), 1.0);
}

TEST_F(SceneGraphTest, PairwiseMatrixSymmetricPsdAndCounted) {
  std::mt19937_64 rng(31);
  std::vector<Scene> scenes;
  for (int i = 0; i < 5; ++i) scenes.push_back(testing::random_scene(rng, catalog, std::to_string(i), 5, false));
  for (std::size_t jobs : {1u, 3u}) {
    const auto m = pairwise_similarity_matrix(scenes, catalog, cfg, jobs);
    EXPECT_EQ(m.kernel_evaluations, 15u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(m.at(i, i), 1.0);
      for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_EQ(m.at(i, j), m.at(j, i));
        EXPECT_GE(m.at(i, j), 0.0);
        EXPECT_LE(m.at(i, j), 1.0);
      }
    }
    EXPECT_GE(testing::min_eigenvalue(m.values, m.size), -1e-8);
  }
}

TEST_F(SceneGraphTest, ParallelMatrixMatchesSerial) {
  std::mt19937_64 rng(37);
  std::vector<Scene> scenes;
  for (int i = 0; i < 9; ++i) scenes.push_back(testing::random_scene(rng, catalog, std::to_string(i), 5, false));
  EXPECT_EQ(pairwise_similarity_matrix(scenes, catalog, cfg, 1).values,
            pairwise_similarity_matrix(scenes, catalog, cfg, 4).values);
}

TEST_F(SceneGraphTest, ConfigValidation) {
  cfg.gamma = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = KernelConfig{};
  cfg.min_dist = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

}  // namespace
}  // namespace tscenejal
