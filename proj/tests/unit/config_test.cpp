#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "test_support.hpp"
#include "tscenejal/config.hpp"
#include "tscenejal/errors.hpp"

namespace tscenejal {
namespace {

TEST(ConfigText, ParsesKeyValueLines) {
  const auto v = parse_config_text("# comment\n\nkernel.gamma = 0.2  # trailing\n plan.order=U,S,E\n");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.at("kernel.gamma"), "0.2");
  EXPECT_EQ(v.at("plan.order"), "U,S,E");
}

TEST(ConfigText, LineWithoutEqualsIsAnError) {
  EXPECT_THROW(parse_config_text("kernel.gamma 0.2\n"), Error);
}

TEST(EngineConfigBuild, DefaultsMatchDocumentedValues) {
  const auto cfg = build_engine_config({});
  EXPECT_DOUBLE_EQ(cfg.entropy.tau, 0.3);
  EXPECT_DOUBLE_EQ(cfg.kernel.gamma, 0.1);
  EXPECT_DOUBLE_EQ(cfg.uncertainty.eta, 0.5);
  EXPECT_DOUBLE_EQ(cfg.plan.k1, 3.0);
  EXPECT_DOUBLE_EQ(cfg.plan.k2, 2.5);
  EXPECT_EQ(format_stage_order(cfg.plan.order), "entropy,similarity,uncertainty");
}

TEST(EngineConfigBuild, UnknownKeyIsRejected) {
  EXPECT_THROW(build_engine_config({{"kernel.gama", "0.2"}}), InvalidArgument);
}

TEST(EngineConfigBuild, MalformedAndOutOfRangeValues) {
  EXPECT_THROW(build_engine_config({{"kernel.gamma", "abc"}}), InvalidArgument);
  EXPECT_THROW(build_engine_config({{"kernel.gamma", "1.5"}}), InvalidArgument);
  EXPECT_THROW(build_engine_config({{"plan.order", "E,E,U"}}), InvalidArgument);
  EXPECT_THROW(build_engine_config({{"io.unknown_class", "maybe"}}), InvalidArgument);
}

TEST(EngineConfigBuild, TauIsSharedByAllMetrics) {
  const auto cfg = build_engine_config({{"entropy.tau", "0.55"}});
  EXPECT_DOUBLE_EQ(cfg.kernel.tau, 0.55);
  EXPECT_DOUBLE_EQ(cfg.uncertainty.tau, 0.55);
}

TEST(EngineConfigBuild, CustomClassesAndAnchors) {
  const auto cfg = build_engine_config({{"classes", "Car,Truck"}, {"anchor.Truck", "8, 2.5, 3"}});
  EXPECT_EQ(cfg.catalog.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.anchors.at("Truck").length, 8.0);
  EXPECT_DOUBLE_EQ(cfg.anchors.at("Car").length, AnchorTable::kitti_default().at("Car").length);
  EXPECT_EQ(cfg.pool.class_mix.size(), 2u);
  EXPECT_THROW(build_engine_config({{"classes", "Car,Truck"}}), InvalidArgument);  // Truck has no anchor
  EXPECT_THROW(build_engine_config({{"anchor.Car", "1, 2"}}), InvalidArgument);
}

TEST(EngineConfigBuild, FormattedConfigRoundTrips) {
  const auto cfg = build_engine_config({{"kernel.sigma", "0.75"}, {"plan.n_r", "7"}, {"synth.n_scenes", "40"}});
  const auto again = build_engine_config(parse_config_text(format_engine_config(cfg)));
  EXPECT_EQ(format_engine_config(again), format_engine_config(cfg));
  EXPECT_DOUBLE_EQ(again.kernel.sigma, 0.75);
  EXPECT_EQ(again.plan.n_r, 7u);
}

TEST(EnvOverrides, VariableNames) {
  EXPECT_EQ(env_var_for_key("kernel.gamma"), "TSCENEJAL_KERNEL_GAMMA");
  EXPECT_EQ(env_var_for_key("plan.n_r"), "TSCENEJAL_PLAN_N_R");
}

TEST(EnvOverrides, PrecedenceFileThenEnvThenExplicit) {
  const auto dir = testing::scratch_dir("config_env");
  const auto file = dir / "engine.cfg";
  std::ofstream(file) << "kernel.gamma = 0.2\nkernel.sigma = 2\n";
  ::setenv("TSCENEJAL_KERNEL_GAMMA", "0.3", 1);
  auto cfg = load_engine_config(file, {}, true);
  EXPECT_DOUBLE_EQ(cfg.kernel.gamma, 0.3);
  EXPECT_DOUBLE_EQ(cfg.kernel.sigma, 2.0);
  cfg = load_engine_config(file, {{"kernel.gamma", "0.4"}}, true);
  EXPECT_DOUBLE_EQ(cfg.kernel.gamma, 0.4);
  cfg = load_engine_config(file, {}, false);
  EXPECT_DOUBLE_EQ(cfg.kernel.gamma, 0.2);
  ::unsetenv("TSCENEJAL_KERNEL_GAMMA");
}

TEST(EnvOverrides, BadEnvironmentValueIsReported) {
  ::setenv("TSCENEJAL_PLAN_N_R", "many", 1);
  EXPECT_THROW(load_engine_config(std::nullopt, {}, true), InvalidArgument);
  ::unsetenv("TSCENEJAL_PLAN_N_R");
}

TEST(EngineConfigBuild, SelectionContextCarriesJobs) {
  const auto cfg = build_engine_config({});
  const auto ctx = cfg.selection_context(3);
  EXPECT_EQ(ctx.configs.jobs, 3u);
  EXPECT_EQ(ctx.plan.n_r, cfg.plan.n_r);
}

}  // namespace
}  // namespace tscenejal
