#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tscenejal/core_model.hpp"
#include "tscenejal/diagnostics.hpp"
#include "tscenejal/entropy.hpp"
#include "tscenejal/kitti_io.hpp"
#include "tscenejal/sampler.hpp"
#include "tscenejal/scene_graph.hpp"
#include "tscenejal/synth.hpp"
#include "tscenejal/uncertainty.hpp"

namespace tscenejal {

// Every tunable of the engine. `entropy.tau` is the single confidence filter
// and is copied into the kernel and uncertainty configs.
struct EngineConfig {
  ClassCatalog catalog = ClassCatalog::kitti_default();
  AnchorTable anchors = AnchorTable::kitti_default();
  EntropyConfig entropy;
  KernelConfig kernel;
  UncertaintyConfig uncertainty;
  StagePlan plan;
  std::size_t rounds = 3;
  DiagConfig diag;
  UnknownClassPolicy unknown_class = UnknownClassPolicy::skip;
  PoolSpec pool;
  NoiseModel noise;
  double learning_schedule = 0.0;  // 0 disables noise shrinking with labeled count
  std::size_t initial_labeled = 0;

  void validate() const;
  MetricConfigs metric_configs(std::size_t jobs) const;
  SelectionContext selection_context(std::size_t jobs) const;
};

using ConfigValues = std::map<std::string, std::string, std::less<>>;

// "key = value" lines; '#' starts a comment; blank lines ignored.
ConfigValues parse_config_text(std::string_view text);

// Keys understood for a given class list (anchor.<class> depends on it).
std::vector<std::string> known_config_keys(const std::vector<std::string>& classes);

// Applies values over the defaults. Unknown keys and malformed values throw
// InvalidArgument.
EngineConfig build_engine_config(const ConfigValues& values);

inline constexpr std::string_view kEnvPrefix = "TSCENEJAL_";

// Environment variable name for a key: "kernel.gamma" -> "TSCENEJAL_KERNEL_GAMMA".
std::string env_var_for_key(std::string_view key);

// File values, then environment overrides for known keys, then `overrides`.
EngineConfig load_engine_config(const std::optional<std::filesystem::path>& file, const ConfigValues& overrides,
                                bool use_environment = true);

// Canonical key = value dump of a configuration.
std::string format_engine_config(const EngineConfig& config);

}  // namespace tscenejal
