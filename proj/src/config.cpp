#include "tscenejal/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tscenejal/errors.hpp"

namespace tscenejal {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t end = s.find(',', pos);
    if (end == std::string_view::npos) end = s.size();
    out.emplace_back(trim(s.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out{};
  v = trim(v);
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw InvalidArgument(fmt::format("config '{}': '{}' is not a number", key, v));
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out{};
  v = trim(v);
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw InvalidArgument(fmt::format("config '{}': '{}' is not a non-negative integer", key, v));
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument(fmt::format("config '{}': '{}' is not a boolean", key, v));
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

const std::vector<std::string> kFixedKeys = {
    "classes", "ego_label", "mirror_label",
    "entropy.tau", "entropy.zeta",
    "kernel.gamma", "kernel.sigma", "kernel.tol", "kernel.max_iter", "kernel.min_dist",
    "uncertainty.eta",
    "plan.order", "plan.k1", "plan.k2", "plan.n_r", "plan.rounds", "plan.n0",
    "diag.squared_mean_term", "diag.n_pairs", "diag.histogram_bins",
    "io.unknown_class",
    "synth.n_scenes", "synth.class_mix", "synth.objects_min", "synth.objects_max", "synth.spatial_extent",
    "synth.redundancy_groups", "synth.duplicate_jitter",
    "noise.confidence_noise", "noise.position_noise_per_meter", "noise.base_variance",
    "noise.false_positive_rate", "noise.misclass_rate", "noise.components", "noise.mean_spread",
    "noise.learning_schedule",
};

}  // namespace

ConfigValues parse_config_text(std::string_view text) {
  ConfigValues values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    values[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return values;
}

std::vector<std::string> known_config_keys(const std::vector<std::string>& classes) {
  std::vector<std::string> keys = kFixedKeys;
  for (const auto& c : classes) keys.push_back("anchor." + c);
  return keys;
}

std::string env_var_for_key(std::string_view key) {
  std::string out(kEnvPrefix);
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void EngineConfig::validate() const {
  anchors.validate_covers(catalog);
  entropy.validate();
  kernel.validate();
  uncertainty.validate();
  plan.validate();
  if (rounds < 1) throw InvalidArgument("plan.rounds must be >= 1");
  if (diag.histogram_bins < 1) throw InvalidArgument("diag.histogram_bins must be >= 1");
  pool.validate(catalog);
  noise.validate();
  if (!(learning_schedule >= 0.0)) throw InvalidArgument("noise.learning_schedule must be >= 0");
}

MetricConfigs EngineConfig::metric_configs(std::size_t jobs) const {
  return MetricConfigs{entropy, kernel, uncertainty, jobs};
}

SelectionContext EngineConfig::selection_context(std::size_t jobs) const {
  return SelectionContext{plan, metric_configs(jobs), catalog, anchors};
}

EngineConfig build_engine_config(const ConfigValues& values) {
  EngineConfig cfg;
  std::vector<std::string> classes = cfg.catalog.classes();
  auto get = [&](std::string_view key) -> const std::string* {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };

  if (auto v = get("classes")) classes = split_list(*v);
  std::string ego = cfg.catalog.ego_label(), mirror = cfg.catalog.mirror_label();
  if (auto v = get("ego_label")) ego = *v;
  if (auto v = get("mirror_label")) mirror = *v;
  cfg.catalog = ClassCatalog(classes, ego, mirror);

  const auto keys = known_config_keys(classes);
  const std::set<std::string, std::less<>> known(keys.begin(), keys.end());
  for (const auto& [key, _] : values)
    if (!known.contains(key)) throw InvalidArgument(fmt::format("unknown config key '{}'", key));

  // Anchors: defaults for classes that have one, explicit values override.
  AnchorTable anchors;
  const AnchorTable defaults = AnchorTable::kitti_default();
  for (const auto& c : classes)
    if (defaults.contains(c)) anchors.set(c, defaults.at(c));
  for (const auto& c : classes) {
    if (auto v = get("anchor." + c)) {
      const auto dims = to_doubles("anchor." + c, *v);
      if (dims.size() != 3) throw InvalidArgument(fmt::format("anchor.{} needs 'length, width, height'", c));
      anchors.set(c, Anchor{dims[0], dims[1], dims[2]});
    }
  }
  cfg.anchors = anchors;

  if (auto v = get("entropy.tau")) cfg.entropy.tau = to_double("entropy.tau", *v);
  if (auto v = get("entropy.zeta")) cfg.entropy.zeta = to_double("entropy.zeta", *v);
  if (auto v = get("kernel.gamma")) cfg.kernel.gamma = to_double("kernel.gamma", *v);
  if (auto v = get("kernel.sigma")) cfg.kernel.sigma = to_double("kernel.sigma", *v);
  if (auto v = get("kernel.tol")) cfg.kernel.tol = to_double("kernel.tol", *v);
  if (auto v = get("kernel.max_iter")) cfg.kernel.max_iter = static_cast<int>(to_size("kernel.max_iter", *v));
  if (auto v = get("kernel.min_dist")) cfg.kernel.min_dist = to_double("kernel.min_dist", *v);
  if (auto v = get("uncertainty.eta")) cfg.uncertainty.eta = to_double("uncertainty.eta", *v);
  cfg.kernel.tau = cfg.entropy.tau;
  cfg.uncertainty.tau = cfg.entropy.tau;

  if (auto v = get("plan.order")) cfg.plan.order = parse_stage_order(*v);
  if (auto v = get("plan.k1")) cfg.plan.k1 = to_double("plan.k1", *v);
  if (auto v = get("plan.k2")) cfg.plan.k2 = to_double("plan.k2", *v);
  if (auto v = get("plan.n_r")) cfg.plan.n_r = to_size("plan.n_r", *v);
  if (auto v = get("plan.rounds")) cfg.rounds = to_size("plan.rounds", *v);
  if (auto v = get("plan.n0")) cfg.initial_labeled = to_size("plan.n0", *v);

  if (auto v = get("diag.squared_mean_term")) cfg.diag.squared_mean_term = to_bool("diag.squared_mean_term", *v);
  if (auto v = get("diag.n_pairs")) cfg.diag.n_pairs = to_size("diag.n_pairs", *v);
  if (auto v = get("diag.histogram_bins")) cfg.diag.histogram_bins = to_size("diag.histogram_bins", *v);

  if (auto v = get("io.unknown_class")) {
    if (*v == "skip") cfg.unknown_class = UnknownClassPolicy::skip;
    else if (*v == "error") cfg.unknown_class = UnknownClassPolicy::error;
    else throw InvalidArgument(fmt::format("io.unknown_class must be skip or error, got '{}'", *v));
  }

  if (classes.size() != cfg.pool.class_mix.size()) cfg.pool.class_mix.assign(classes.size(), 1.0 / classes.size());
  if (auto v = get("synth.n_scenes")) {
    cfg.pool.n_scenes = to_size("synth.n_scenes", *v);
    cfg.pool.redundancy_groups = cfg.pool.n_scenes;
  }
  if (auto v = get("synth.class_mix")) cfg.pool.class_mix = to_doubles("synth.class_mix", *v);
  if (auto v = get("synth.objects_min")) cfg.pool.objects_min = to_size("synth.objects_min", *v);
  if (auto v = get("synth.objects_max")) cfg.pool.objects_max = to_size("synth.objects_max", *v);
  if (auto v = get("synth.spatial_extent")) cfg.pool.spatial_extent = to_double("synth.spatial_extent", *v);
  if (auto v = get("synth.redundancy_groups")) cfg.pool.redundancy_groups = to_size("synth.redundancy_groups", *v);
  if (auto v = get("synth.duplicate_jitter")) cfg.pool.duplicate_jitter = to_double("synth.duplicate_jitter", *v);

  if (auto v = get("noise.confidence_noise")) cfg.noise.confidence_noise = to_double("noise.confidence_noise", *v);
  if (auto v = get("noise.position_noise_per_meter"))
    cfg.noise.position_noise_per_meter = to_double("noise.position_noise_per_meter", *v);
  if (auto v = get("noise.base_variance")) cfg.noise.base_variance = to_double("noise.base_variance", *v);
  if (auto v = get("noise.false_positive_rate"))
    cfg.noise.false_positive_rate = to_double("noise.false_positive_rate", *v);
  if (auto v = get("noise.misclass_rate")) cfg.noise.misclass_rate = to_double("noise.misclass_rate", *v);
  if (auto v = get("noise.components")) cfg.noise.mixture_components = to_size("noise.components", *v);
  if (auto v = get("noise.mean_spread")) cfg.noise.mean_spread = to_double("noise.mean_spread", *v);
  if (auto v = get("noise.learning_schedule")) cfg.learning_schedule = to_double("noise.learning_schedule", *v);

  cfg.validate();
  return cfg;
}

EngineConfig load_engine_config(const std::optional<std::filesystem::path>& file, const ConfigValues& overrides,
                                bool use_environment) {
  ConfigValues values;
  if (file) values = parse_config_text(read_text_file(*file));
  if (use_environment) {
    // Resolve the class list first so anchor.<class> variables are found.
    std::vector<std::string> classes = ClassCatalog::kitti_default().classes();
    if (const char* env = std::getenv(env_var_for_key("classes").c_str())) values["classes"] = env;
    if (auto it = overrides.find("classes"); it != overrides.end()) classes = split_list(it->second);
    else if (auto it2 = values.find("classes"); it2 != values.end()) classes = split_list(it2->second);
    for (const auto& key : known_config_keys(classes))
      if (const char* env = std::getenv(env_var_for_key(key).c_str())) values[key] = env;
  }
  for (const auto& [k, v] : overrides) values[k] = v;
  return build_engine_config(values);
}

std::string format_engine_config(const EngineConfig& c) {
  std::string out;
  auto line = [&](std::string_view k, const std::string& v) { out += fmt::format("{} = {}\n", k, v); };
  std::string classes;
  for (std::size_t i = 0; i < c.catalog.size(); ++i) classes += (i ? "," : "") + c.catalog.classes()[i];
  line("classes", classes);
  line("ego_label", c.catalog.ego_label());
  line("mirror_label", c.catalog.mirror_label());
  for (const auto& [name, a] : c.anchors.entries())
    line("anchor." + name, fmt::format("{}, {}, {}", a.length, a.width, a.height));
  line("entropy.tau", fmt::format("{}", c.entropy.tau));
  line("entropy.zeta", fmt::format("{}", c.entropy.zeta));
  line("kernel.gamma", fmt::format("{}", c.kernel.gamma));
  line("kernel.sigma", fmt::format("{}", c.kernel.sigma));
  line("kernel.tol", fmt::format("{}", c.kernel.tol));
  line("kernel.max_iter", fmt::format("{}", c.kernel.max_iter));
  line("kernel.min_dist", fmt::format("{}", c.kernel.min_dist));
  line("uncertainty.eta", fmt::format("{}", c.uncertainty.eta));
  line("plan.order", format_stage_order(c.plan.order));
  line("plan.k1", fmt::format("{}", c.plan.k1));
  line("plan.k2", fmt::format("{}", c.plan.k2));
  line("plan.n_r", fmt::format("{}", c.plan.n_r));
  line("plan.rounds", fmt::format("{}", c.rounds));
  line("plan.n0", fmt::format("{}", c.initial_labeled));
  line("diag.squared_mean_term", c.diag.squared_mean_term ? "true" : "false");
  line("diag.n_pairs", fmt::format("{}", c.diag.n_pairs));
  line("diag.histogram_bins", fmt::format("{}", c.diag.histogram_bins));
  line("io.unknown_class", c.unknown_class == UnknownClassPolicy::skip ? "skip" : "error");
  line("synth.n_scenes", fmt::format("{}", c.pool.n_scenes));
  line("synth.class_mix", fmt::format("{}", fmt::join(c.pool.class_mix, ", ")));
  line("synth.objects_min", fmt::format("{}", c.pool.objects_min));
  line("synth.objects_max", fmt::format("{}", c.pool.objects_max));
  line("synth.spatial_extent", fmt::format("{}", c.pool.spatial_extent));
  line("synth.redundancy_groups", fmt::format("{}", c.pool.redundancy_groups));
  line("synth.duplicate_jitter", fmt::format("{}", c.pool.duplicate_jitter));
  line("noise.confidence_noise", fmt::format("{}", c.noise.confidence_noise));
  line("noise.position_noise_per_meter", fmt::format("{}", c.noise.position_noise_per_meter));
  line("noise.base_variance", fmt::format("{}", c.noise.base_variance));
  line("noise.false_positive_rate", fmt::format("{}", c.noise.false_positive_rate));
  line("noise.misclass_rate", fmt::format("{}", c.noise.misclass_rate));
  line("noise.components", fmt::format("{}", c.noise.mixture_components));
  line("noise.mean_spread", fmt::format("{}", c.noise.mean_spread));
  line("noise.learning_schedule", fmt::format("{}", c.learning_schedule));
  return out;
}

}  // namespace tscenejal
