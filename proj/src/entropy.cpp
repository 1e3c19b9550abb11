#include "tscenejal/entropy.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "tscenejal/detail/ranking.hpp"
#include "tscenejal/errors.hpp"

namespace tscenejal {

void EntropyConfig::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument(fmt::format("entropy.tau must be in [0,1], got {}", tau));
  if (!(zeta > 0.0)) throw InvalidArgument(fmt::format("entropy.zeta must be positive, got {}", zeta));
}

std::vector<std::size_t> filtered_class_counts(const Scene& scene, const ClassCatalog& catalog,
                                               const EntropyConfig& config) {
  std::vector<std::size_t> counts(catalog.size(), 0);
  for (const auto& det : scene.detections) {
    if (det.confidence < config.tau) continue;
    auto idx = catalog.index_of(det.class_label);
    if (!idx) throw DataError(fmt::format("scene {}: unknown class '{}'", scene.id, det.class_label));
    ++counts[*idx];
  }
  return counts;
}

double entropy_from_counts(std::span<const std::size_t> counts, double zeta) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) return 0.0;
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p + zeta);
  }
  // p = 1 gives -ln(1 + zeta), a tiny negative value.
  return h < 0.0 ? 0.0 : h;
}

double category_entropy(const Scene& scene, const ClassCatalog& catalog, const EntropyConfig& config) {
  const auto counts = filtered_class_counts(scene, catalog, config);
  return entropy_from_counts(counts, config.zeta);
}

std::vector<std::string> rank_by_entropy(std::span<const Scene> scenes, const ClassCatalog& catalog,
                                         const EntropyConfig& config, std::size_t top_n) {
  if (top_n > scenes.size())
    throw InvalidArgument(fmt::format("cannot rank top {} of {} scenes", top_n, scenes.size()));
  std::vector<std::string> ids;
  std::vector<double> scores;
  ids.reserve(scenes.size());
  scores.reserve(scenes.size());
  for (const auto& s : scenes) {
    ids.push_back(s.id);
    scores.push_back(category_entropy(s, catalog, config));
  }
  std::vector<std::string> out;
  for (std::size_t i : detail::top_by_score(ids, scores, top_n)) out.push_back(ids[i]);
  return out;
}

}  // namespace tscenejal
