#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tscenejal/core_model.hpp"

namespace tscenejal {

// Confidence filter and log stabilizer for the class-balance metric. Natural log.
struct EntropyConfig {
  double tau = 0.3;
  double zeta = 1e-12;

  void validate() const;
};

// count[c] = number of detections of class c with confidence >= tau.
std::vector<std::size_t> filtered_class_counts(const Scene& scene, const ClassCatalog& catalog,
                                               const EntropyConfig& config);

// -sum_c p_c ln(p_c + zeta) over class proportions; 0 when all counts are zero.
double entropy_from_counts(std::span<const std::size_t> counts, double zeta);

double category_entropy(const Scene& scene, const ClassCatalog& catalog, const EntropyConfig& config);

// Ids of the `top_n` highest-entropy scenes, ties broken by ascending id.
std::vector<std::string> rank_by_entropy(std::span<const Scene> scenes, const ClassCatalog& catalog,
                                         const EntropyConfig& config, std::size_t top_n);

}  // namespace tscenejal
