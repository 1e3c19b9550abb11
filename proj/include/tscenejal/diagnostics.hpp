#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tscenejal/core_model.hpp"
#include "tscenejal/entropy.hpp"
#include "tscenejal/scene_graph.hpp"
#include "tscenejal/uncertainty.hpp"

namespace tscenejal {

struct DiagConfig {
  // Standard Gaussian KL uses (mu_s - mu_t)^2; false evaluates the unsquared
  // mean term for audits.
  bool squared_mean_term = true;
  std::size_t n_pairs = 10000;
  std::size_t histogram_bins = 10;
};

// ln C - H(counts): KL divergence of the class distribution from uniform.
double category_kl_to_uniform(std::span<const std::size_t> class_counts, std::size_t num_classes);

// KL(N(mu_s, sigma_s^2) || N(mu_t, sigma_t^2)).
double similarity_gaussian_kl(double mu_s, double sigma_s, double mu_t, double sigma_t,
                              bool squared_mean_term = true);

// Similarities of `n_pairs` distinct unordered pairs drawn uniformly (capped
// at the number of available pairs). Deterministic for a seed.
std::vector<double> sample_pair_similarities(std::span<const Scene> scenes, std::size_t n_pairs,
                                             std::uint64_t seed, const ClassCatalog& catalog,
                                             const KernelConfig& config, std::size_t jobs = 1);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

Histogram make_histogram(std::span<const double> values, std::size_t bins);

struct DiagReport {
  std::size_t scene_count = 0;
  std::vector<std::size_t> class_histogram;
  std::size_t box_count = 0;
  std::optional<double> category_kl;  // empty when there are no boxes
  double discrete_entropy = 0.0;
  double similarity_mean = 0.0;
  double similarity_std = 0.0;
  std::size_t pair_sample_count = 0;
  std::vector<double> similarity_samples;
  Histogram au_histogram;  // per-scene mean propagated AU
  Histogram eu_histogram;  // per-scene mean propagated EU
  std::size_t scenes_with_uncertainty = 0;
};

struct DiagInputs {
  ClassCatalog catalog = ClassCatalog::kitti_default();
  AnchorTable anchors = AnchorTable::kitti_default();
  EntropyConfig entropy;
  KernelConfig kernel;
  UncertaintyConfig uncertainty;
  DiagConfig diag;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

// Statistics of `selected`, which must be a subset (by id) of `pool`.
DiagReport selection_report(std::span<const Scene> selected, std::span<const Scene> pool, const DiagInputs& inputs);

// Report files: summary.json, class_histogram.csv, similarity_sample.csv,
// uncertainty_histogram.csv.
void write_diag_report(const DiagReport& report, const ClassCatalog& catalog, const std::string& out_dir);
std::string diag_summary_json(const DiagReport& report, const ClassCatalog& catalog);

}  // namespace tscenejal
