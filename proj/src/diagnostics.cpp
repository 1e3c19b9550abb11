#include "tscenejal/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tscenejal/detail/parallel.hpp"
#include "tscenejal/errors.hpp"
#include "tscenejal/kitti_io.hpp"

namespace tscenejal {

double category_kl_to_uniform(std::span<const std::size_t> class_counts, std::size_t num_classes) {
  if (num_classes == 0 || class_counts.size() != num_classes)
    throw InvalidArgument(fmt::format("expected {} class counts, got {}", num_classes, class_counts.size()));
  const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  if (total == 0) throw InvalidArgument("category KL is undefined for an empty histogram");
  double h = 0.0;
  for (std::size_t c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return std::max(0.0, std::log(static_cast<double>(num_classes)) - h);
}

double similarity_gaussian_kl(double mu_s, double sigma_s, double mu_t, double sigma_t, bool squared_mean_term) {
  if (!(sigma_s > 0.0) || !(sigma_t > 0.0))
    throw InvalidArgument(fmt::format("standard deviations must be positive (got {}, {})", sigma_s, sigma_t));
  const double shift = squared_mean_term ? (mu_s - mu_t) * (mu_s - mu_t) : (mu_s - mu_t);
  return std::log(sigma_t / sigma_s) + (sigma_s * sigma_s + shift) / (2.0 * sigma_t * sigma_t) - 0.5;
}

std::vector<double> sample_pair_similarities(std::span<const Scene> scenes, std::size_t n_pairs, std::uint64_t seed,
                                             const ClassCatalog& catalog, const KernelConfig& config,
                                             std::size_t jobs) {
  const std::size_t n = scenes.size();
  if (n < 2) throw InvalidArgument("pair sampling needs at least two scenes");
  const std::size_t total = n * (n - 1) / 2;
  n_pairs = std::min(n_pairs, total);

  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (2 * n_pairs >= total) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(n_pairs);
  } else {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (pairs.size() < n_pairs) {
      std::size_t i = pick(rng), j = pick(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (seen.insert({i, j}).second) pairs.emplace_back(i, j);
    }
  }

  std::vector<SceneGraph> graphs;
  graphs.reserve(n);
  for (const auto& s : scenes) graphs.push_back(build_scene_graph(s, catalog, config));
  std::vector<char> needed(n, 0);
  for (const auto& [i, j] : pairs) needed[i] = needed[j] = 1;
  std::vector<double> self(n, 0.0);
  detail::parallel_for(n, jobs, [&](std::size_t i) {
    if (needed[i]) self[i] = marginalized_kernel(graphs[i], graphs[i], config);
  });
  std::vector<double> out(pairs.size());
  detail::parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    out[p] = normalized_similarity(marginalized_kernel(graphs[i], graphs[j], config), self[i], self[j]);
  });
  return out;
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  Histogram h;
  if (bins == 0) throw InvalidArgument("histogram needs at least one bin");
  h.counts.assign(bins, 0);
  if (values.empty()) return h;
  h.lo = *std::min_element(values.begin(), values.end());
  h.hi = *std::max_element(values.begin(), values.end());
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - h.lo) / width) : 0;
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

DiagReport selection_report(std::span<const Scene> selected, std::span<const Scene> pool, const DiagInputs& in) {
  std::set<std::string_view> pool_ids;
  for (const auto& s : pool) pool_ids.insert(s.id);
  for (const auto& s : selected)
    if (!pool_ids.contains(s.id)) throw DataError(fmt::format("selected scene '{}' is not in the pool", s.id));

  DiagReport r;
  r.scene_count = selected.size();
  r.class_histogram.assign(in.catalog.size(), 0);
  for (const auto& s : selected) {
    const auto counts = filtered_class_counts(s, in.catalog, in.entropy);
    for (std::size_t c = 0; c < counts.size(); ++c) r.class_histogram[c] += counts[c];
  }
  r.box_count = std::accumulate(r.class_histogram.begin(), r.class_histogram.end(), std::size_t{0});
  if (r.box_count > 0) {
    r.category_kl = category_kl_to_uniform(r.class_histogram, in.catalog.size());
    r.discrete_entropy = std::log(static_cast<double>(in.catalog.size())) - *r.category_kl;
  }
  if (selected.size() >= 2) {
    r.similarity_samples =
        sample_pair_similarities(selected, in.diag.n_pairs, in.seed, in.catalog, in.kernel, in.jobs);
    r.pair_sample_count = r.similarity_samples.size();
    const double n = static_cast<double>(r.pair_sample_count);
    r.similarity_mean = std::accumulate(r.similarity_samples.begin(), r.similarity_samples.end(), 0.0) / n;
    double var = 0.0;
    for (double v : r.similarity_samples) var += (v - r.similarity_mean) * (v - r.similarity_mean);
    r.similarity_std = std::sqrt(var / n);
  }
  std::vector<double> au, eu;
  for (const auto& s : selected) {
    if (!first_missing_mixture(s, in.uncertainty.tau).empty()) continue;
    try {
      const auto parts = scene_uncertainty_parts(s, in.anchors, in.uncertainty);
      au.push_back(parts.au);
      eu.push_back(parts.eu);
    } catch (const SingularYawError&) {
    }
  }
  r.scenes_with_uncertainty = au.size();
  r.au_histogram = make_histogram(au, in.diag.histogram_bins);
  r.eu_histogram = make_histogram(eu, in.diag.histogram_bins);
  return r;
}

std::string diag_summary_json(const DiagReport& r, const ClassCatalog& catalog) {
  nlohmann::json hist = nlohmann::json::object();
  for (std::size_t c = 0; c < catalog.size(); ++c) hist[catalog.classes()[c]] = r.class_histogram[c];
  nlohmann::json doc = {
      {"scene_count", r.scene_count},
      {"box_count", r.box_count},
      {"class_histogram", hist},
      {"category_kl", r.category_kl ? nlohmann::json(*r.category_kl) : nlohmann::json(nullptr)},
      {"discrete_entropy", r.discrete_entropy},
      {"similarity_mean", r.similarity_mean},
      {"similarity_std", r.similarity_std},
      {"pair_sample_count", r.pair_sample_count},
      {"scenes_with_uncertainty", r.scenes_with_uncertainty},
  };
  return doc.dump(2) + "\n";
}

namespace {

std::string histogram_rows(const char* name, const Histogram& h) {
  std::string out;
  const double width = h.counts.empty() ? 0.0 : (h.hi - h.lo) / static_cast<double>(h.counts.size());
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out += fmt::format("{},{:.9g},{:.9g},{}\n", name, h.lo + width * static_cast<double>(b),
                       h.lo + width * static_cast<double>(b + 1), h.counts[b]);
  return out;
}

}  // namespace

void write_diag_report(const DiagReport& r, const ClassCatalog& catalog, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_file_atomic(dir / "summary.json", diag_summary_json(r, catalog));

  std::string classes = "class,count\n";
  for (std::size_t c = 0; c < catalog.size(); ++c)
    classes += fmt::format("{},{}\n", catalog.classes()[c], r.class_histogram[c]);
  write_file_atomic(dir / "class_histogram.csv", classes);

  std::string sims = "pair,similarity\n";
  for (std::size_t i = 0; i < r.similarity_samples.size(); ++i)
    sims += fmt::format("{},{:.12g}\n", i, r.similarity_samples[i]);
  write_file_atomic(dir / "similarity_sample.csv", sims);

  write_file_atomic(dir / "uncertainty_histogram.csv",
                    "kind,bin_lo,bin_hi,count\n" + histogram_rows("au", r.au_histogram) +
                        histogram_rows("eu", r.eu_histogram));
}

}  // namespace tscenejal
