#include "tscenejal/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tscenejal/detail/ranking.hpp"
#include "tscenejal/errors.hpp"

namespace tscenejal {

void UncertaintyConfig::validate() const {
  if (!(eta >= 0.0)) throw InvalidArgument(fmt::format("uncertainty.eta must be >= 0, got {}", eta));
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument(fmt::format("tau must be in [0,1], got {}", tau));
}

double mixture_mean(const MixtureParams& params, BoxDim dim) {
  const auto& m = params.dim(dim);
  double mean = 0.0;
  for (std::size_t k = 0; k < m.components(); ++k) mean += m.weights[k] * m.means[k];
  return mean;
}

double mixture_au(const MixtureParams& params, BoxDim dim) {
  const auto& m = params.dim(dim);
  double au = 0.0;
  for (std::size_t k = 0; k < m.components(); ++k) au += m.weights[k] * m.variances[k];
  return au;
}

double mixture_eu(const MixtureParams& params, BoxDim dim) {
  const auto& m = params.dim(dim);
  if (std::all_of(m.means.begin(), m.means.end(), [&](double mu) { return mu == m.means.front(); })) return 0.0;
  const double mean = mixture_mean(params, dim);
  double eu = 0.0;
  for (std::size_t k = 0; k < m.components(); ++k) {
    const double d = m.means[k] - mean;
    eu += m.weights[k] * d * d;
  }
  return eu;
}

BoxVariance propagate_variance(const BoxVariance& residual_variance, const BoxVariance& residual_means,
                               const Anchor& anchor) {
  const double diag = anchor.diagonal();
  if (!(anchor.height > 0.0)) throw InvalidArgument("anchor height must be positive");
  for (double v : residual_variance)
    if (!(v >= 0.0)) throw InvalidArgument("residual variances must be non-negative");
  const double yaw = residual_means[static_cast<std::size_t>(BoxDim::theta)];
  const double cos_yaw = std::cos(yaw);
  if (std::abs(cos_yaw) < 1e-6)
    throw SingularYawError(fmt::format("yaw residual mean {} is too close to +-pi/2 for secant propagation", yaw));

  auto at = [](const BoxVariance& a, BoxDim d) { return a[static_cast<std::size_t>(d)]; };
  BoxVariance out{};
  auto set = [&](BoxDim d, double factor) { out[static_cast<std::size_t>(d)] = factor * at(residual_variance, d); };
  set(BoxDim::x, diag * diag);
  set(BoxDim::y, diag * diag);
  set(BoxDim::z, anchor.height * anchor.height);
  for (BoxDim d : {BoxDim::w, BoxDim::h, BoxDim::l}) set(d, at(residual_means, d) * at(residual_means, d));
  set(BoxDim::theta, 1.0 / (cos_yaw * cos_yaw));
  return out;
}

BoxUncertainty propagate_uncertainty(const BoxVariance& residual_au, const BoxVariance& residual_eu,
                                     const BoxVariance& residual_means, const Anchor& anchor) {
  return {propagate_variance(residual_au, residual_means, anchor),
          propagate_variance(residual_eu, residual_means, anchor)};
}

BoxUncertainty detection_uncertainty(const MixtureParams& params, const Anchor& anchor) {
  BoxVariance au{}, eu{}, means{};
  for (BoxDim d : kAllBoxDims) {
    const auto i = static_cast<std::size_t>(d);
    au[i] = mixture_au(params, d);
    eu[i] = mixture_eu(params, d);
    means[i] = mixture_mean(params, d);
  }
  return propagate_uncertainty(au, eu, means, anchor);
}

SceneUncertaintyParts scene_uncertainty_parts(const Scene& scene, const AnchorTable& anchors,
                                              const UncertaintyConfig& config) {
  SceneUncertaintyParts parts;
  for (std::size_t i = 0; i < scene.detections.size(); ++i) {
    const auto& det = scene.detections[i];
    if (det.confidence < config.tau) continue;
    if (!det.mixture)
      throw DataError(fmt::format("scene {}: detection {} ({}) has no mixture parameters", scene.id, i,
                                  det.class_label));
    const BoxUncertainty u = detection_uncertainty(*det.mixture, anchors.at(det.class_label));
    for (std::size_t d = 0; d < kBoxDims; ++d) {
      parts.au += u.au[d];
      parts.eu += u.eu[d];
    }
    ++parts.detections;
  }
  if (parts.detections > 0) {
    const double denom = static_cast<double>(kBoxDims * parts.detections);
    parts.au /= denom;
    parts.eu /= denom;
  }
  return parts;
}

double scene_uncertainty(const Scene& scene, const AnchorTable& anchors, const UncertaintyConfig& config) {
  config.validate();
  const auto parts = scene_uncertainty_parts(scene, anchors, config);
  return parts.au + config.eta * parts.eu;
}

namespace {

// ln N(x | mean, variance)
double log_normal_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

}  // namespace

double mdn_nll(const MixtureParams& params, std::span<const double, kBoxDims> target) {
  double nll = 0.0;
  for (BoxDim dim : kAllBoxDims) {
    const auto& m = params.dim(dim);
    const double x = target[static_cast<std::size_t>(dim)];
    std::vector<double> terms;
    terms.reserve(m.components());
    for (std::size_t k = 0; k < m.components(); ++k) {
      if (m.weights[k] == 0.0) continue;
      terms.push_back(std::log(m.weights[k]) + log_normal_density(x, m.means[k], m.variances[k]));
    }
    const double top = *std::max_element(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - top);
    nll -= top + std::log(sum);
  }
  return nll;
}

std::vector<std::string> rank_by_uncertainty(std::span<const Scene> scenes, const AnchorTable& anchors,
                                             const UncertaintyConfig& config, std::size_t top_n) {
  if (top_n > scenes.size())
    throw InvalidArgument(fmt::format("cannot rank top {} of {} scenes", top_n, scenes.size()));
  std::vector<std::string> ids;
  std::vector<double> scores;
  for (const auto& s : scenes) {
    ids.push_back(s.id);
    try {
      scores.push_back(scene_uncertainty(s, anchors, config));
    } catch (const SingularYawError& e) {
      spdlog::warn("scene {} excluded from uncertainty ranking: {}", s.id, e.what());
      scores.push_back(-std::numeric_limits<double>::infinity());
    }
  }
  std::vector<std::string> out;
  for (std::size_t i : detail::top_by_score(ids, scores, top_n)) out.push_back(ids[i]);
  return out;
}

std::string first_missing_mixture(const Scene& scene, double tau) {
  for (std::size_t i = 0; i < scene.detections.size(); ++i)
    if (scene.detections[i].confidence >= tau && !scene.detections[i].mixture)
      return fmt::format("{}:{}", scene.id, i);
  return {};
}

}  // namespace tscenejal
