#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tscenejal/core_model.hpp"

namespace tscenejal {

struct UncertaintyConfig {
  double eta = 0.5;  // weight of the epistemic term
  double tau = 0.3;  // confidence filter, shared with the entropy metric

  void validate() const;
};

using BoxVariance = std::array<double, kBoxDims>;

// Propagated aleatoric and epistemic variance per box parameter (x y z w h l theta).
struct BoxUncertainty {
  BoxVariance au{};
  BoxVariance eu{};
};

// Mixture statistics of one residual. Component "variances" are variances.
double mixture_mean(const MixtureParams& params, BoxDim dim);
double mixture_au(const MixtureParams& params, BoxDim dim);
double mixture_eu(const MixtureParams& params, BoxDim dim);

// Maps residual-space variances to box space:
//   x, y  scale by diag(anchor)^2
//   z     scales by height(anchor)^2
//   w h l scale by the squared residual mean of that dimension
//   theta scales by sec^2 of the yaw residual mean.
// Throws SingularYawError when |cos(mean dtheta)| < 1e-6.
BoxVariance propagate_variance(const BoxVariance& residual_variance, const BoxVariance& residual_means,
                               const Anchor& anchor);

BoxUncertainty propagate_uncertainty(const BoxVariance& residual_au, const BoxVariance& residual_eu,
                                     const BoxVariance& residual_means, const Anchor& anchor);

// Residual moments of one detection, propagated through its class anchor.
BoxUncertainty detection_uncertainty(const MixtureParams& params, const Anchor& anchor);

// Scene averages over the 7 * N entries of the filtered detections.
struct SceneUncertaintyParts {
  double au = 0.0;
  double eu = 0.0;
  std::size_t detections = 0;
};

SceneUncertaintyParts scene_uncertainty_parts(const Scene& scene, const AnchorTable& anchors,
                                              const UncertaintyConfig& config);

// mean(au) + eta * mean(eu); 0 for a scene with no detection above tau.
double scene_uncertainty(const Scene& scene, const AnchorTable& anchors, const UncertaintyConfig& config);

// Mixture negative log-likelihood summed over the seven residuals.
double mdn_nll(const MixtureParams& params, std::span<const double, kBoxDims> target);

// Ids of the `top_n` most uncertain scenes, ties by ascending id. Scenes whose
// yaw propagation is singular are ranked after every other scene, with a warning.
std::vector<std::string> rank_by_uncertainty(std::span<const Scene> scenes, const AnchorTable& anchors,
                                             const UncertaintyConfig& config, std::size_t top_n);

// First detection (as "scene:index") above tau without mixture parameters, or empty.
std::string first_missing_mixture(const Scene& scene, double tau);

}  // namespace tscenejal
