#include "tscenejal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "tscenejal/errors.hpp"

namespace tscenejal {

namespace {
constexpr std::uint32_t kTemplateStream = 1;
constexpr std::uint32_t kSceneStream = 2;
constexpr double kAnchorGrid = 0.16;
constexpr double kAnchorZ = -1.0;
constexpr double kMinRange = 3.0;
// Smallest representable variance, used when the noise model adds none.
constexpr double kVarianceFloor = std::numeric_limits<double>::min();
}  // namespace

void PoolSpec::validate(const ClassCatalog& catalog) const {
  if (class_mix.size() != catalog.size())
    throw InvalidArgument(fmt::format("class_mix has {} entries for {} classes", class_mix.size(), catalog.size()));
  double sum = 0.0;
  for (double p : class_mix) {
    if (!(p >= 0.0)) throw InvalidArgument("class_mix entries must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument(fmt::format("class_mix sums to {}, expected 1", sum));
  if (objects_min > objects_max) throw InvalidArgument("objects_min must not exceed objects_max");
  if (!(spatial_extent > kMinRange)) throw InvalidArgument(fmt::format("spatial_extent must exceed {} m", kMinRange));
  if (redundancy_groups < 1 || redundancy_groups > std::max<std::size_t>(n_scenes, 1))
    throw InvalidArgument("redundancy_groups must be in [1, n_scenes]");
  if (!(duplicate_jitter >= 0.0)) throw InvalidArgument("duplicate_jitter must be non-negative");
}

void NoiseModel::validate() const {
  for (double v : {confidence_noise, position_noise_per_meter, base_variance, false_positive_rate, mean_spread})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("noise parameters must be finite and non-negative");
  if (!(misclass_rate >= 0.0 && misclass_rate <= 1.0)) throw InvalidArgument("misclass_rate must be in [0,1]");
  if (mixture_components < 1) throw InvalidArgument("mixture_components must be >= 1");
}

NoiseModel NoiseModel::scaled(double factor) const {
  NoiseModel n = *this;
  n.confidence_noise *= factor;
  n.position_noise_per_meter *= factor;
  n.base_variance *= factor;
  n.false_positive_rate *= factor;
  n.misclass_rate *= factor;
  n.mean_spread *= factor;
  return n;
}

NoiseModel NoiseModel::noiseless() {
  return NoiseModel{0.0, 0.0, 0.0, 0.0, 0.0, 1, 0.0};
}

std::string scene_id_for_index(std::size_t index) { return fmt::format("{:06d}", index); }

std::mt19937_64 scene_rng(std::uint64_t seed, std::size_t scene_index, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(scene_index), static_cast<std::uint32_t>(scene_index >> 32), purpose};
  return std::mt19937_64(seq);
}

namespace {

ScoredDetection random_object(std::size_t class_index, double max_range, const ClassCatalog& catalog,
                              const AnchorTable& anchors, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> range(kMinRange, max_range);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> size_jitter(0.0, 0.08);
  std::normal_distribution<double> height(0.0, 0.1);
  const std::string& name = catalog.classes()[class_index];
  const Anchor& a = anchors.at(name);
  const double r = range(rng);
  const double phi = angle(rng);
  ScoredDetection d;
  d.class_label = name;
  d.confidence = 1.0;
  d.box.x = r * std::cos(phi);
  d.box.y = r * std::sin(phi);
  d.box.z = kAnchorZ + height(rng);
  d.box.w = a.width * std::exp(size_jitter(rng));
  d.box.l = a.length * std::exp(size_jitter(rng));
  d.box.h = a.height * std::exp(size_jitter(rng));
  d.box.theta = angle(rng);
  return d;
}

}  // namespace

std::vector<Scene> generate_pool(const PoolSpec& spec, const ClassCatalog& catalog, const AnchorTable& anchors) {
  spec.validate(catalog);
  anchors.validate_covers(catalog);
  std::vector<Scene> templates;
  templates.reserve(spec.redundancy_groups);
  for (std::size_t g = 0; g < spec.redundancy_groups; ++g) {
    auto rng = scene_rng(spec.rng_seed, g, kTemplateStream);
    std::uniform_int_distribution<std::size_t> count(spec.objects_min, spec.objects_max);
    std::discrete_distribution<std::size_t> cls(spec.class_mix.begin(), spec.class_mix.end());
    Scene t;
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i)
      t.detections.push_back(random_object(cls(rng), spec.spatial_extent, catalog, anchors, rng));
    templates.push_back(std::move(t));
  }

  std::vector<Scene> pool;
  pool.reserve(spec.n_scenes);
  for (std::size_t i = 0; i < spec.n_scenes; ++i) {
    const std::size_t group = i * spec.redundancy_groups / spec.n_scenes;
    Scene s = templates[group];
    s.id = scene_id_for_index(i);
    if (spec.redundancy_groups < spec.n_scenes && spec.duplicate_jitter > 0.0) {
      auto rng = scene_rng(spec.rng_seed, i, kSceneStream);
      std::normal_distribution<double> jitter(0.0, spec.duplicate_jitter);
      std::normal_distribution<double> yaw(0.0, 0.05);
      for (auto& d : s.detections) {
        d.box.x += jitter(rng);
        d.box.y += jitter(rng);
        d.box.theta += yaw(rng);
      }
    }
    pool.push_back(std::move(s));
  }
  return pool;
}

std::array<double, kBoxDims> box_residuals(const Box3D& box, const Anchor& anchor) {
  auto grid_offset = [](double v) { return (v / kAnchorGrid - std::round(v / kAnchorGrid)) * kAnchorGrid; };
  const double quarter = std::numbers::pi / 2.0;
  std::array<double, kBoxDims> r{};
  r[static_cast<std::size_t>(BoxDim::x)] = grid_offset(box.x) / anchor.diagonal();
  r[static_cast<std::size_t>(BoxDim::y)] = grid_offset(box.y) / anchor.diagonal();
  r[static_cast<std::size_t>(BoxDim::z)] = (box.z - kAnchorZ) / anchor.height;
  r[static_cast<std::size_t>(BoxDim::w)] = std::log(box.w / anchor.width);
  r[static_cast<std::size_t>(BoxDim::h)] = std::log(box.h / anchor.height);
  r[static_cast<std::size_t>(BoxDim::l)] = std::log(box.l / anchor.length);
  r[static_cast<std::size_t>(BoxDim::theta)] = box.theta - quarter * std::round(box.theta / quarter);
  return r;
}

namespace {

// Residual-space variance per unit of metric variance; the anchor scaling is
// undone again by box-space propagation.
std::array<double, kBoxDims> residual_scale(const Anchor& a) {
  const double diag2 = a.diagonal() * a.diagonal();
  return {1.0 / diag2, 1.0 / diag2, 1.0 / (a.height * a.height), 1.0 / (a.width * a.width),
          1.0 / (a.height * a.height), 1.0 / (a.length * a.length), 0.01};
}

MixtureParams make_mixture(const std::array<double, kBoxDims>& residual_means, const Anchor& anchor,
                           double metric_variance, const NoiseModel& noise, std::mt19937_64& rng) {
  const std::size_t k = noise.mixture_components;
  std::normal_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> log_scale(0.0, 0.25);
  const auto scale = residual_scale(anchor);
  std::array<GaussianMixture1D, kBoxDims> dims;
  for (std::size_t d = 0; d < kBoxDims; ++d) {
    const double variance = metric_variance * scale[d];
    GaussianMixture1D m;
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double w = k == 1 ? 1.0 : std::exp(0.5 * unit(rng));
      const double comp_scale = std::exp(log_scale(rng));
      const double offset = unit(rng);
      m.weights.push_back(w);
      m.variances.push_back(std::max(variance * comp_scale, kVarianceFloor));
      m.means.push_back(k == 1 ? residual_means[d]
                               : residual_means[d] + noise.mean_spread * std::sqrt(variance) * offset);
      total += w;
    }
    for (double& w : m.weights) w /= total;
    dims[d] = std::move(m);
  }
  return MixtureParams(std::move(dims));
}

}  // namespace

Scene simulate_predictions(const Scene& gt, const NoiseModel& noise, const ClassCatalog& catalog,
                           const AnchorTable& anchors, std::mt19937_64& rng) {
  noise.validate();
  Scene out{gt.id, {}};
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (const auto& obj : gt.detections) {
    ScoredDetection det = obj;
    const double metric_variance = noise.base_variance + noise.position_noise_per_meter * obj.box.range();
    const double pos_sd = std::sqrt(metric_variance);
    const double dx = unit(rng), dy = unit(rng), dz = unit(rng);
    det.box.x += pos_sd * dx;
    det.box.y += pos_sd * dy;
    det.box.z += pos_sd * dz;
    det.confidence = std::exp(-std::abs(noise.confidence_noise * unit(rng)));
    const double flip = u01(rng);
    if (flip < noise.misclass_rate && catalog.size() > 1) {
      std::uniform_int_distribution<std::size_t> other(0, catalog.size() - 2);
      std::size_t c = other(rng);
      if (c >= *catalog.index_of(obj.class_label)) ++c;
      det.class_label = catalog.classes()[c];
      det.confidence *= 0.5;
    }
    const Anchor& anchor = anchors.at(det.class_label);
    det.mixture = make_mixture(box_residuals(det.box, anchor), anchor, metric_variance, noise, rng);
    out.detections.push_back(std::move(det));
  }

  if (noise.false_positive_rate > 0.0) {
    std::poisson_distribution<std::size_t> fp_count(noise.false_positive_rate);
    const std::size_t n_fp = fp_count(rng);
    std::uniform_int_distribution<std::size_t> cls(0, catalog.size() - 1);
    std::uniform_real_distribution<double> conf(0.05, 0.6);
    double max_range = kMinRange + 1.0;
    for (const auto& o : gt.detections) max_range = std::max(max_range, o.box.range());
    for (std::size_t i = 0; i < n_fp; ++i) {
      ScoredDetection det = random_object(cls(rng), max_range, catalog, anchors, rng);
      det.confidence = conf(rng);
      const Anchor& anchor = anchors.at(det.class_label);
      const double metric_variance =
          4.0 * (noise.base_variance + noise.position_noise_per_meter * det.box.range());
      det.mixture = make_mixture(box_residuals(det.box, anchor), anchor, metric_variance, noise, rng);
      out.detections.push_back(std::move(det));
    }
  }
  return out;
}

}  // namespace tscenejal
