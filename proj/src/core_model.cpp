#include "tscenejal/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "tscenejal/errors.hpp"

namespace tscenejal {

ClassCatalog::ClassCatalog(std::vector<std::string> classes, std::string ego_label,
                           std::string mirror_label)
    : classes_(std::move(classes)),
      ego_label_(std::move(ego_label)),
      mirror_label_(std::move(mirror_label)) {
  if (classes_.empty()) throw InvalidArgument("class catalog must contain at least one class");
  std::set<std::string, std::less<>> seen;
  for (const auto& name : classes_) {
    if (name.empty()) throw InvalidArgument("class names must be non-empty");
    if (!seen.insert(name).second) throw InvalidArgument(fmt::format("duplicate class '{}'", name));
  }
  if (ego_label_.empty() || mirror_label_.empty() || ego_label_ == mirror_label_)
    throw InvalidArgument("ego and mirror labels must be distinct and non-empty");
  if (seen.contains(ego_label_) || seen.contains(mirror_label_))
    throw InvalidArgument("ego/mirror labels must not collide with a class name");
}

ClassCatalog ClassCatalog::kitti_default() { return ClassCatalog({"Car", "Pedestrian", "Cyclist"}); }

std::optional<std::size_t> ClassCatalog::index_of(std::string_view name) const {
  auto it = std::find(classes_.begin(), classes_.end(), name);
  if (it == classes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

double Box3D::range() const { return std::sqrt(x * x + y * y + z * z); }

void Box3D::validate() const {
  for (double v : {x, y, z, theta})
    if (!std::isfinite(v)) throw InvalidArgument("box center and yaw must be finite");
  if (!(w > 0.0) || !(l > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(l) ||
      !std::isfinite(h))
    throw InvalidArgument(fmt::format("box dimensions must be positive (w={}, l={}, h={})", w, l, h));
}

namespace {
constexpr std::array<std::string_view, kBoxDims> kResidualNames = {"dx", "dy", "dz", "dw",
                                                                   "dh", "dl", "dtheta"};
}

std::string_view residual_name(BoxDim dim) { return kResidualNames[static_cast<std::size_t>(dim)]; }

std::optional<BoxDim> residual_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kBoxDims; ++i)
    if (kResidualNames[i] == name) return static_cast<BoxDim>(i);
  return std::nullopt;
}

MixtureParams::MixtureParams(std::array<GaussianMixture1D, kBoxDims> dims) : dims_(std::move(dims)) {
  const std::size_t k = dims_[0].components();
  if (k == 0) throw InvalidArgument("mixture needs at least one component");
  for (std::size_t d = 0; d < kBoxDims; ++d) {
    const auto& m = dims_[d];
    const auto name = kResidualNames[d];
    if (m.weights.size() != k || m.means.size() != k || m.variances.size() != k)
      throw InvalidArgument(fmt::format("mixture for {} must have {} components in every field", name, k));
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (!(m.weights[c] >= 0.0) || !std::isfinite(m.weights[c]))
        throw InvalidArgument(fmt::format("negative or non-finite weight in {}", name));
      if (!std::isfinite(m.means[c])) throw InvalidArgument(fmt::format("non-finite mean in {}", name));
      if (!(m.variances[c] > 0.0) || !std::isfinite(m.variances[c]))
        throw InvalidArgument(fmt::format("variance must be positive in {}", name));
      sum += m.weights[c];
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance)
      throw InvalidArgument(fmt::format("weights for {} sum to {:.17g}, expected 1", name, sum));
  }
}

MixtureParams MixtureParams::single(double mean, double variance) {
  std::array<GaussianMixture1D, kBoxDims> dims;
  dims.fill(GaussianMixture1D{{1.0}, {mean}, {variance}});
  return MixtureParams(std::move(dims));
}

void validate_scene(const Scene& scene, const ClassCatalog& catalog) {
  if (scene.id.empty()) throw DataError("scene id must be non-empty");
  for (std::size_t i = 0; i < scene.detections.size(); ++i) {
    const auto& det = scene.detections[i];
    if (!catalog.contains(det.class_label))
      throw DataError(fmt::format("scene {}: detection {} has unknown class '{}'", scene.id, i,
                                  det.class_label));
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0))
      throw DataError(fmt::format("scene {}: detection {} confidence {} outside [0,1]", scene.id, i,
                                  det.confidence));
    try {
      det.box.validate();
    } catch (const InvalidArgument& e) {
      throw DataError(fmt::format("scene {}: detection {}: {}", scene.id, i, e.what()));
    }
  }
}

void validate_pool_ids(const std::vector<Scene>& pool) {
  std::set<std::string_view> ids;
  for (const auto& s : pool) {
    if (s.id.empty()) throw DataError("scene id must be non-empty");
    if (!ids.insert(s.id).second) throw DataError(fmt::format("duplicate scene id '{}'", s.id));
  }
}

double anchor_diagonal(double width, double length) {
  if (!(width > 0.0) || !(length > 0.0))
    throw InvalidArgument(fmt::format("anchor width and length must be positive (got {}, {})", width, length));
  return std::hypot(width, length);
}

AnchorTable AnchorTable::kitti_default() {
  AnchorTable t;
  t.set("Car", {3.9, 1.6, 1.56});
  t.set("Pedestrian", {0.8, 0.6, 1.73});
  t.set("Cyclist", {1.76, 0.6, 1.73});
  return t;
}

void AnchorTable::set(const std::string& class_name, Anchor anchor) {
  if (!(anchor.length > 0.0) || !(anchor.width > 0.0) || !(anchor.height > 0.0))
    throw InvalidArgument(fmt::format("anchor for '{}' must have positive dimensions", class_name));
  entries_[class_name] = anchor;
}

const Anchor& AnchorTable::at(std::string_view class_name) const {
  auto it = entries_.find(class_name);
  if (it == entries_.end()) throw DataError(fmt::format("no anchor for class '{}'", class_name));
  return it->second;
}

bool AnchorTable::contains(std::string_view class_name) const { return entries_.find(class_name) != entries_.end(); }

void AnchorTable::validate_covers(const ClassCatalog& catalog) const {
  for (const auto& c : catalog.classes())
    if (!contains(c)) throw InvalidArgument(fmt::format("anchor table has no entry for class '{}'", c));
}

}  // namespace tscenejal
