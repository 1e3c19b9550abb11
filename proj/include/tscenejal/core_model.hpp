#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tscenejal {

// Ordered list of object classes plus two reserved graph labels.
//
// Class index c in [0, size()) identifies a catalog class; the ego node uses
// index size() and the mirror node size() + 1 when labels are encoded as ints.
class ClassCatalog {
 public:
  ClassCatalog(std::vector<std::string> classes, std::string ego_label = "__ego__",
               std::string mirror_label = "__mirror__");

  // car, pedestrian, cyclist.
  static ClassCatalog kitti_default();

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::string& ego_label() const noexcept { return ego_label_; }
  const std::string& mirror_label() const noexcept { return mirror_label_; }
  std::size_t size() const noexcept { return classes_.size(); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

  int ego_index() const noexcept { return static_cast<int>(classes_.size()); }
  int mirror_index() const noexcept { return static_cast<int>(classes_.size()) + 1; }

  bool operator==(const ClassCatalog&) const = default;

 private:
  std::vector<std::string> classes_;
  std::string ego_label_;
  std::string mirror_label_;
};

// Oriented 3D box. Center in the ego sensor frame (ego at the origin), meters;
// yaw in radians.
struct Box3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;
  double l = 1.0;
  double h = 1.0;
  double theta = 0.0;

  double range() const;
  void validate() const;

  bool operator==(const Box3D&) const = default;
};

// Box parameters, in the order used for residuals and propagated uncertainty.
enum class BoxDim : std::size_t { x = 0, y, z, w, h, l, theta };
inline constexpr std::size_t kBoxDims = 7;
inline constexpr std::array<BoxDim, kBoxDims> kAllBoxDims = {
    BoxDim::x, BoxDim::y, BoxDim::z, BoxDim::w, BoxDim::h, BoxDim::l, BoxDim::theta};

// Short names used on disk: dx dy dz dw dh dl dtheta.
std::string_view residual_name(BoxDim dim);
std::optional<BoxDim> residual_from_name(std::string_view name);

// One-dimensional Gaussian mixture. `variances` holds variances, not standard
// deviations.
struct GaussianMixture1D {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  std::size_t components() const noexcept { return weights.size(); }
  bool operator==(const GaussianMixture1D&) const = default;
};

// Mixture over each of the seven box residuals of one detection. All seven
// mixtures share the component count K >= 1; weights sum to 1 within 1e-9.
class MixtureParams {
 public:
  inline static constexpr double kWeightSumTolerance = 1e-9;

  explicit MixtureParams(std::array<GaussianMixture1D, kBoxDims> dims);

  // Same single-component mixture (weight 1) on every residual.
  static MixtureParams single(double mean, double variance);

  const GaussianMixture1D& dim(BoxDim d) const { return dims_[static_cast<std::size_t>(d)]; }
  const std::array<GaussianMixture1D, kBoxDims>& dims() const noexcept { return dims_; }
  std::size_t components() const noexcept { return dims_[0].components(); }

  bool operator==(const MixtureParams&) const = default;

 private:
  std::array<GaussianMixture1D, kBoxDims> dims_;
};

struct ScoredDetection {
  std::string class_label;
  double confidence = 1.0;
  Box3D box;
  std::optional<MixtureParams> mixture;

  bool operator==(const ScoredDetection&) const = default;
};

struct Scene {
  std::string id;
  std::vector<ScoredDetection> detections;

  bool operator==(const Scene&) const = default;
};

// Checks id, class membership, confidence range and box dimensions.
void validate_scene(const Scene& scene, const ClassCatalog& catalog);

// Rejects duplicate or empty ids across a pool.
void validate_pool_ids(const std::vector<Scene>& pool);

double anchor_diagonal(double width, double length);

struct Anchor {
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;

  double diagonal() const { return anchor_diagonal(width, length); }
  bool operator==(const Anchor&) const = default;
};

class AnchorTable {
 public:
  AnchorTable() = default;

  // car (3.9, 1.6, 1.56), pedestrian (0.8, 0.6, 1.73), cyclist (1.76, 0.6, 1.73),
  // given as (length, width, height).
  static AnchorTable kitti_default();

  void set(const std::string& class_name, Anchor anchor);
  const Anchor& at(std::string_view class_name) const;
  bool contains(std::string_view class_name) const;
  const std::map<std::string, Anchor, std::less<>>& entries() const noexcept { return entries_; }

  // Every catalog class must have an entry.
  void validate_covers(const ClassCatalog& catalog) const;

  bool operator==(const AnchorTable&) const = default;

 private:
  std::map<std::string, Anchor, std::less<>> entries_;
};

}  // namespace tscenejal
