#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lfseg/error.hpp"

namespace lfseg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Class id; 0 is the "unlabeled" sentinel.
using ClassId = std::uint16_t;
inline constexpr ClassId kUnlabeled = 0;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

/// World-space point cloud with optional per-point colors and ground truth.
/// Immutable once constructed.
class PointCloud {
 public:
  PointCloud() = default;

  explicit PointCloud(std::vector<Vec3> positions,
                      std::optional<std::vector<Rgb>> colors = std::nullopt,
                      std::optional<std::vector<ClassId>> gt_labels = std::nullopt)
      : positions_(std::move(positions)), colors_(std::move(colors)), gt_labels_(std::move(gt_labels)) {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      if (!is_finite(positions_[i])) {
        throw DataError("non-finite coordinate at point " + std::to_string(i));
      }
    }
    if (colors_ && colors_->size() != positions_.size()) {
      throw ArgumentError("color count " + std::to_string(colors_->size()) + " != point count " +
                          std::to_string(positions_.size()));
    }
    if (gt_labels_ && gt_labels_->size() != positions_.size()) {
      throw ArgumentError("label count " + std::to_string(gt_labels_->size()) + " != point count " +
                          std::to_string(positions_.size()));
    }
  }

  std::size_t size() const noexcept { return positions_.size(); }
  bool empty() const noexcept { return positions_.empty(); }

  const std::vector<Vec3>& positions() const noexcept { return positions_; }
  const Vec3& position(std::size_t i) const { return positions_[i]; }

  bool has_colors() const noexcept { return colors_.has_value(); }
  const std::optional<std::vector<Rgb>>& colors() const noexcept { return colors_; }

  bool has_gt_labels() const noexcept { return gt_labels_.has_value(); }
  const std::optional<std::vector<ClassId>>& gt_labels() const noexcept { return gt_labels_; }

 private:
  std::vector<Vec3> positions_;
  std::optional<std::vector<Rgb>> colors_;
  std::optional<std::vector<ClassId>> gt_labels_;
};

}  // namespace lfseg
