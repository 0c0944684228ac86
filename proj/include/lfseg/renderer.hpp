#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lfseg/camera.hpp"
#include "lfseg/grid.hpp"
#include "lfseg/point_cloud.hpp"

namespace lfseg {

/// Marks a pixel that no point's splat reached.
inline constexpr std::uint32_t kNoPoint = std::numeric_limits<std::uint32_t>::max();

inline constexpr double kDefaultSplatRadius = 0.01;
inline constexpr double kMinSplatPixels = 0.5;
inline constexpr Rgb kBackgroundColor{0, 0, 0};
inline constexpr Rgb kUncoloredPoint{180, 180, 180};

/// One rendered virtual-camera view with its pixel->point correspondence.
struct ViewRender {
  Grid<Rgb> image;
  Grid<double> depth;              // +inf where empty
  Grid<std::uint32_t> point_map;   // kNoPoint where empty
  CameraPose pose;
  CameraIntrinsics intr;
  Vec3 camera_center = Vec3::Zero();

  int width() const noexcept { return intr.width; }
  int height() const noexcept { return intr.height; }
  bool mapped(int col, int row) const { return point_map(col, row) != kNoPoint; }
};

struct RenderParams {
  double splat_radius = kDefaultSplatRadius;
  double z_near = kDefaultZNear;
};

/// Splat footprint of a projected point: every pixel whose center lies within
/// `radius` of (u, v), plus the pixel containing (u, v) itself.
template <typename Visit>
void for_each_splat_pixel(const Projection& proj, double radius, int width, int height, Visit&& visit) {
  const double r2 = radius * radius;
  const int home_col = static_cast<int>(std::floor(proj.u));
  const int home_row = static_cast<int>(std::floor(proj.v));
  const int col0 = std::max(0, static_cast<int>(std::floor(proj.u - radius - 0.5)));
  const int col1 = std::min(width - 1, static_cast<int>(std::ceil(proj.u + radius)));
  const int row0 = std::max(0, static_cast<int>(std::floor(proj.v - radius - 0.5)));
  const int row1 = std::min(height - 1, static_cast<int>(std::ceil(proj.v + radius)));
  for (int row = row0; row <= row1; ++row) {
    const double dv = row + 0.5 - proj.v;
    for (int col = col0; col <= col1; ++col) {
      const double du = col + 0.5 - proj.u;
      if (du * du + dv * dv <= r2 || (col == home_col && row == home_row)) visit(col, row);
    }
  }
}

/// Projected splat radius in pixels for a sphere at `depth`.
inline double splat_pixels(const CameraIntrinsics& intr, double splat_radius, double depth) {
  return std::max(intr.fx * splat_radius / depth, kMinSplatPixels);
}

/// Z-buffered sphere-splat rendering. Points are drawn in index order and a
/// pixel is overwritten only by a strictly nearer sphere center, so depth
/// ties keep the lower point index.
inline ViewRender render_view(const PointCloud& cloud, const CameraIntrinsics& intr, const CameraPose& pose,
                              const RenderParams& params = {}) {
  intr.validate();
  if (!(params.splat_radius > 0.0)) throw ArgumentError("splat radius must be positive");
  if (!(params.z_near > 0.0)) throw ArgumentError("z_near must be positive");
  if (cloud.size() >= kNoPoint) throw ArgumentError("point cloud too large for 32-bit point indices");

  ViewRender view{Grid<Rgb>(intr.width, intr.height, kBackgroundColor),
                  Grid<double>(intr.width, intr.height, std::numeric_limits<double>::infinity()),
                  Grid<std::uint32_t>(intr.width, intr.height, kNoPoint),
                  pose,
                  intr,
                  pose.center()};

  const auto& positions = cloud.positions();
  const auto& colors = cloud.colors();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto proj = project_point(positions[i], intr, pose, params.z_near);
    if (!proj) continue;
    const Rgb color = colors ? (*colors)[i] : kUncoloredPoint;
    const double radius = splat_pixels(intr, params.splat_radius, proj->depth);
    for_each_splat_pixel(*proj, radius, intr.width, intr.height, [&](int col, int row) {
      const std::size_t k = view.depth.index(col, row);
      if (proj->depth < view.depth[k]) {
        view.depth[k] = proj->depth;
        view.point_map[k] = static_cast<std::uint32_t>(i);
        view.image[k] = color;
      }
    });
  }
  return view;
}

/// Number of pixels holding a point.
inline std::size_t mapped_pixel_count(const ViewRender& view) {
  return static_cast<std::size_t>(
      std::count_if(view.point_map.data().begin(), view.point_map.data().end(), [](auto p) { return p != kNoPoint; }));
}

}  // namespace lfseg
