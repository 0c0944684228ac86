#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "lfseg/error.hpp"
#include "lfseg/point_cloud.hpp"

namespace lfseg {

/// Pinhole intrinsics. Pixel (col u, row v) covers [u,u+1) x [v,v+1).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ArgumentError("focal lengths must be positive");
    if (width < 1 || height < 1) throw ArgumentError("image size must be at least 1x1");
    if (!(cx >= 0.0 && cx <= width) || !(cy >= 0.0 && cy <= height)) {
      throw ArgumentError("principal point outside the image");
    }
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }
};

/// Intrinsics for a horizontal field of view spanning `width` pixels.
inline CameraIntrinsics intrinsics_from_fov(double fov_deg, int width, int height) {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ArgumentError("field of view must lie in (0, 180) degrees");
  if (width < 1 || height < 1) throw ArgumentError("image size must be at least 1x1");
  const double half = fov_deg * std::numbers::pi / 360.0;
  const double f = (width / 2.0) / std::tan(half);
  return CameraIntrinsics{f, f, width / 2.0, height / 2.0, width, height};
}

/// World-to-camera transform: x_cam = R * x_world + t. The camera looks along
/// +z with image +x to the right and image +y down.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }

  /// Camera center in world coordinates.
  Vec3 center() const { return -rotation.transpose() * translation; }

  /// Viewing direction in world coordinates.
  Vec3 forward() const { return rotation.row(2).transpose(); }

  static CameraPose from_center(const Mat3& rotation, const Vec3& center) {
    return CameraPose{rotation, -rotation * center};
  }
};

struct Projection {
  double u = 0.0;  // column, pixels
  double v = 0.0;  // row, pixels
  double depth = 0.0;
};

inline constexpr double kDefaultZNear = 0.1;

/// Projects a world point; empty when it lies at or behind the near plane or
/// its pixel falls outside the image.
inline std::optional<Projection> project_point(const Vec3& world, const CameraIntrinsics& intr,
                                               const CameraPose& pose, double z_near = kDefaultZNear) {
  const Vec3 cam = pose.to_camera(world);
  if (cam.z() <= z_near) return std::nullopt;
  const double u = intr.fx * cam.x() / cam.z() + intr.cx;
  const double v = intr.fy * cam.y() / cam.z() + intr.cy;
  const double col = std::floor(u);
  const double row = std::floor(v);
  if (!(col >= 0.0 && col < intr.width && row >= 0.0 && row < intr.height)) return std::nullopt;
  return Projection{u, v, cam.z()};
}

/// Pose at `camera_pos` gazing at `target`. A gaze parallel to `up_hint`
/// switches the hint to +y.
inline CameraPose look_at(const Vec3& camera_pos, const Vec3& target, Vec3 up_hint = Vec3::UnitZ()) {
  const Vec3 delta = target - camera_pos;
  if (!(delta.norm() > 1e-9)) throw ArgumentError("look_at target coincides with camera position");
  const Vec3 forward = delta.normalized();
  if (forward.cross(up_hint).norm() < 1e-6) up_hint = Vec3::UnitY();
  const Vec3 right = forward.cross(up_hint).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 rotation;
  rotation.row(0) = right.transpose();
  rotation.row(1) = down.transpose();
  rotation.row(2) = forward.transpose();
  return CameraPose::from_center(rotation, camera_pos);
}

/// Largest |R^T R - I| entry.
inline double orthonormality_error(const Mat3& rotation) {
  return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace lfseg
