#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lfseg/camera.hpp"
#include "lfseg/error.hpp"

namespace lfseg {

/// Sensor path along which virtual cameras are placed.
struct Trajectory {
  std::vector<Vec3> waypoints;
  /// Per-waypoint heading about world z (radians); applies to the segment
  /// starting at that waypoint. Empty, or one entry per waypoint.
  std::vector<std::optional<double>> headings;
  double spacing = 1.0;

  void validate() const {
    if (waypoints.empty()) throw ArgumentError("trajectory has no waypoints");
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ArgumentError("trajectory spacing must be positive");
    if (!headings.empty() && headings.size() != waypoints.size()) {
      throw ArgumentError("trajectory headings must match waypoint count");
    }
    for (const auto& w : waypoints) {
      if (!is_finite(w)) throw ArgumentError("non-finite trajectory waypoint");
    }
  }

  std::optional<double> heading(std::size_t i) const {
    return i < headings.size() ? headings[i] : std::nullopt;
  }

  /// {"spacing": s, "waypoints": [{"x":..,"y":..,"z":..[,"heading":..]}, ...]}
  static Trajectory from_json(const nlohmann::json& j) {
    Trajectory traj;
    try {
      traj.spacing = j.at("spacing").get<double>();
      bool any_heading = false;
      for (const auto& w : j.at("waypoints")) {
        traj.waypoints.emplace_back(w.at("x").get<double>(), w.at("y").get<double>(), w.at("z").get<double>());
        if (w.contains("heading")) {
          traj.headings.emplace_back(w.at("heading").get<double>());
          any_heading = true;
        } else {
          traj.headings.emplace_back(std::nullopt);
        }
      }
      if (!any_heading) traj.headings.clear();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed trajectory: ") + e.what());
    }
    return traj;
  }

  nlohmann::json to_json() const {
    nlohmann::json waypoints_json = nlohmann::json::array();
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      nlohmann::json w{{"x", waypoints[i].x()}, {"y", waypoints[i].y()}, {"z", waypoints[i].z()}};
      if (auto h = heading(i)) w["heading"] = *h;
      waypoints_json.push_back(std::move(w));
    }
    return {{"spacing", spacing}, {"waypoints", std::move(waypoints_json)}};
  }

  static Trajectory load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trajectory file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("trajectory file " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
  }
};

/// A position sampled along a trajectory with its travel heading.
struct TrajectorySample {
  Vec3 position;
  double heading = 0.0;
};

/// Samples at arc length 0, spacing, 2*spacing, ... up to the path length.
/// A sample belongs to the segment whose half-open arc-length interval holds
/// it (the final sample at the path end belongs to the last segment). Heading
/// comes from the segment's start waypoint when given, otherwise from the
/// horizontal segment direction; a single waypoint without heading faces +x.
inline std::vector<TrajectorySample> resample(const Trajectory& traj) {
  traj.validate();
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < traj.waypoints.size(); ++i) {
    cumulative.push_back(cumulative.back() + (traj.waypoints[i] - traj.waypoints[i - 1]).norm());
  }
  const double length = cumulative.back();

  auto segment_heading = [&](std::size_t seg) {
    if (auto h = traj.heading(seg)) return *h;
    if (traj.waypoints.size() < 2) return 0.0;
    // Skip zero-length segments when looking for a direction.
    for (std::size_t s = seg; s + 1 < traj.waypoints.size(); ++s) {
      const Vec3 d = traj.waypoints[s + 1] - traj.waypoints[s];
      if (std::hypot(d.x(), d.y()) > 0.0) return std::atan2(d.y(), d.x());
    }
    for (std::size_t s = seg; s > 0; --s) {
      const Vec3 d = traj.waypoints[s] - traj.waypoints[s - 1];
      if (std::hypot(d.x(), d.y()) > 0.0) return std::atan2(d.y(), d.x());
    }
    return 0.0;
  };

  std::vector<TrajectorySample> samples;
  const auto count = static_cast<std::size_t>(std::floor(length / traj.spacing + 1e-9)) + 1;
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = std::min(length, static_cast<double>(k) * traj.spacing);
    while (seg + 2 < traj.waypoints.size() && s >= cumulative[seg + 1]) ++seg;
    Vec3 position = traj.waypoints[seg];
    if (traj.waypoints.size() > 1) {
      const double seg_len = cumulative[seg + 1] - cumulative[seg];
      const double alpha = seg_len > 0.0 ? (s - cumulative[seg]) / seg_len : 0.0;
      position = traj.waypoints[seg] + alpha * (traj.waypoints[seg + 1] - traj.waypoints[seg]);
    }
    samples.push_back({position, segment_heading(seg)});
  }
  return samples;
}

struct PlacementParams {
  std::vector<double> yaw_set{0.0, std::numbers::pi / 2, std::numbers::pi, 3 * std::numbers::pi / 2};
  double pitch = 0.0;          // radians, positive tilts upward
  double height_offset = 0.0;  // added to waypoint z
};

/// Unit viewing direction for a heading/yaw/pitch triple.
inline Vec3 gaze_direction(double heading, double yaw, double pitch) {
  const double a = heading + yaw;
  return Vec3(std::cos(a) * std::cos(pitch), std::sin(a) * std::cos(pitch), std::sin(pitch));
}

/// One pose per (resampled position, yaw), waypoint-major. Yaw is measured
/// counter-clockwise about +z from the local travel heading.
inline std::vector<CameraPose> place_cameras(const Trajectory& traj, const PlacementParams& params) {
  if (params.yaw_set.empty()) throw ArgumentError("yaw set is empty");
  std::vector<CameraPose> poses;
  for (const auto& sample : resample(traj)) {
    const Vec3 position = sample.position + Vec3(0.0, 0.0, params.height_offset);
    for (double yaw : params.yaw_set) {
      poses.push_back(look_at(position, position + gaze_direction(sample.heading, yaw, params.pitch)));
    }
  }
  return poses;
}

}  // namespace lfseg
