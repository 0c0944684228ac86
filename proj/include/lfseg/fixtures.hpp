#pragma once

// Bundled street scenes.
//
//   scene1-tunnel  road, building facades with window and door panels, and a
//                  tube-arch tunnel over the road
//   scene2-bridge  road, a girder deck alongside the road, a powerline and
//                  trees. The deck top sits above camera height and behind a
//                  dense fascia, so trajectory views see little of it.
//
// Primitives of different classes are kept at least 0.1 m apart so that a
// 0.05 m fusion radius never mixes classes.

#include <string>
#include <vector>

#include "lfseg/synth.hpp"

namespace lfseg::fixtures {

inline LabelSet street_labels() {
  return LabelSet({"road", "building", "window", "door", "powerline", "vehicle", "tree", "tunnel", "bridge"});
}

namespace detail {

inline Trajectory straight_drive(double length, double spacing, double camera_height) {
  Trajectory traj;
  traj.waypoints = {Vec3(0.0, 0.0, camera_height), Vec3(length, 0.0, camera_height)};
  traj.spacing = spacing;
  return traj;
}

struct Opening {
  double x0, x1, z0, z1;
  std::string class_name;
};

/// Facade plane at y = `wall_y` spanning [x0, x1] x [0, height], with
/// rectangular holes filled by panels set `panel_offset` toward the road.
inline void add_facade(std::vector<Primitive>& out, double wall_y, double x0, double x1, double height,
                       double density, double panel_offset) {
  std::vector<Opening> openings;
  for (double x = x0 + 2.0; x + 1.2 <= x1 - 1.0; x += 4.0) {
    const bool door = static_cast<long long>((x - x0 - 2.0) / 4.0) % 2 == 0;
    if (door) {
      openings.push_back({x, x + 1.2, 0.0, 2.2, "door"});
    } else {
      openings.push_back({x, x + 1.2, 1.0, 2.4, "window"});
    }
    openings.push_back({x, x + 1.2, 4.0, 5.4, "window"});
    openings.push_back({x, x + 1.2, 7.5, 8.9, "window"});
  }

  std::vector<double> xs{x0, x1}, zs{0.0, height};
  for (const auto& o : openings) {
    xs.insert(xs.end(), {o.x0, o.x1});
    zs.insert(zs.end(), {o.z0, o.z1});
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());

  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t k = 0; k + 1 < zs.size(); ++k) {
      const double cx = 0.5 * (xs[i] + xs[i + 1]);
      const double cz = 0.5 * (zs[k] + zs[k + 1]);
      const bool hole = std::any_of(openings.begin(), openings.end(), [&](const Opening& o) {
        return cx > o.x0 && cx < o.x1 && cz > o.z0 && cz < o.z1;
      });
      if (hole) continue;
      out.push_back({PlaneShape{Vec3(xs[i], wall_y, zs[k]), Vec3(xs[i + 1] - xs[i], 0, 0), Vec3(0, 0, zs[k + 1] - zs[k])},
                     "building", density, Rgb{196, 170, 140}});
    }
  }
  const double panel_y = wall_y - std::copysign(panel_offset, wall_y);
  for (const auto& o : openings) {
    const Rgb color = o.class_name == "door" ? Rgb{110, 70, 40} : Rgb{70, 110, 150};
    out.push_back({PlaneShape{Vec3(o.x0, panel_y, o.z0), Vec3(o.x1 - o.x0, 0, 0), Vec3(0, 0, o.z1 - o.z0)},
                   o.class_name, density, color});
  }
}

}  // namespace detail

/// ~5e5 points at the default density.
inline SceneSpec scene1_tunnel(std::uint64_t seed = 1, double density = 140.0) {
  SceneSpec spec;
  spec.seed = seed;
  spec.trajectory = detail::straight_drive(120.0, 2.0, 2.0);
  auto& prims = spec.primitives;
  prims.push_back({PlaneShape{Vec3(0, -5, 0), Vec3(120, 0, 0), Vec3(0, 10, 0)}, "road", density, Rgb{90, 90, 95}});
  for (double side : {-1.0, 1.0}) {
    detail::add_facade(prims, 8.0 * side, 2.0, 42.0, 12.0, density, 0.15);
    detail::add_facade(prims, 8.0 * side, 78.0, 118.0, 12.0, density, 0.15);
  }
  prims.push_back({TubeArchShape{Vec3(50, 0, 0), Vec3::UnitX(), 20.0, 7.0}, "tunnel", density, Rgb{150, 150, 140}});
  return spec;
}

/// Bridge deck (box) spanning the road 1.5 m above the camera path, so its
/// top face is never seen from the trajectory.
inline SceneSpec scene2_bridge(std::uint64_t seed = 2, double density = 100.0) {
  SceneSpec spec;
  spec.seed = seed;
  spec.trajectory = detail::straight_drive(120.0, 2.0, 2.0);
  auto& prims = spec.primitives;
  prims.push_back({PlaneShape{Vec3(0, -5, 0), Vec3(120, 0, 0), Vec3(0, 10, 0)}, "road", density, Rgb{90, 90, 95}});
  // Deck over [48, 72] x [14, 20] x [2.6, 4.4]. Fascia and end caps are dense
  // enough to stay opaque at 0.01 m splats from the road.
  const Rgb deck{160, 160, 160};
  const double x0 = 48.0, len = 24.0, y0 = 14.0, wid = 6.0, zb = 2.6, zt = 4.4;
  prims.push_back({PlaneShape{Vec3(x0, y0, zt), Vec3(len, 0, 0), Vec3(0, wid, 0)}, "bridge", 2.5 * density, deck});
  prims.push_back({PlaneShape{Vec3(x0, y0, zb), Vec3(len, 0, 0), Vec3(0, wid, 0)}, "bridge", density, deck});
  prims.push_back({PlaneShape{Vec3(x0, y0, zb), Vec3(len, 0, 0), Vec3(0, 0, zt - zb)}, "bridge", 10.0 * density, deck});
  prims.push_back({PlaneShape{Vec3(x0, y0 + wid, zb), Vec3(len, 0, 0), Vec3(0, 0, zt - zb)}, "bridge", density, deck});
  for (double x : {x0, x0 + len}) {
    prims.push_back({PlaneShape{Vec3(x, y0, zb), Vec3(0, wid, 0), Vec3(0, 0, zt - zb)}, "bridge", 10.0 * density, deck});
  }
  for (double x : {15.0, 45.0, 75.0, 105.0}) {
    prims.push_back({CylinderShape{Vec3(x, -7.0, 0.0), Vec3::UnitZ(), 0.15, 8.0}, "powerline", density, Rgb{120, 100, 80}});
  }
  for (double y : {-6.6, -7.4}) {
    prims.push_back({CylinderShape{Vec3(15.0, y, 7.5), Vec3::UnitX(), 0.03, 90.0}, "powerline", density, Rgb{40, 40, 40}});
  }
  for (double x : {10.0, 25.0, 40.0, 80.0, 95.0, 110.0}) {
    prims.push_back({CylinderShape{Vec3(x, -10.5, 0.0), Vec3::UnitZ(), 0.2, 3.0}, "tree", density, Rgb{100, 80, 50}});
    prims.push_back({BoxShape{Vec3(x, -10.5, 4.25), Vec3(1.5, 1.5, 1.25), 0.0}, "tree", density, Rgb{60, 130, 60}});
  }
  return spec;
}

inline std::vector<std::string> fixture_names() { return {"scene1-tunnel", "scene2-bridge"}; }

inline SceneSpec fixture(const std::string& name, std::uint64_t seed) {
  if (name == "scene1-tunnel") return scene1_tunnel(seed);
  if (name == "scene2-bridge") return scene2_bridge(seed);
  throw ConfigError("unknown fixture \"" + name + "\"");
}

}  // namespace lfseg::fixtures
