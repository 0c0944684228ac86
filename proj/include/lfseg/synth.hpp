#pragma once

// Deterministic synthetic labeled scenes.
//
// Each primitive is sampled uniformly over its surface with
// round(area * density) points drawn from a counter-based stream keyed by
// (seed, primitive index), so editing one primitive never perturbs another.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "lfseg/error.hpp"
#include "lfseg/label_set.hpp"
#include "lfseg/parallel.hpp"
#include "lfseg/point_cloud.hpp"
#include "lfseg/rng.hpp"
#include "lfseg/trajectory.hpp"

namespace lfseg {

/// Rectangle origin + a*u + b*v for a, b in [0, 1].
struct PlaneShape {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
};

/// Closed box surface, rotated by `yaw` about +z.
struct BoxShape {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.5);
  double yaw = 0.0;
};

/// Lateral surface of a cylinder (no caps).
struct CylinderShape {
  Vec3 base = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double radius = 1.0;
  double length = 1.0;
};

/// Upper half of a horizontal cylinder's lateral surface.
struct TubeArchShape {
  Vec3 start = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double length = 1.0;
  double radius = 1.0;
};

using Shape = std::variant<PlaneShape, BoxShape, CylinderShape, TubeArchShape>;

struct Primitive {
  Shape shape;
  std::string class_name;
  double density = 1.0;  // points per square meter
  std::optional<Rgb> color;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  Trajectory trajectory;
  std::uint64_t seed = 0;
};

namespace synth_detail {

/// Orthonormal (e1, e2) spanning the plane normal to unit `a`.
inline std::pair<Vec3, Vec3> normal_frame(const Vec3& a) {
  const Vec3 helper = std::abs(a.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 e1 = a.cross(helper).normalized();
  return {e1, a.cross(e1)};
}

inline Mat3 yaw_matrix(double yaw) {
  Mat3 r;
  r << std::cos(yaw), -std::sin(yaw), 0.0, std::sin(yaw), std::cos(yaw), 0.0, 0.0, 0.0, 1.0;
  return r;
}

/// Unit horizontal vector pointing left of `direction`.
inline Vec3 arch_side(const Vec3& direction) { return Vec3::UnitZ().cross(direction).normalized(); }

}  // namespace synth_detail

inline double surface_area(const Shape& shape) {
  return std::visit(
      [](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneShape>) {
          return s.u.cross(s.v).norm();
        } else if constexpr (std::is_same_v<S, BoxShape>) {
          const Vec3& h = s.half_extents;
          return 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
        } else if constexpr (std::is_same_v<S, CylinderShape>) {
          return 2.0 * std::numbers::pi * s.radius * s.length;
        } else {
          return std::numbers::pi * s.radius * s.length;
        }
      },
      shape);
}

inline void validate_shape(const Shape& shape) {
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneShape>) {
          if (!(s.u.cross(s.v).norm() > 0.0)) throw ConfigError("plane edges must span a non-degenerate rectangle");
        } else if constexpr (std::is_same_v<S, BoxShape>) {
          if (!(s.half_extents.minCoeff() > 0.0)) throw ConfigError("box half extents must be positive");
        } else if constexpr (std::is_same_v<S, CylinderShape>) {
          if (!(s.axis.norm() > 0.0) || !(s.radius > 0.0) || !(s.length > 0.0)) {
            throw ConfigError("cylinder needs a non-zero axis and positive radius and length");
          }
        } else {
          const Vec3 horizontal(s.direction.x(), s.direction.y(), 0.0);
          if (!(horizontal.norm() > 0.0) || std::abs(s.direction.z()) > 1e-12 || !(s.radius > 0.0) ||
              !(s.length > 0.0)) {
            throw ConfigError("tube-arch needs a horizontal direction and positive radius and length");
          }
        }
      },
      shape);
}

/// Draws one surface point from `rng`.
inline Vec3 sample_surface(const Shape& shape, CounterRng& rng) {
  using namespace synth_detail;
  return std::visit(
      [&rng](const auto& s) -> Vec3 {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneShape>) {
          const double a = rng.uniform();
          const double b = rng.uniform();
          return s.origin + a * s.u + b * s.v;
        } else if constexpr (std::is_same_v<S, BoxShape>) {
          const Vec3& h = s.half_extents;
          const double areas[3] = {h.y() * h.z(), h.x() * h.z(), h.x() * h.y()};  // faces normal to x, y, z
          const double total = areas[0] + areas[1] + areas[2];
          const double pick = rng.uniform() * total;
          const int axis = pick < areas[0] ? 0 : (pick < areas[0] + areas[1] ? 1 : 2);
          const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
          Vec3 local;
          local[axis] = side * h[axis];
          for (int other = 0; other < 3; ++other) {
            if (other != axis) local[other] = (2.0 * rng.uniform() - 1.0) * h[other];
          }
          return s.center + yaw_matrix(s.yaw) * local;
        } else if constexpr (std::is_same_v<S, CylinderShape>) {
          const Vec3 a = s.axis.normalized();
          const auto [e1, e2] = normal_frame(a);
          const double t = rng.uniform() * s.length;
          const double theta = rng.uniform() * 2.0 * std::numbers::pi;
          return s.base + t * a + s.radius * (std::cos(theta) * e1 + std::sin(theta) * e2);
        } else {
          const Vec3 d = s.direction.normalized();
          const Vec3 side = arch_side(d);
          const double t = rng.uniform() * s.length;
          const double theta = rng.uniform() * std::numbers::pi;
          return s.start + t * d + s.radius * (std::cos(theta) * side + std::sin(theta) * Vec3::UnitZ());
        }
      },
      shape);
}

/// Distance from `p` to the primitive's analytic surface.
inline double surface_distance(const Shape& shape, const Vec3& p) {
  using namespace synth_detail;
  return std::visit(
      [&p](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneShape>) {
          const Vec3 d = p - s.origin;
          const double a = std::clamp(d.dot(s.u) / s.u.squaredNorm(), 0.0, 1.0);
          const double b = std::clamp(d.dot(s.v) / s.v.squaredNorm(), 0.0, 1.0);
          // Edges are orthogonal for every rectangle this module creates.
          const Vec3 closest = s.origin + a * s.u + b * s.v;
          return (p - closest).norm();
        } else if constexpr (std::is_same_v<S, BoxShape>) {
          const Vec3 local = yaw_matrix(s.yaw).transpose() * (p - s.center);
          const Vec3 q = local.cwiseAbs() - s.half_extents;
          const double outside = q.cwiseMax(0.0).norm();
          const double inside = std::min(q.maxCoeff(), 0.0);
          return std::abs(outside + inside);
        } else if constexpr (std::is_same_v<S, CylinderShape>) {
          const Vec3 a = s.axis.normalized();
          const Vec3 d = p - s.base;
          const double t = d.dot(a);
          const double radial = (d - t * a).norm();
          const double axial = std::max({0.0, -t, t - s.length});
          return std::hypot(radial - s.radius, axial);
        } else {
          const Vec3 dir = s.direction.normalized();
          const Vec3 d = p - s.start;
          const double t = d.dot(dir);
          const Vec3 radial = d - t * dir;
          const double axial = std::max({0.0, -t, t - s.length});
          double ring = std::abs(radial.norm() - s.radius);
          if (radial.z() < 0.0) {
            // Below the springing line the nearest arch point is one of the feet.
            const Vec3 side = arch_side(dir);
            ring = std::min((radial - s.radius * side).norm(), (radial + s.radius * side).norm());
          }
          return std::hypot(ring, axial);
        }
      },
      shape);
}

struct GeneratedScene {
  PointCloud cloud;
  Trajectory trajectory;
  std::vector<std::size_t> primitive_offsets;  // first point of each primitive, plus total
};

inline Rgb class_color(const std::string& name) {
  const std::uint64_t h = mix64(fnv1a(name));
  return Rgb{static_cast<std::uint8_t>(64 + (h & 0x7F)), static_cast<std::uint8_t>(64 + ((h >> 8) & 0x7F)),
             static_cast<std::uint8_t>(64 + ((h >> 16) & 0x7F))};
}

inline GeneratedScene generate(const SceneSpec& spec, const LabelSet& labels, std::size_t workers = 1) {
  std::vector<ClassId> ids;
  std::vector<std::size_t> offsets{0};
  for (const auto& prim : spec.primitives) {
    const auto id = labels.find(prim.class_name);
    if (!id || *id == kUnlabeled) throw ConfigError("synthetic primitive uses unknown class \"" + prim.class_name + "\"");
    if (!(prim.density > 0.0) || !std::isfinite(prim.density)) throw ConfigError("primitive density must be positive");
    validate_shape(prim.shape);
    ids.push_back(*id);
    offsets.push_back(offsets.back() + static_cast<std::size_t>(std::llround(surface_area(prim.shape) * prim.density)));
  }

  const std::size_t total = offsets.back();
  std::vector<Vec3> positions(total);
  std::vector<Rgb> colors(total);
  std::vector<ClassId> gt(total);
  parallel_for(spec.primitives.size(), workers, [&](std::size_t k) {
    const auto& prim = spec.primitives[k];
    CounterRng rng(spec.seed, k);
    const Rgb color = prim.color.value_or(class_color(prim.class_name));
    for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) {
      positions[i] = sample_surface(prim.shape, rng);
      colors[i] = color;
      gt[i] = ids[k];
    }
  }, 1);
  return {PointCloud(std::move(positions), std::move(colors), std::move(gt)), spec.trajectory, std::move(offsets)};
}

// ---------------------------------------------------------------------------
// JSON

namespace synth_detail {

inline Vec3 vec3(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace synth_detail

/// {"seed": u64, "trajectory": {...}, "primitives": [{"shape": "plane"|"box"|
/// "cylinder"|"tube-arch", "class": name, "density": pts/m^2, ...}]}
inline SceneSpec scene_from_json(const nlohmann::json& j) {
  using synth_detail::vec3;
  SceneSpec spec;
  try {
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.trajectory = Trajectory::from_json(j.at("trajectory"));
    for (const auto& p : j.at("primitives")) {
      Primitive prim;
      prim.class_name = p.at("class").get<std::string>();
      prim.density = p.at("density").get<double>();
      if (p.contains("color")) {
        const auto c = p.at("color");
        prim.color = Rgb{c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()};
      }
      const std::string shape = p.at("shape").get<std::string>();
      if (shape == "plane") {
        prim.shape = PlaneShape{vec3(p.at("origin")), vec3(p.at("u")), vec3(p.at("v"))};
      } else if (shape == "box") {
        prim.shape = BoxShape{vec3(p.at("center")), vec3(p.at("half_extents")), p.value("yaw", 0.0)};
      } else if (shape == "cylinder") {
        prim.shape = CylinderShape{vec3(p.at("base")), vec3(p.at("axis")), p.at("radius").get<double>(),
                                   p.at("length").get<double>()};
      } else if (shape == "tube-arch") {
        prim.shape = TubeArchShape{vec3(p.at("start")), vec3(p.at("direction")), p.at("length").get<double>(),
                                   p.at("radius").get<double>()};
      } else {
        throw ConfigError("unknown primitive shape \"" + shape + "\"");
      }
      spec.primitives.push_back(std::move(prim));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scene spec: ") + e.what());
  }
  return spec;
}

inline nlohmann::json scene_to_json(const SceneSpec& spec) {
  using synth_detail::to_json;
  nlohmann::json prims = nlohmann::json::array();
  for (const auto& prim : spec.primitives) {
    nlohmann::json p{{"class", prim.class_name}, {"density", prim.density}};
    if (prim.color) p["color"] = {prim.color->r, prim.color->g, prim.color->b};
    std::visit(
        [&p](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, PlaneShape>) {
            p["shape"] = "plane";
            p["origin"] = to_json(s.origin);
            p["u"] = to_json(s.u);
            p["v"] = to_json(s.v);
          } else if constexpr (std::is_same_v<S, BoxShape>) {
            p["shape"] = "box";
            p["center"] = to_json(s.center);
            p["half_extents"] = to_json(s.half_extents);
            p["yaw"] = s.yaw;
          } else if constexpr (std::is_same_v<S, CylinderShape>) {
            p["shape"] = "cylinder";
            p["base"] = to_json(s.base);
            p["axis"] = to_json(s.axis);
            p["radius"] = s.radius;
            p["length"] = s.length;
          } else {
            p["shape"] = "tube-arch";
            p["start"] = to_json(s.start);
            p["direction"] = to_json(s.direction);
            p["length"] = s.length;
            p["radius"] = s.radius;
          }
        },
        prim.shape);
    prims.push_back(std::move(p));
  }
  return {{"seed", spec.seed}, {"trajectory", spec.trajectory.to_json()}, {"primitives", std::move(prims)}};
}

inline SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene spec: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scene spec " + path + " is not valid JSON: " + e.what());
  }
  return scene_from_json(j);
}

}  // namespace lfseg
