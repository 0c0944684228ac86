#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "lfseg/point_cloud.hpp"

namespace lfseg {

struct NearestHit {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact nearest-neighbour index over a fixed set of 3D points.
///
/// Ties in distance resolve to the lowest entry index, so results agree
/// with a first-minimum linear scan.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 2);
      build(0, points_.size());
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  std::optional<NearestHit> nearest(const Vec3& query) const {
    if (points_.empty()) return std::nullopt;
    Best best;
    search(0, query, best);
    return NearestHit{best.index, std::sqrt(best.d2)};
  }

  /// Nearest entry if its distance is strictly below `radius`.
  std::optional<NearestHit> nearest_within(const Vec3& query, double radius) const {
    if (points_.empty()) return std::nullopt;
    // Prune on a slightly inflated squared bound; the exact test below
    // decides inclusion on the true distance.
    const double bound = radius * (1.0 + 1e-12);
    if (box_distance2(nodes_[0], query) >= bound * bound) return std::nullopt;
    Best best;
    best.d2 = bound * bound;
    best.index = kNone;
    search(0, query, best);
    if (best.index == kNone) return std::nullopt;
    const double distance = std::sqrt(best.d2);
    if (!(distance < radius)) return std::nullopt;
    return NearestHit{best.index, distance};
  }

 private:
  static constexpr std::size_t kLeafSize = 8;
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Node {
    Vec3 lo;
    Vec3 hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0;   // child node indices; 0 for leaves
    std::uint32_t right = 0;
  };

  struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t index = kNone;
  };

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    Node node{lo, hi, static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end), 0, 0};
    if (end - begin > kLeafSize) {
      int axis = 0;
      (hi - lo).maxCoeff(&axis);
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
      node.left = build(begin, mid);
      node.right = build(mid, end);
    }
    nodes_[id] = node;
    return id;
  }

  static double box_distance2(const Node& node, const Vec3& q) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = std::max({node.lo[a] - q[a], 0.0, q[a] - node.hi[a]});
      d2 += d * d;
    }
    return d2;
  }

  void search(std::uint32_t id, const Vec3& q, Best& best) const {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        if (d2 < best.d2 || (d2 == best.d2 && idx < best.index)) {
          best.d2 = d2;
          best.index = idx;
        }
      }
      return;
    }
    const double dl = box_distance2(nodes_[node.left], q);
    const double dr = box_distance2(nodes_[node.right], q);
    const std::uint32_t first = dl <= dr ? node.left : node.right;
    const std::uint32_t second = dl <= dr ? node.right : node.left;
    // "<=" keeps equal-distance subtrees in play for the index tie-break.
    if (std::min(dl, dr) <= best.d2) search(first, q, best);
    if (std::max(dl, dr) <= best.d2) search(second, q, best);
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Builds the exact nearest-neighbour index over `entries`.
inline KdTree build_index(std::span<const Vec3> entries) { return KdTree(entries); }

}  // namespace lfseg
