#pragma once

// Multi-view label fusion.
//
// For every point p of the source cloud and every camera c, the single
// nearest entry of camera c's partial cloud joins the neighbour set N(p) if it
// lies strictly closer than epsilon. Each neighbour votes w / d for its label
// and the point takes the label with the largest accumulated vote.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lfseg/error.hpp"
#include "lfseg/kdtree.hpp"
#include "lfseg/parallel.hpp"
#include "lfseg/partial_cloud.hpp"

namespace lfseg {

struct FusionParams {
  double epsilon = 0.05;  // neighbour radius, meters
  double d_min = kDefaultMinCameraDistance;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("fusion epsilon must be positive");
    if (!(d_min > 0.0) || !std::isfinite(d_min)) throw ConfigError("fusion d_min must be positive");
  }
};

struct FusionResult {
  std::vector<ClassId> labels;        // 0 where no neighbour was found
  std::vector<double> vote_mass;      // winning vote component
  std::vector<std::uint32_t> support; // |N(p)|

  std::size_t size() const noexcept { return labels.size(); }
};

/// A partial cloud together with its spatial index and bounds.
class IndexedPartial {
 public:
  explicit IndexedPartial(const LabeledPartialCloud& partial) : partial_(&partial) {
    std::vector<Vec3> positions;
    positions.reserve(partial.size());
    for (const auto& e : partial.entries) positions.push_back(e.position);
    index_ = build_index(positions);
    lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    for (const auto& p : positions) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
  }

  const LabeledPartialCloud& partial() const noexcept { return *partial_; }
  std::uint32_t camera() const noexcept { return partial_->camera; }
  const KdTree& index() const noexcept { return index_; }

  /// Conservative reject: true when no entry can lie within `radius` of p.
  /// The slack keeps rounding in the box test from rejecting a borderline hit.
  bool outside(const Vec3& p, double radius) const {
    const double r = radius * (1.0 + 1e-9);
    return (p.array() < lo_.array() - r).any() || (p.array() > hi_.array() + r).any();
  }

 private:
  const LabeledPartialCloud* partial_;
  KdTree index_;
  Vec3 lo_, hi_;
};

struct Neighbor {
  std::uint32_t camera = 0;
  const PartialEntry* entry = nullptr;
  double distance = 0.0;
};

/// Indexes every partial, sorted by ascending camera id. Camera ids must be
/// unique.
inline std::vector<IndexedPartial> index_partials(std::span<const LabeledPartialCloud> partials) {
  std::vector<const LabeledPartialCloud*> sorted;
  for (const auto& p : partials) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->camera < b->camera; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->camera == sorted[i - 1]->camera) {
      throw ArgumentError("duplicate camera id " + std::to_string(sorted[i]->camera) + " among partial clouds");
    }
  }
  std::vector<IndexedPartial> indexed;
  indexed.reserve(sorted.size());
  for (auto* p : sorted) indexed.emplace_back(*p);
  return indexed;
}

/// Per-camera nearest labeled entry strictly within epsilon, in camera order.
inline std::vector<Neighbor> gather_neighbors(const Vec3& p, std::span<const IndexedPartial> partials,
                                              const FusionParams& params) {
  std::vector<Neighbor> neighbors;
  for (const auto& ip : partials) {
    if (ip.outside(p, params.epsilon)) continue;
    if (auto hit = ip.index().nearest_within(p, params.epsilon)) {
      neighbors.push_back({ip.camera(), &ip.partial().entries[hit->index], hit->distance});
    }
  }
  return neighbors;
}

/// Vote vector of length `label_count`: V_l = sum of w / max(d, d_min) over
/// neighbours labeled l, accumulated in neighbour order.
inline std::vector<double> vote(std::span<const Neighbor> neighbors, std::size_t label_count,
                                const FusionParams& params) {
  std::vector<double> votes(label_count, 0.0);
  for (const auto& n : neighbors) {
    if (n.entry->label >= label_count) throw ArgumentError("neighbour label outside the label set");
    votes[n.entry->label] += n.entry->confidence / std::max(n.entry->cam_dist, params.d_min);
  }
  return votes;
}

/// Smallest id attaining the maximum vote; 0 when every vote is zero.
inline ClassId assign_label(std::span<const double> votes) {
  ClassId best = kUnlabeled;
  double best_vote = 0.0;
  for (std::size_t l = 0; l < votes.size(); ++l) {
    if (votes[l] > best_vote) {
      best_vote = votes[l];
      best = static_cast<ClassId>(l);
    }
  }
  return best;
}

namespace fusion_detail {

inline void check_labels(const LabeledPartialCloud& partial, std::size_t label_count) {
  for (const auto& e : partial.entries) {
    if (e.label == kUnlabeled || e.label >= label_count) {
      throw ArgumentError("partial cloud " + std::to_string(partial.camera) + " carries invalid label " +
                          std::to_string(e.label));
    }
  }
}

inline void check_labels(std::span<const LabeledPartialCloud> partials, std::size_t label_count) {
  for (const auto& partial : partials) check_labels(partial, label_count);
}

}  // namespace fusion_detail

/// Streaming fusion: partial clouds are added one at a time in strictly
/// increasing camera order and can be dropped afterwards. Per-point votes are
/// kept densely (points x labels), so each vote sum is accumulated in the same
/// camera order as a point-by-point neighbour scan.
class FusionAccumulator {
 public:
  FusionAccumulator(const PointCloud& cloud, const FusionParams& params, std::size_t label_count,
                    std::size_t workers = 1)
      : cloud_(&cloud), params_(params), label_count_(label_count), workers_(workers) {
    params_.validate();
    if (label_count_ == 0) throw ArgumentError("fusion needs a non-empty label set");
    votes_.assign(cloud.size() * label_count_, 0.0);
    support_.assign(cloud.size(), 0);
  }

  void add(const LabeledPartialCloud& partial) {
    if (last_camera_ && partial.camera <= *last_camera_) {
      throw ArgumentError(partial.camera == *last_camera_
                              ? "duplicate camera id " + std::to_string(partial.camera) + " among partial clouds"
                              : "partial clouds must be added in increasing camera order");
    }
    fusion_detail::check_labels(partial, label_count_);
    last_camera_ = partial.camera;
    if (partial.empty()) return;
    const IndexedPartial ip(partial);
    const double eps = params_.epsilon;
    parallel_for(cloud_->size(), workers_, [&](std::size_t n) {
      const Vec3& p = cloud_->position(n);
      if (ip.outside(p, eps)) return;
      const auto hit = ip.index().nearest_within(p, eps);
      if (!hit) return;
      const PartialEntry& e = partial.entries[hit->index];
      votes_[n * label_count_ + e.label] += e.confidence / std::max(e.cam_dist, params_.d_min);
      ++support_[n];
    });
  }

  std::span<const double> votes(std::size_t n) const { return {votes_.data() + n * label_count_, label_count_}; }
  std::uint32_t support(std::size_t n) const { return support_[n]; }

  FusionResult result() const {
    FusionResult r;
    r.labels.assign(cloud_->size(), kUnlabeled);
    r.vote_mass.assign(cloud_->size(), 0.0);
    r.support = support_;
    for (std::size_t n = 0; n < cloud_->size(); ++n) {
      if (support_[n] == 0) continue;
      const ClassId label = assign_label(votes(n));
      r.labels[n] = label;
      r.vote_mass[n] = votes(n)[label];
    }
    return r;
  }

 private:
  const PointCloud* cloud_;
  FusionParams params_;
  std::size_t label_count_;
  std::size_t workers_;
  std::optional<std::uint32_t> last_camera_;
  std::vector<double> votes_;
  std::vector<std::uint32_t> support_;
};

/// Partials sorted by ascending camera id.
inline std::vector<const LabeledPartialCloud*> camera_order(std::span<const LabeledPartialCloud> partials) {
  std::vector<const LabeledPartialCloud*> sorted;
  for (const auto& p : partials) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->camera < b->camera; });
  return sorted;
}

/// Fuses per-camera partial clouds onto every point of `cloud`. The result is
/// bit-identical for any worker count and any ordering of `partials`.
inline FusionResult fuse(const PointCloud& cloud, std::span<const LabeledPartialCloud> partials,
                         const FusionParams& params, std::size_t label_count, std::size_t workers = 1) {
  fusion_detail::check_labels(partials, label_count);
  FusionAccumulator acc(cloud, params, label_count, workers);
  for (const auto* p : camera_order(partials)) acc.add(*p);
  return acc.result();
}

}  // namespace lfseg
