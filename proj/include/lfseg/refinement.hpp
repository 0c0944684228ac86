#pragma once

// Bird's-eye refinement.
//
// When a trajectory view detects one of the user-selected classes, the camera
// is raised vertically by each configured offset and re-aimed with look-at at
// the surface point under the detection's bbox center. Of all detections of
// that class in the raised views, the single most confident one is
// back-projected and handed to fusion as an extra camera.

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "lfseg/camera.hpp"
#include "lfseg/fusion.hpp"
#include "lfseg/partial_cloud.hpp"
#include "lfseg/renderer.hpp"
#include "lfseg/segmenter.hpp"

namespace lfseg {

enum class MergeMode { vote, override_labels };

inline MergeMode parse_merge_mode(const std::string& s) {
  if (s == "vote") return MergeMode::vote;
  if (s == "override") return MergeMode::override_labels;
  throw ConfigError("merge mode must be \"vote\" or \"override\", got \"" + s + "\"");
}

inline std::string to_string(MergeMode m) { return m == MergeMode::vote ? "vote" : "override"; }

struct RefinementConfig {
  std::set<ClassId> target_classes;
  double trigger_confidence = 0.5;
  std::vector<double> vertical_offsets{5.0, 10.0, 15.0};
  bool enabled = false;
  MergeMode merge_mode = MergeMode::vote;

  void validate() const {
    if (!(trigger_confidence > 0.0 && trigger_confidence <= 1.0)) {
      throw ConfigError("refinement trigger confidence must lie in (0, 1]");
    }
    for (double dz : vertical_offsets) {
      if (!(dz > 0.0) || !std::isfinite(dz)) throw ConfigError("refinement offsets must be positive and finite");
    }
    if (enabled && target_classes.empty()) throw ConfigError("refinement enabled without target classes");
    if (enabled && vertical_offsets.empty()) throw ConfigError("refinement enabled without vertical offsets");
  }
};

struct RefinementTrigger {
  std::size_t view = 0;
  Detection2D detection;
  std::uint32_t target_index = 0;  // source point under the bbox center
  Vec3 target_point = Vec3::Zero();
};

/// Surface point for a detection: the point mapped at the bbox center pixel,
/// else the minimum-depth mapped pixel inside the bbox (first in row-major
/// order on ties).
inline std::optional<std::uint32_t> trigger_target(const ViewRender& view, const BBox& box) {
  const int cc = (box.x0 + box.x1) / 2;
  const int cr = (box.y0 + box.y1) / 2;
  if (view.point_map.contains(cc, cr) && view.mapped(cc, cr)) return view.point_map(cc, cr);
  std::optional<std::uint32_t> best;
  double best_depth = std::numeric_limits<double>::infinity();
  for (int row = box.y0; row < box.y1; ++row) {
    for (int col = box.x0; col < box.x1; ++col) {
      if (view.mapped(col, row) && view.depth(col, row) < best_depth) {
        best_depth = view.depth(col, row);
        best = view.point_map(col, row);
      }
    }
  }
  return best;
}

/// Scans per-view detections for confident target-class hits. At most one
/// trigger per (view, class) survives: the most confident, first on ties.
inline std::vector<RefinementTrigger> find_triggers(const std::vector<std::vector<Detection2D>>& per_view,
                                                    const RefinementConfig& cfg, const std::vector<ViewRender>& views,
                                                    const PointCloud& cloud) {
  if (per_view.size() != views.size()) throw ArgumentError("detections are not aligned with views");
  std::vector<RefinementTrigger> triggers;
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    std::vector<RefinementTrigger> found;
    for (const auto& det : per_view[v]) {
      if (!cfg.target_classes.contains(det.label()) || det.confidence() < cfg.trigger_confidence) continue;
      const auto target = trigger_target(views[v], det.bbox());
      if (!target) continue;
      auto same = std::find_if(found.begin(), found.end(),
                               [&](const RefinementTrigger& t) { return t.detection.label() == det.label(); });
      RefinementTrigger t{v, det, *target, cloud.position(*target)};
      if (same == found.end()) {
        found.push_back(std::move(t));
      } else if (det.confidence() > same->detection.confidence()) {
        *same = std::move(t);
      }
    }
    std::sort(found.begin(), found.end(),
              [](const auto& a, const auto& b) { return a.detection.label() < b.detection.label(); });
    for (auto& t : found) triggers.push_back(std::move(t));
  }
  return triggers;
}

/// What one refine call tried and kept.
struct RefinementOutcome {
  std::size_t view = 0;
  ClassId label = kUnlabeled;
  std::vector<double> offsets_tried;
  std::optional<double> chosen_offset;
  double chosen_confidence = 0.0;
  std::optional<LabeledPartialCloud> partial;

  std::size_t points_labeled() const { return partial ? partial->size() : 0; }
};

struct RefineContext {
  const PointCloud& cloud;
  const CameraIntrinsics& intr;
  RenderParams render;
  const Segmenter& segmenter;
  double d_min = kDefaultMinCameraDistance;
  double confidence_floor = kDefaultConfidenceFloor;
};

/// View id used when segmenting a raised view.
inline std::string refined_view_id(const std::string& base_view_id, std::size_t offset_index) {
  return base_view_id + "_up" + std::to_string(offset_index);
}

/// Re-renders the trigger's target from each raised position and keeps the
/// most confident target-class detection (ties go to the smaller offset).
inline RefinementOutcome refine(const RefinementTrigger& trigger, const Vec3& base_center,
                                const RefinementConfig& cfg, const RefineContext& ctx, std::uint32_t camera,
                                const std::string& base_view_id) {
  RefinementOutcome outcome;
  outcome.view = trigger.view;
  outcome.label = trigger.detection.label();
  const std::string class_name = ctx.segmenter.labels().name(outcome.label);

  std::vector<std::size_t> order(cfg.vertical_offsets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cfg.vertical_offsets[a] < cfg.vertical_offsets[b]; });

  std::optional<Detection2D> best;
  std::optional<ViewRender> best_view;
  for (std::size_t k : order) {
    const double dz = cfg.vertical_offsets[k];
    const Vec3 position = base_center + Vec3(0.0, 0.0, dz);
    if ((trigger.target_point - position).norm() <= 1e-9) continue;
    outcome.offsets_tried.push_back(dz);
    const CameraPose pose = look_at(position, trigger.target_point);
    ViewRender view = render_view(ctx.cloud, ctx.intr, pose, ctx.render);
    std::vector<Detection2D> detections;
    try {
      detections = ctx.segmenter.segment(view, ctx.cloud, refined_view_id(base_view_id, k), {class_name});
    } catch (const TransportError& e) {
      throw TransportError(std::string(e.what()) + " (refinement offset " + std::to_string(dz) + " m)");
    }
    for (auto& det : apply_confidence_floor(std::move(detections), ctx.confidence_floor)) {
      if (det.label() != outcome.label) continue;
      if (!best || det.confidence() > best->confidence()) {
        best = std::move(det);
        best_view = view;
        outcome.chosen_offset = dz;
        outcome.chosen_confidence = best->confidence();
      }
    }
  }
  if (best) outcome.partial = backproject_mask(*best_view, ctx.cloud, {*best}, ctx.d_min, camera);
  return outcome;
}

/// Override merge step: every point with its own entry in a refined partial
/// takes the refined label (the most confident entry, earliest partial on
/// ties); support and vote mass come from `all`, which has seen every camera.
inline void apply_overrides(FusionResult& result, const FusionAccumulator& all,
                            const std::vector<LabeledPartialCloud>& refined, std::size_t cloud_size) {
  struct Override {
    std::uint32_t point;
    ClassId label;
    double confidence;
    std::size_t order;
  };
  std::vector<Override> overrides;
  for (std::size_t r = 0; r < refined.size(); ++r) {
    for (const auto& e : refined[r].entries) overrides.push_back({e.point_index, e.label, e.confidence, r});
  }
  std::sort(overrides.begin(), overrides.end(), [](const Override& a, const Override& b) {
    if (a.point != b.point) return a.point < b.point;
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.order < b.order;
  });
  overrides.erase(std::unique(overrides.begin(), overrides.end(),
                              [](const Override& a, const Override& b) { return a.point == b.point; }),
                  overrides.end());
  for (const Override& o : overrides) {
    if (o.point >= cloud_size) throw ArgumentError("refined partial references a point outside the cloud");
    result.labels[o.point] = o.label;
    result.support[o.point] = all.support(o.point);
    result.vote_mass[o.point] = all.votes(o.point)[o.label];
  }
}

/// Fuses trajectory partials together with refined ones.
///
/// vote: refined partials join fusion as extra cameras.
/// override: fusion runs on the base partials; every point that has its own
/// entry in a refined partial then takes the refined label (the most
/// confident refined entry, earliest partial on ties) with support and vote
/// mass recomputed over all cameras.
inline FusionResult fuse_with_refinement(const PointCloud& cloud, const std::vector<LabeledPartialCloud>& base,
                                         const std::vector<LabeledPartialCloud>& refined, MergeMode mode,
                                         const FusionParams& params, std::size_t label_count,
                                         std::size_t workers = 1) {
  std::vector<LabeledPartialCloud> all = base;
  all.insert(all.end(), refined.begin(), refined.end());
  if (mode == MergeMode::vote || refined.empty()) return fuse(cloud, all, params, label_count, workers);

  fusion_detail::check_labels(all, label_count);
  FusionAccumulator base_acc(cloud, params, label_count, workers);
  FusionAccumulator all_acc(cloud, params, label_count, workers);
  for (const auto* p : camera_order(all)) {
    all_acc.add(*p);
    if (p < all.data() + base.size()) base_acc.add(*p);
  }
  FusionResult result = base_acc.result();
  apply_overrides(result, all_acc, refined, cloud.size());
  return result;
}

/// fuse_with_refinement for base partials that arrive one at a time. Base
/// cameras must increase and stay below every refined camera id.
class RefinedFusion {
 public:
  RefinedFusion(const PointCloud& cloud, const FusionParams& params, std::size_t label_count, MergeMode mode,
                std::vector<LabeledPartialCloud> refined, std::size_t workers = 1)
      : refined_(std::move(refined)), all_(cloud, params, label_count, workers), size_(cloud.size()) {
    fusion_detail::check_labels(refined_, label_count);
    if (mode == MergeMode::override_labels && !refined_.empty()) base_.emplace(cloud, params, label_count, workers);
  }

  void add_base(const LabeledPartialCloud& partial) {
    all_.add(partial);
    if (base_) base_->add(partial);
  }

  FusionResult result() {
    for (const auto* p : camera_order(refined_)) all_.add(*p);
    if (!base_) return all_.result();
    FusionResult r = base_->result();
    apply_overrides(r, all_, refined_, size_);
    return r;
  }

 private:
  std::vector<LabeledPartialCloud> refined_;
  FusionAccumulator all_;
  std::optional<FusionAccumulator> base_;
  std::size_t size_;
};

inline nlohmann::json outcome_to_json(const RefinementOutcome& o, const LabelSet& labels) {
  nlohmann::json j{{"view", o.view},
                   {"class", labels.name(o.label)},
                   {"offsets_tried", o.offsets_tried},
                   {"chosen_offset", nullptr},
                   {"chosen_confidence", nullptr},
                   {"points_labeled", o.points_labeled()}};
  if (o.chosen_offset) {
    j["chosen_offset"] = *o.chosen_offset;
    j["chosen_confidence"] = o.chosen_confidence;
  }
  return j;
}

}  // namespace lfseg
