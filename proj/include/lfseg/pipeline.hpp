#pragma once

// In-memory pipeline building blocks: label every trajectory view, run
// bird's-eye refinement on the triggered ones.

#include <cstdint>
#include <string>
#include <vector>

#include "lfseg/camera.hpp"
#include "lfseg/parallel.hpp"
#include "lfseg/partial_cloud.hpp"
#include "lfseg/point_cloud.hpp"
#include "lfseg/refinement.hpp"
#include "lfseg/renderer.hpp"
#include "lfseg/segmenter.hpp"

namespace lfseg {

/// Poses sharing one set of intrinsics and render settings.
struct ViewSet {
  CameraIntrinsics intr;
  RenderParams render;
  std::vector<CameraPose> poses;

  std::size_t size() const noexcept { return poses.size(); }
};

inline std::string view_id(std::size_t index) { return std::to_string(index); }

struct LabelingParams {
  std::vector<std::string> prompts;
  double confidence_floor = kDefaultConfidenceFloor;
  double d_min = kDefaultMinCameraDistance;
};

/// Render -> segment -> floor -> back-project for every view; camera id of
/// view i is i. Detections that pass the floor are kept in `detections` when
/// given.
inline std::vector<LabeledPartialCloud> label_views(const PointCloud& cloud, const ViewSet& views,
                                                    const Segmenter& segmenter, const LabelingParams& params,
                                                    std::size_t workers,
                                                    std::vector<std::vector<Detection2D>>* detections = nullptr) {
  std::vector<LabeledPartialCloud> partials(views.size());
  if (detections) detections->assign(views.size(), {});
  parallel_for(views.size(), workers, [&](std::size_t v) {
    const ViewRender view = render_view(cloud, views.intr, views.poses[v], views.render);
    auto dets = apply_confidence_floor(segmenter.segment(view, cloud, view_id(v), params.prompts),
                                       params.confidence_floor);
    partials[v] = backproject_mask(view, cloud, dets, params.d_min, static_cast<std::uint32_t>(v));
    if (detections) (*detections)[v] = std::move(dets);
  }, 1);
  return partials;
}

/// Builds partial clouds `make(v)` in parallel batches of `workers` views and
/// hands them to `consume(v, partial)` in view order, so at most one batch is
/// held in memory.
template <typename Make, typename Consume>
void stream_partials(std::size_t count, std::size_t workers, Make&& make, Consume&& consume) {
  const std::size_t batch = std::max<std::size_t>(workers, 1);
  for (std::size_t begin = 0; begin < count; begin += batch) {
    const std::size_t n = std::min(batch, count - begin);
    std::vector<LabeledPartialCloud> partials(n);
    parallel_for(n, workers, [&](std::size_t i) { partials[i] = make(begin + i); }, 1);
    for (std::size_t i = 0; i < n; ++i) consume(begin + i, partials[i]);
  }
}

/// Finds triggers view by view and refines each of them. Refined cameras are
/// numbered from `first_camera` in trigger order.
inline std::vector<RefinementOutcome> refine_views(const PointCloud& cloud, const ViewSet& views,
                                                   const std::vector<std::vector<Detection2D>>& detections,
                                                   const RefinementConfig& cfg, const Segmenter& segmenter,
                                                   const LabelingParams& params, std::uint32_t first_camera,
                                                   std::size_t workers) {
  if (detections.size() != views.size()) throw ArgumentError("detections are not aligned with views");
  if (!cfg.enabled) return {};
  cfg.validate();

  std::vector<std::vector<RefinementTrigger>> per_view(views.size());
  parallel_for(views.size(), workers, [&](std::size_t v) {
    const bool candidate = std::any_of(detections[v].begin(), detections[v].end(), [&](const Detection2D& d) {
      return cfg.target_classes.contains(d.label()) && d.confidence() >= cfg.trigger_confidence;
    });
    if (!candidate) return;
    std::vector<ViewRender> rendered;
    rendered.push_back(render_view(cloud, views.intr, views.poses[v], views.render));
    per_view[v] = find_triggers({detections[v]}, cfg, rendered, cloud);
    for (auto& t : per_view[v]) t.view = v;
  }, 1);

  std::vector<RefinementTrigger> triggers;
  for (auto& list : per_view) {
    for (auto& t : list) triggers.push_back(std::move(t));
  }

  const RefineContext ctx{cloud, views.intr, views.render, segmenter, params.d_min, params.confidence_floor};
  std::vector<RefinementOutcome> outcomes(triggers.size());
  parallel_for(triggers.size(), workers, [&](std::size_t i) {
    const auto& t = triggers[i];
    outcomes[i] = refine(t, views.poses[t.view].center(), cfg, ctx, first_camera + static_cast<std::uint32_t>(i),
                         view_id(t.view));
  }, 1);
  return outcomes;
}

inline std::vector<LabeledPartialCloud> refined_partials(const std::vector<RefinementOutcome>& outcomes) {
  std::vector<LabeledPartialCloud> out;
  for (const auto& o : outcomes) {
    if (o.partial) out.push_back(*o.partial);
  }
  return out;
}

}  // namespace lfseg
