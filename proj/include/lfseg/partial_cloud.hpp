#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "lfseg/detection.hpp"
#include "lfseg/point_cloud.hpp"
#include "lfseg/renderer.hpp"

namespace lfseg {

inline constexpr double kDefaultMinCameraDistance = 0.5;

/// A labeled source point recovered from one view.
struct PartialEntry {
  std::uint32_t point_index = 0;
  Vec3 position = Vec3::Zero();  // exact source coordinates
  ClassId label = kUnlabeled;
  double confidence = 0.0;       // in (0, 1]
  double cam_dist = 0.0;         // >= d_min

  friend bool operator==(const PartialEntry&, const PartialEntry&) = default;
};

/// Labeled points observed by one camera, ordered by source point index.
struct LabeledPartialCloud {
  std::uint32_t camera = 0;
  std::vector<PartialEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }

  friend bool operator==(const LabeledPartialCloud&, const LabeledPartialCloud&) = default;
};

/// Drops detections whose confidence is below `floor`.
inline std::vector<Detection2D> apply_confidence_floor(std::vector<Detection2D> detections, double floor) {
  std::erase_if(detections, [floor](const Detection2D& d) { return d.confidence() < floor; });
  return detections;
}

/// Transfers mask labels onto the points that own the masked pixels. Each
/// point keeps its highest-confidence candidate; equal confidences resolve
/// to the lower class id.
inline LabeledPartialCloud backproject_mask(const ViewRender& view, const PointCloud& cloud,
                                            const std::vector<Detection2D>& detections, double d_min,
                                            std::uint32_t camera = 0) {
  if (!(d_min > 0.0)) throw ArgumentError("d_min must be positive");
  struct Candidate {
    std::uint32_t point;
    ClassId label;
    double confidence;
  };
  std::vector<Candidate> candidates;
  for (const auto& det : detections) {
    if (det.frame_width() != view.width() || det.frame_height() != view.height()) {
      throw ArgumentError("detection mask size does not match the view");
    }
    det.for_each_pixel([&](int col, int row) {
      const std::uint32_t p = view.point_map(col, row);
      if (p != kNoPoint) candidates.push_back({p, det.label(), det.confidence()});
    });
  }

  // Best candidate first within each point.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.point != b.point) return a.point < b.point;
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.label < b.label;
  });

  LabeledPartialCloud partial{camera, {}};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i > 0 && candidates[i].point == candidates[i - 1].point) continue;
    const Candidate& c = candidates[i];
    if (c.point >= cloud.size()) throw ArgumentError("view references a point outside the cloud");
    const Vec3& q = cloud.position(c.point);
    partial.entries.push_back({c.point, q, c.label, c.confidence, std::max((q - view.camera_center).norm(), d_min)});
  }
  return partial;
}

// Serialized form keeps point indices only; positions are restored from the
// source cloud so they stay bit-identical.
inline nlohmann::json partial_to_json(const LabeledPartialCloud& partial) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : partial.entries) entries.push_back({e.point_index, e.label, e.confidence, e.cam_dist});
  return {{"camera", partial.camera}, {"entries", std::move(entries)}};
}

inline LabeledPartialCloud partial_from_json(const nlohmann::json& j, const PointCloud& cloud) {
  LabeledPartialCloud partial;
  try {
    partial.camera = j.at("camera").get<std::uint32_t>();
    for (const auto& e : j.at("entries")) {
      PartialEntry entry;
      entry.point_index = e.at(0).get<std::uint32_t>();
      entry.label = e.at(1).get<ClassId>();
      entry.confidence = e.at(2).get<double>();
      entry.cam_dist = e.at(3).get<double>();
      if (entry.point_index >= cloud.size()) throw DataError("partial cloud references a point outside the cloud");
      entry.position = cloud.position(entry.point_index);
      partial.entries.push_back(entry);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed partial cloud: ") + e.what());
  }
  return partial;
}

}  // namespace lfseg
