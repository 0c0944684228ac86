#pragma once

// 2D detections and their JSON wire form.
//
// Entry schema (shared by mask files and the remote segmenter):
//   {"label": "building", "confidence": 0.87, "bbox": [x0, y0, x1, y1],
//    "mask_rle": {"size": [H, W], "counts": [zeros, ones, zeros, ...]}}
// bbox is half-open in pixels. RLE runs are row-major over the full H x W
// frame and always begin with a (possibly empty) run of zeros.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "lfseg/error.hpp"
#include "lfseg/grid.hpp"
#include "lfseg/label_set.hpp"

namespace lfseg {

struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;  // exclusive

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool contains(int col, int row) const noexcept { return col >= x0 && col < x1 && row >= y0 && row < y1; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

using Bitmask = Grid<std::uint8_t>;

/// Labeled mask from a 2D segmenter. The mask is stored cropped to the bbox,
/// so every set pixel lies inside it by construction.
class Detection2D {
 public:
  Detection2D() = default;

  /// Builds a detection from a full-frame mask. The bbox must satisfy
  /// 0 <= x0 < x1 <= W, 0 <= y0 < y1 <= H and contain every set pixel.
  Detection2D(ClassId label, double confidence, BBox bbox, const Bitmask& full_mask)
      : label_(label), confidence_(confidence), bbox_(bbox), frame_width_(full_mask.width()),
        frame_height_(full_mask.height()) {
    check_invariants();
    crop_ = Bitmask(bbox.width(), bbox.height(), 0);
    for (int row = 0; row < full_mask.height(); ++row) {
      for (int col = 0; col < full_mask.width(); ++col) {
        if (!full_mask(col, row)) continue;
        if (!bbox.contains(col, row)) {
          throw ArgumentError("mask pixel (" + std::to_string(col) + "," + std::to_string(row) +
                              ") lies outside its bbox");
        }
        crop_(col - bbox.x0, row - bbox.y0) = 1;
      }
    }
  }

  /// Builds a detection from a bbox-local mask.
  static Detection2D from_crop(ClassId label, double confidence, BBox bbox, int frame_width, int frame_height,
                               Bitmask crop) {
    Detection2D d;
    d.label_ = label;
    d.confidence_ = confidence;
    d.bbox_ = bbox;
    d.frame_width_ = frame_width;
    d.frame_height_ = frame_height;
    d.check_invariants();
    if (crop.width() != bbox.width() || crop.height() != bbox.height()) {
      throw ArgumentError("cropped mask does not match bbox size");
    }
    d.crop_ = std::move(crop);
    return d;
  }

  ClassId label() const noexcept { return label_; }
  double confidence() const noexcept { return confidence_; }
  const BBox& bbox() const noexcept { return bbox_; }
  int frame_width() const noexcept { return frame_width_; }
  int frame_height() const noexcept { return frame_height_; }
  const Bitmask& crop() const noexcept { return crop_; }

  void set_label(ClassId label) {
    if (label == kUnlabeled) throw ArgumentError("detection label must not be unlabeled");
    label_ = label;
  }
  void set_confidence(double confidence) {
    if (!(confidence > 0.0 && confidence <= 1.0)) throw ArgumentError("detection confidence must lie in (0, 1]");
    confidence_ = confidence;
  }

  bool covers(int col, int row) const {
    return bbox_.contains(col, row) && crop_(col - bbox_.x0, row - bbox_.y0) != 0;
  }

  std::size_t area() const {
    return static_cast<std::size_t>(std::count(crop_.data().begin(), crop_.data().end(), std::uint8_t{1}));
  }

  Bitmask full_mask() const {
    Bitmask full(frame_width_, frame_height_, 0);
    for (int row = 0; row < bbox_.height(); ++row) {
      for (int col = 0; col < bbox_.width(); ++col) full(bbox_.x0 + col, bbox_.y0 + row) = crop_(col, row);
    }
    return full;
  }

  /// Calls visit(col, row) for each set pixel in row-major order.
  template <typename Visit>
  void for_each_pixel(Visit&& visit) const {
    for (int row = 0; row < bbox_.height(); ++row) {
      for (int col = 0; col < bbox_.width(); ++col) {
        if (crop_(col, row)) visit(bbox_.x0 + col, bbox_.y0 + row);
      }
    }
  }

  friend bool operator==(const Detection2D&, const Detection2D&) = default;

 private:
  void check_invariants() const {
    if (label_ == kUnlabeled) throw ArgumentError("detection label must not be unlabeled");
    if (!(confidence_ > 0.0 && confidence_ <= 1.0)) throw ArgumentError("detection confidence must lie in (0, 1]");
    if (!(bbox_.x0 >= 0 && bbox_.x0 < bbox_.x1 && bbox_.x1 <= frame_width_ && bbox_.y0 >= 0 &&
          bbox_.y0 < bbox_.y1 && bbox_.y1 <= frame_height_)) {
      throw ArgumentError("detection bbox outside the image or empty");
    }
  }

  ClassId label_ = 1;
  double confidence_ = 1.0;
  BBox bbox_;
  int frame_width_ = 0;
  int frame_height_ = 0;
  Bitmask crop_;
};

/// Tight bbox of a full-frame mask; empty optional for an all-zero mask.
inline std::optional<BBox> mask_bounds(const Bitmask& mask) {
  BBox box{mask.width(), mask.height(), 0, 0};
  bool any = false;
  for (int row = 0; row < mask.height(); ++row) {
    for (int col = 0; col < mask.width(); ++col) {
      if (!mask(col, row)) continue;
      any = true;
      box.x0 = std::min(box.x0, col);
      box.y0 = std::min(box.y0, row);
      box.x1 = std::max(box.x1, col + 1);
      box.y1 = std::max(box.y1, row + 1);
    }
  }
  if (!any) return std::nullopt;
  return box;
}

// ---------------------------------------------------------------------------
// Run-length encoding

inline std::vector<std::uint64_t> rle_encode(const Bitmask& mask) {
  std::vector<std::uint64_t> counts;
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (std::uint8_t v : mask.data()) {
    const std::uint8_t bit = v ? 1 : 0;
    if (bit != current) {
      counts.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

/// Same counts as rle_encode(d.full_mask()), in time proportional to the bbox.
inline std::vector<std::uint64_t> rle_encode(const Detection2D& d) {
  const BBox& b = d.bbox();
  const std::uint64_t w = static_cast<std::uint64_t>(d.frame_width());
  std::vector<std::uint64_t> counts;
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  auto push = [&](std::uint8_t bit, std::uint64_t n) {
    if (n == 0) return;
    if (bit != current) {
      counts.push_back(run);
      run = 0;
      current = bit;
    }
    run += n;
  };
  push(0, static_cast<std::uint64_t>(b.y0) * w + static_cast<std::uint64_t>(b.x0));
  for (int row = 0; row < b.height(); ++row) {
    if (row > 0) push(0, w - static_cast<std::uint64_t>(b.width()));
    for (int col = 0; col < b.width(); ++col) push(d.crop()(col, row) ? 1 : 0, 1);
  }
  const std::uint64_t total = w * static_cast<std::uint64_t>(d.frame_height());
  const std::uint64_t last = static_cast<std::uint64_t>(b.y1 - 1) * w + static_cast<std::uint64_t>(b.x1);
  push(0, total - last);
  counts.push_back(run);
  return counts;
}

inline Bitmask rle_decode(int height, int width, const std::vector<std::uint64_t>& counts) {
  if (height < 1 || width < 1) throw FormatError("RLE size must be positive");
  Bitmask mask(width, height, 0);
  const std::uint64_t total = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  std::uint64_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint64_t run : counts) {
    if (run > total - pos) throw FormatError("RLE counts exceed H*W");
    if (value) std::fill_n(mask.data().begin() + static_cast<std::ptrdiff_t>(pos), run, std::uint8_t{1});
    pos += run;
    value ^= 1;
  }
  if (pos != total) throw FormatError("RLE counts sum to " + std::to_string(pos) + ", expected " + std::to_string(total));
  return mask;
}

/// Decodes counts straight into the bbox-local crop of `box`. A set pixel
/// outside the box is a FormatError.
inline Bitmask rle_decode_crop(int height, int width, const std::vector<std::uint64_t>& counts, const BBox& box) {
  if (height < 1 || width < 1) throw FormatError("RLE size must be positive");
  Bitmask crop(box.width(), box.height(), 0);
  const std::uint64_t w = static_cast<std::uint64_t>(width);
  const std::uint64_t total = w * static_cast<std::uint64_t>(height);
  std::uint64_t pos = 0;
  bool value = false;
  for (std::uint64_t run : counts) {
    if (run > total - pos) throw FormatError("RLE counts exceed H*W");
    if (value) {
      for (std::uint64_t i = pos; i < pos + run; ++i) {
        const int col = static_cast<int>(i % w), row = static_cast<int>(i / w);
        if (!box.contains(col, row)) throw FormatError("mask pixel outside bbox");
        crop(col - box.x0, row - box.y0) = 1;
      }
    }
    pos += run;
    value = !value;
  }
  if (pos != total) throw FormatError("RLE counts sum to " + std::to_string(pos) + ", expected " + std::to_string(total));
  return crop;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json detection_to_json(const Detection2D& d, const LabelSet& labels) {
  const BBox& b = d.bbox();
  return {{"label", labels.name(d.label())},
          {"confidence", d.confidence()},
          {"bbox", {b.x0, b.y0, b.x1, b.y1}},
          {"mask_rle", {{"size", {d.frame_height(), d.frame_width()}}, {"counts", rle_encode(d)}}}};
}

inline nlohmann::json detections_to_json(const std::vector<Detection2D>& detections, const LabelSet& labels) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : detections) out.push_back(detection_to_json(d, labels));
  return out;
}

/// A decoded entry whose label may lie outside the active label set.
struct RawDetection {
  std::string label;
  double confidence = 0.0;
  BBox bbox;
  int frame_width = 0;
  int frame_height = 0;
  Bitmask crop;  // bbox-local
};

/// Parses and validates one schema entry against an expected frame size.
/// Violations raise FormatError.
inline RawDetection parse_detection(const nlohmann::json& j, int width, int height) {
  RawDetection raw;
  try {
    raw.label = j.at("label").get<std::string>();
    raw.confidence = j.at("confidence").get<double>();
    const auto& bbox = j.at("bbox");
    if (!bbox.is_array() || bbox.size() != 4) throw FormatError("bbox must have four entries");
    raw.bbox = BBox{bbox[0].get<int>(), bbox[1].get<int>(), bbox[2].get<int>(), bbox[3].get<int>()};
    const auto& rle = j.at("mask_rle");
    const auto& size = rle.at("size");
    if (!size.is_array() || size.size() != 2) throw FormatError("mask_rle.size must be [H, W]");
    const int h = size[0].get<int>();
    const int w = size[1].get<int>();
    if (h != height || w != width) {
      throw FormatError("mask size " + std::to_string(h) + "x" + std::to_string(w) + " does not match view " +
                        std::to_string(height) + "x" + std::to_string(width));
    }
    std::vector<std::uint64_t> counts;
    for (const auto& c : rle.at("counts")) {
      if (!c.is_number_integer() || c.get<long long>() < 0) throw FormatError("RLE counts must be non-negative integers");
      counts.push_back(c.get<std::uint64_t>());
    }
    if (!(raw.confidence > 0.0 && raw.confidence <= 1.0)) throw FormatError("detection confidence outside (0, 1]");
    const BBox& b = raw.bbox;
    if (!(b.x0 >= 0 && b.x0 < b.x1 && b.x1 <= width && b.y0 >= 0 && b.y0 < b.y1 && b.y1 <= height)) {
      throw FormatError("detection bbox outside the image or empty");
    }
    raw.frame_width = w;
    raw.frame_height = h;
    raw.crop = rle_decode_crop(h, w, counts, b);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed detection entry: ") + e.what());
  }
  return raw;
}

/// Accepts either a bare array of entries or {"detections": [...]}.
inline const nlohmann::json& detection_entries(const nlohmann::json& j) {
  if (j.is_array()) return j;
  if (j.is_object() && j.contains("detections") && j.at("detections").is_array()) return j.at("detections");
  throw FormatError("expected a detection array or {\"detections\": [...]}");
}

}  // namespace lfseg
