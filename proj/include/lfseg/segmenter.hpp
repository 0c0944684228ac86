#pragma once

// Pluggable 2D semantic segmentation of rendered views.
//
// Three interchangeable sources produce Detection2D lists for a view and a
// list of class-name prompts:
//   * oracle      derives masks from ground-truth labels through the view's
//                 point map, with optional deterministic corruption
//   * mask files  reads view_<id>.json written by an external model
//   * remote      calls an HTTP service (POST /segment, GET /healthz)

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <semaphore>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "lfseg/detection.hpp"
#include "lfseg/error.hpp"
#include "lfseg/label_set.hpp"
#include "lfseg/png.hpp"
#include "lfseg/renderer.hpp"
#include "lfseg/rng.hpp"

// Must follow Eigen: httplib pulls in <resolv.h>, whose _res macro breaks
// Eigen's product kernels.
#include "httplib.h"

namespace lfseg {

inline constexpr double kDefaultConfidenceFloor = 0.25;

struct OracleSegmenter {
  double flip_rate = 0.0;  // probability a detection is relabeled to another prompted class
  int erosion = 0;         // boundary erosion, pixels
  double jitter = 0.0;     // confidence drawn uniformly from (1 - jitter, 1]
  std::uint64_t seed = 0;

  void validate() const {
    if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw ConfigError("oracle flip rate must lie in [0, 1]");
    if (erosion < 0) throw ConfigError("oracle erosion must be non-negative");
    if (!(jitter >= 0.0 && jitter <= 1.0)) throw ConfigError("oracle jitter must lie in [0, 1]");
  }
};

struct MaskFilesSegmenter {
  std::string directory;
};

struct RemoteSegmenter {
  std::string url;  // e.g. http://127.0.0.1:8080
  double timeout_s = 30.0;
  int max_in_flight = 4;
};

using SegmenterKind = std::variant<OracleSegmenter, MaskFilesSegmenter, RemoteSegmenter>;

// ---------------------------------------------------------------------------
// Oracle

namespace oracle_detail {

/// Erodes a bbox-local mask: a set pixel survives only if every in-image
/// pixel within Chebyshev distance `e` is also set. Pixels beyond the image
/// border do not erode.
inline Bitmask erode(const Bitmask& crop, const BBox& box, int frame_width, int frame_height, int e) {
  Bitmask out(crop.width(), crop.height(), 0);
  for (int row = 0; row < crop.height(); ++row) {
    for (int col = 0; col < crop.width(); ++col) {
      if (!crop(col, row)) continue;
      bool keep = true;
      for (int dr = -e; dr <= e && keep; ++dr) {
        for (int dc = -e; dc <= e; ++dc) {
          const int fc = box.x0 + col + dc, fr = box.y0 + row + dr;
          if (fc < 0 || fr < 0 || fc >= frame_width || fr >= frame_height) continue;
          if (!crop.contains(col + dc, row + dr) || !crop(col + dc, row + dr)) {
            keep = false;
            break;
          }
        }
      }
      out(col, row) = keep ? 1 : 0;
    }
  }
  return out;
}

}  // namespace oracle_detail

/// Noise-free-or-corrupted oracle segmentation. 8-connected regions of each
/// prompted ground-truth class become detections in row-major order of their
/// first pixel.
inline std::vector<Detection2D> oracle_segment(const ViewRender& view, const PointCloud& cloud,
                                               const std::string& view_id, const std::vector<ClassId>& prompt_ids,
                                               const OracleSegmenter& params) {
  params.validate();
  if (!cloud.has_gt_labels()) throw ConfigError("oracle segmenter requires ground-truth labels in the cloud");
  const auto& gt = *cloud.gt_labels();
  const int w = view.width(), h = view.height();

  std::vector<ClassId> prompted = prompt_ids;
  std::sort(prompted.begin(), prompted.end());
  prompted.erase(std::unique(prompted.begin(), prompted.end()), prompted.end());
  if (prompted.empty()) return {};
  auto is_prompted = [&](ClassId c) { return std::binary_search(prompted.begin(), prompted.end(), c); };

  Grid<ClassId> classes(w, h, kUnlabeled);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::uint32_t p = view.point_map[i];
    if (p == kNoPoint) continue;
    if (p >= gt.size()) throw ArgumentError("view references a point outside the cloud");
    if (is_prompted(gt[p])) classes[i] = gt[p];
  }

  std::vector<Detection2D> detections;
  Grid<std::uint8_t> visited(w, h, 0);
  std::vector<std::pair<int, int>> stack, pixels;
  const std::uint64_t view_key = fnv1a(view_id);
  std::uint64_t component = 0;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const ClassId cls = classes(col, row);
      if (cls == kUnlabeled || visited(col, row)) continue;
      pixels.clear();
      stack.assign(1, {col, row});
      visited(col, row) = 1;
      BBox box{col, row, col + 1, row + 1};
      while (!stack.empty()) {
        const auto [c, r] = stack.back();
        stack.pop_back();
        pixels.emplace_back(c, r);
        box.x0 = std::min(box.x0, c);
        box.y0 = std::min(box.y0, r);
        box.x1 = std::max(box.x1, c + 1);
        box.y1 = std::max(box.y1, r + 1);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nc = c + dc, nr = r + dr;
            if (classes.contains(nc, nr) && !visited(nc, nr) && classes(nc, nr) == cls) {
              visited(nc, nr) = 1;
              stack.emplace_back(nc, nr);
            }
          }
        }
      }

      // One stream per component, so dropping an eroded-away component does
      // not shift the draws of later ones.
      CounterRng rng(params.seed, mix64(view_key) + component++);
      const double u_flip = rng.uniform();
      const std::uint64_t pick = rng.next_u64();
      const double u_jitter = rng.uniform();

      ClassId label = cls;
      if (u_flip < params.flip_rate && prompted.size() > 1) {
        std::vector<ClassId> others;
        for (ClassId c : prompted) {
          if (c != cls) others.push_back(c);
        }
        label = others[pick % others.size()];
      }
      const double confidence = 1.0 - params.jitter * u_jitter;

      Bitmask crop(box.width(), box.height(), 0);
      for (auto [c, r] : pixels) crop(c - box.x0, r - box.y0) = 1;
      if (params.erosion > 0) {
        crop = oracle_detail::erode(crop, box, w, h, params.erosion);
        const auto local = mask_bounds(crop);
        if (!local) continue;
        const BBox shrunk{box.x0 + local->x0, box.y0 + local->y0, box.x0 + local->x1, box.y0 + local->y1};
        Bitmask tight(shrunk.width(), shrunk.height(), 0);
        for (int r = 0; r < tight.height(); ++r) {
          for (int c = 0; c < tight.width(); ++c) tight(c, r) = crop(c + local->x0, r + local->y0);
        }
        box = shrunk;
        crop = std::move(tight);
      }
      detections.push_back(Detection2D::from_crop(label, confidence, box, w, h, std::move(crop)));
    }
  }
  return detections;
}

// ---------------------------------------------------------------------------
// Mask files and remote service

/// Keeps entries whose label is prompted and known to the label set.
inline std::vector<Detection2D> to_detections(const std::vector<RawDetection>& raw, const LabelSet& labels,
                                              const std::vector<std::string>& prompts) {
  std::vector<Detection2D> out;
  for (const auto& r : raw) {
    if (std::find(prompts.begin(), prompts.end(), r.label) == prompts.end()) continue;
    const auto id = labels.find(r.label);
    if (!id || *id == kUnlabeled) continue;
    out.push_back(Detection2D::from_crop(*id, r.confidence, r.bbox, r.frame_width, r.frame_height, r.crop));
  }
  return out;
}

inline std::string mask_file_name(const std::string& view_id) { return "view_" + view_id + ".json"; }

inline std::vector<Detection2D> read_mask_file(const std::filesystem::path& path, const ViewRender& view,
                                               const LabelSet& labels, const std::vector<std::string>& prompts) {
  std::ifstream in(path);
  if (!in) throw DataError("missing mask file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("mask file " + path.string() + " is not valid JSON: " + e.what());
  }
  std::vector<RawDetection> raw;
  try {
    for (const auto& entry : detection_entries(j)) raw.push_back(parse_detection(entry, view.width(), view.height()));
  } catch (const FormatError& e) {
    throw FormatError("mask file " + path.string() + ": " + e.what());
  }
  return to_detections(raw, labels, prompts);
}

/// HTTP client for the segmentation service. Safe to share between threads;
/// at most `max_in_flight` requests run concurrently.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteSegmenter config)
      : config_(std::move(config)), slots_(std::max(1, config_.max_in_flight)) {
    if (config_.url.empty()) throw ConfigError("remote segmenter URL is empty");
    if (!(config_.timeout_s > 0.0)) throw ConfigError("remote timeout must be positive");
    if (config_.max_in_flight < 1) throw ConfigError("remote max_in_flight must be at least 1");
  }

  const RemoteSegmenter& config() const noexcept { return config_; }

  bool healthy() const {
    auto client = make_client();
    auto res = client.Get("/healthz");
    return res && res->status == 200;
  }

  std::vector<RawDetection> segment(const Grid<Rgb>& image, const std::vector<std::string>& prompts,
                                    const std::string& view_id) const {
    const nlohmann::json request{{"image_png_base64", base64_encode(encode_png(image))}, {"prompts", prompts}};
    const std::string body = request.dump();

    slots_.acquire();
    httplib::Result res;
    try {
      auto client = make_client();
      res = client.Post("/segment", body, "application/json");
    } catch (...) {
      slots_.release();
      throw;
    }
    slots_.release();

    const std::string where = "remote segmenter, view " + view_id + ": ";
    if (!res) throw TransportError(where + "request failed (" + httplib::to_string(res.error()) + ")");
    if (res->status != 200) throw TransportError(where + "HTTP status " + std::to_string(res->status));
    try {
      const auto j = nlohmann::json::parse(res->body);
      std::vector<RawDetection> raw;
      for (const auto& entry : detection_entries(j)) raw.push_back(parse_detection(entry, image.width(), image.height()));
      return raw;
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(where + "malformed response: " + e.what());
    } catch (const FormatError& e) {
      throw TransportError(where + "schema violation: " + e.what());
    }
  }

 private:
  httplib::Client make_client() const {
    httplib::Client client(config_.url);
    const auto sec = static_cast<time_t>(config_.timeout_s);
    const auto usec = static_cast<time_t>((config_.timeout_s - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    return client;
  }

  RemoteSegmenter config_;
  mutable std::counting_semaphore<> slots_;
};

/// Segmenter bound to a label set. Stateless apart from the shared remote
/// client, so one instance may serve parallel workers.
class Segmenter {
 public:
  Segmenter(SegmenterKind kind, LabelSet labels) : kind_(std::move(kind)), labels_(std::move(labels)) {
    if (const auto* remote = std::get_if<RemoteSegmenter>(&kind_)) remote_ = std::make_shared<RemoteClient>(*remote);
    if (const auto* oracle = std::get_if<OracleSegmenter>(&kind_)) oracle->validate();
  }

  const SegmenterKind& kind() const noexcept { return kind_; }
  const LabelSet& labels() const noexcept { return labels_; }

  std::vector<Detection2D> segment(const ViewRender& view, const PointCloud& cloud, const std::string& view_id,
                                   const std::vector<std::string>& prompts) const {
    if (prompts.empty()) return {};
    if (const auto* oracle = std::get_if<OracleSegmenter>(&kind_)) {
      std::vector<ClassId> ids;
      for (const auto& name : prompts) {
        const auto id = labels_.find(name);
        if (!id || *id == kUnlabeled) throw ArgumentError("unknown prompt class: " + name);
        ids.push_back(*id);
      }
      return oracle_segment(view, cloud, view_id, ids, *oracle);
    }
    if (const auto* files = std::get_if<MaskFilesSegmenter>(&kind_)) {
      for (const auto& name : prompts) {
        if (!labels_.find(name)) throw ArgumentError("unknown prompt class: " + name);
      }
      return read_mask_file(std::filesystem::path(files->directory) / mask_file_name(view_id), view, labels_, prompts);
    }
    return to_detections(remote_->segment(view.image, prompts, view_id), labels_, prompts);
  }

 private:
  SegmenterKind kind_;
  LabelSet labels_;
  std::shared_ptr<RemoteClient> remote_;
};

/// One-shot convenience wrapper around Segmenter.
inline std::vector<Detection2D> segment_image(const ViewRender& view, const PointCloud& cloud,
                                              const std::string& view_id, const std::vector<std::string>& prompts,
                                              const LabelSet& labels, const SegmenterKind& kind) {
  return Segmenter(kind, labels).segment(view, cloud, view_id, prompts);
}

}  // namespace lfseg
