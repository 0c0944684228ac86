#pragma once

// Pipeline configuration.
//
// JSON layout (every key optional; unknown keys are rejected):
//
//   {
//     "cloud": "scan.ply", "labels": "labels.json", "trajectory": "drive.json",
//     "synth": "scene1-tunnel" | "scene.json",
//     "camera": {"fov_deg", "width", "height", "z_near", "yaw_deg": [...],
//                "pitch_deg", "height_offset"},
//     "render": {"splat_radius", "export_buffers"},
//     "fusion": {"epsilon", "d_min"},
//     "segmenter": {"kind": "oracle"|"files"|"remote", "prompts": [...],
//                   "confidence_floor", "flip_rate", "erosion", "jitter",
//                   "mask_dir", "remote_url", "timeout_s", "max_in_flight"},
//     "refinement": {"enabled", "classes": [...], "trigger_confidence",
//                    "offsets": [...], "merge_mode": "vote"|"override"},
//     "output": "out", "workers": 1, "seed": 0
//   }
//
// Relative paths are resolved against the directory holding the config file.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "lfseg/camera.hpp"
#include "lfseg/fixtures.hpp"
#include "lfseg/fusion.hpp"
#include "lfseg/label_set.hpp"
#include "lfseg/refinement.hpp"
#include "lfseg/renderer.hpp"
#include "lfseg/segmenter.hpp"
#include "lfseg/trajectory.hpp"

namespace lfseg {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path cloud;
  fs::path labels;
  fs::path trajectory;
  std::string synth;  // fixture name or scene spec path

  double fov_deg = 90.0;
  int width = 480;
  int height = 640;
  double z_near = kDefaultZNear;
  std::vector<double> yaw_deg{0.0, 90.0, 180.0, 270.0};
  double pitch_deg = 0.0;
  double height_offset = 0.0;

  double splat_radius = kDefaultSplatRadius;
  bool export_buffers = false;

  FusionParams fusion;

  std::string segmenter = "oracle";
  std::vector<std::string> prompts;  // empty: every class in the label set
  double confidence_floor = kDefaultConfidenceFloor;
  double flip_rate = 0.0;
  int erosion = 0;
  double jitter = 0.0;
  fs::path mask_dir;
  std::string remote_url;
  double timeout_s = 30.0;
  int max_in_flight = 4;

  bool refine = false;
  std::vector<std::string> refine_classes;
  double trigger_confidence = 0.5;
  std::vector<double> offsets{5.0, 10.0, 15.0};
  MergeMode merge_mode = MergeMode::vote;

  fs::path output = "lfseg_out";
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  bool synth_is_fixture() const {
    const auto names = fixtures::fixture_names();
    return std::find(names.begin(), names.end(), synth) != names.end();
  }

  CameraIntrinsics intrinsics() const { return intrinsics_from_fov(fov_deg, width, height); }
  RenderParams render_params() const { return {splat_radius, z_near}; }

  PlacementParams placement() const {
    PlacementParams p;
    p.yaw_set.clear();
    for (double y : yaw_deg) p.yaw_set.push_back(y * std::numbers::pi / 180.0);
    p.pitch = pitch_deg * std::numbers::pi / 180.0;
    p.height_offset = height_offset;
    return p;
  }

  SegmenterKind segmenter_kind() const {
    if (segmenter == "oracle") return OracleSegmenter{flip_rate, erosion, jitter, seed};
    if (segmenter == "files") return MaskFilesSegmenter{mask_dir.string()};
    if (segmenter == "remote") return RemoteSegmenter{remote_url, timeout_s, max_in_flight};
    throw ConfigError("segmenter kind must be oracle, files or remote, got \"" + segmenter + "\"");
  }

  RefinementConfig refinement(const LabelSet& labels) const {
    RefinementConfig r;
    r.enabled = refine;
    r.trigger_confidence = trigger_confidence;
    r.vertical_offsets = offsets;
    r.merge_mode = merge_mode;
    for (const auto& name : refine_classes) {
      const auto id = labels.find(name);
      if (!id || *id == kUnlabeled) throw ConfigError("unknown refinement class \"" + name + "\"");
      r.target_classes.insert(*id);
    }
    return r;
  }

  std::vector<std::string> prompt_list(const LabelSet& labels) const {
    if (prompts.empty()) return labels.class_names();
    for (const auto& name : prompts) {
      const auto id = labels.find(name);
      if (!id || *id == kUnlabeled) throw ConfigError("unknown prompt class \"" + name + "\"");
    }
    return prompts;
  }

  /// Label set named by the config, without touching the output directory.
  LabelSet label_set() const {
    if (!labels.empty()) return LabelSet::load(labels.string());
    if (synth_is_fixture()) return fixtures::street_labels();
    throw ConfigError("no label set: set \"labels\"");
  }

  /// Checks ranges and referenced files. Writes nothing.
  void validate() const {
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ConfigError("camera.fov_deg must lie in (0, 180)");
    if (width < 1 || height < 1) throw ConfigError("camera.width and camera.height must be positive");
    intrinsics().validate();
    if (!(z_near > 0.0) || !std::isfinite(z_near)) throw ConfigError("camera.z_near must be positive");
    if (yaw_deg.empty()) throw ConfigError("camera.yaw_deg must not be empty");
    for (double y : yaw_deg) {
      if (!std::isfinite(y)) throw ConfigError("camera.yaw_deg entries must be finite");
    }
    if (!std::isfinite(pitch_deg) || std::abs(pitch_deg) >= 90.0) throw ConfigError("camera.pitch_deg must lie in (-90, 90)");
    if (!std::isfinite(height_offset)) throw ConfigError("camera.height_offset must be finite");
    if (!(splat_radius > 0.0) || !std::isfinite(splat_radius)) throw ConfigError("render.splat_radius must be positive");
    fusion.validate();
    if (!(confidence_floor >= 0.0 && confidence_floor <= 1.0)) {
      throw ConfigError("segmenter.confidence_floor must lie in [0, 1]");
    }
    if (workers == 0) throw ConfigError("workers must be at least 1");

    const auto kind = segmenter_kind();
    if (const auto* oracle = std::get_if<OracleSegmenter>(&kind)) oracle->validate();
    if (segmenter == "files") {
      if (mask_dir.empty()) throw ConfigError("segmenter.mask_dir is required for the files segmenter");
      if (!fs::is_directory(mask_dir)) throw ConfigError("mask directory not found: " + mask_dir.string());
    }
    if (segmenter == "remote") {
      if (remote_url.empty()) throw ConfigError("segmenter.remote_url is required for the remote segmenter");
      if (!(timeout_s > 0.0)) throw ConfigError("segmenter.timeout_s must be positive");
      if (max_in_flight < 1) throw ConfigError("segmenter.max_in_flight must be at least 1");
    }

    if (synth.empty()) {
      for (const auto& [key, path] : {std::pair{"cloud", cloud}, {"labels", labels}, {"trajectory", trajectory}}) {
        if (path.empty()) throw ConfigError(std::string(key) + " is required when no synth scene is given");
        if (!fs::is_regular_file(path)) throw ConfigError(std::string(key) + " file not found: " + path.string());
      }
    } else {
      if (!synth_is_fixture() && !fs::is_regular_file(synth)) {
        throw ConfigError("synth scene is neither a bundled fixture nor a file: " + synth);
      }
      if (!synth_is_fixture() && labels.empty()) throw ConfigError("labels is required with a synth scene file");
      if (!labels.empty() && !fs::is_regular_file(labels)) throw ConfigError("labels file not found: " + labels.string());
    }

    const LabelSet set = label_set();
    prompt_list(set);
    RefinementConfig r = refinement(set);
    r.validate();
  }

  nlohmann::json to_json() const {
    return {{"cloud", cloud.string()},
            {"labels", labels.string()},
            {"trajectory", trajectory.string()},
            {"synth", synth},
            {"camera",
             {{"fov_deg", fov_deg},
              {"width", width},
              {"height", height},
              {"z_near", z_near},
              {"yaw_deg", yaw_deg},
              {"pitch_deg", pitch_deg},
              {"height_offset", height_offset}}},
            {"render", {{"splat_radius", splat_radius}, {"export_buffers", export_buffers}}},
            {"fusion", {{"epsilon", fusion.epsilon}, {"d_min", fusion.d_min}}},
            {"segmenter",
             {{"kind", segmenter},
              {"prompts", prompts},
              {"confidence_floor", confidence_floor},
              {"flip_rate", flip_rate},
              {"erosion", erosion},
              {"jitter", jitter},
              {"mask_dir", mask_dir.string()},
              {"remote_url", remote_url},
              {"timeout_s", timeout_s},
              {"max_in_flight", max_in_flight}}},
            {"refinement",
             {{"enabled", refine},
              {"classes", refine_classes},
              {"trigger_confidence", trigger_confidence},
              {"offsets", offsets},
              {"merge_mode", to_string(merge_mode)}}},
            {"output", output.string()},
            {"workers", workers},
            {"seed", seed}};
  }

  static PipelineConfig from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig c;
    auto path = [&](const nlohmann::json& v) {
      fs::path p = v.get<std::string>();
      if (p.empty() || p.is_absolute() || base_dir.empty()) return p;
      return base_dir / p;
    };
    auto check_keys = [](const nlohmann::json& obj, const std::string& where, std::set<std::string> allowed) {
      if (!obj.is_object()) throw ConfigError(where + " must be an object");
      for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown config key " + where + "." + key);
      }
    };
    try {
      check_keys(j, "config",
                 {"cloud", "labels", "trajectory", "synth", "camera", "render", "fusion", "segmenter", "refinement",
                  "output", "workers", "seed"});
      if (j.contains("cloud")) c.cloud = path(j["cloud"]);
      if (j.contains("labels")) c.labels = path(j["labels"]);
      if (j.contains("trajectory")) c.trajectory = path(j["trajectory"]);
      if (j.contains("synth")) {
        c.synth = j["synth"].get<std::string>();
        if (!c.synth_is_fixture() && !c.synth.empty()) c.synth = path(j["synth"]).string();
      }
      if (j.contains("output")) c.output = path(j["output"]);
      if (j.contains("workers")) c.workers = j["workers"].get<std::size_t>();
      if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();

      if (j.contains("camera")) {
        const auto& s = j["camera"];
        check_keys(s, "camera", {"fov_deg", "width", "height", "z_near", "yaw_deg", "pitch_deg", "height_offset"});
        c.fov_deg = s.value("fov_deg", c.fov_deg);
        c.width = s.value("width", c.width);
        c.height = s.value("height", c.height);
        c.z_near = s.value("z_near", c.z_near);
        c.yaw_deg = s.value("yaw_deg", c.yaw_deg);
        c.pitch_deg = s.value("pitch_deg", c.pitch_deg);
        c.height_offset = s.value("height_offset", c.height_offset);
      }
      if (j.contains("render")) {
        const auto& s = j["render"];
        check_keys(s, "render", {"splat_radius", "export_buffers"});
        c.splat_radius = s.value("splat_radius", c.splat_radius);
        c.export_buffers = s.value("export_buffers", c.export_buffers);
      }
      if (j.contains("fusion")) {
        const auto& s = j["fusion"];
        check_keys(s, "fusion", {"epsilon", "d_min"});
        c.fusion.epsilon = s.value("epsilon", c.fusion.epsilon);
        c.fusion.d_min = s.value("d_min", c.fusion.d_min);
      }
      if (j.contains("segmenter")) {
        const auto& s = j["segmenter"];
        check_keys(s, "segmenter",
                   {"kind", "prompts", "confidence_floor", "flip_rate", "erosion", "jitter", "mask_dir", "remote_url",
                    "timeout_s", "max_in_flight"});
        c.segmenter = s.value("kind", c.segmenter);
        c.prompts = s.value("prompts", c.prompts);
        c.confidence_floor = s.value("confidence_floor", c.confidence_floor);
        c.flip_rate = s.value("flip_rate", c.flip_rate);
        c.erosion = s.value("erosion", c.erosion);
        c.jitter = s.value("jitter", c.jitter);
        if (s.contains("mask_dir")) c.mask_dir = path(s["mask_dir"]);
        c.remote_url = s.value("remote_url", c.remote_url);
        c.timeout_s = s.value("timeout_s", c.timeout_s);
        c.max_in_flight = s.value("max_in_flight", c.max_in_flight);
      }
      if (j.contains("refinement")) {
        const auto& s = j["refinement"];
        check_keys(s, "refinement", {"enabled", "classes", "trigger_confidence", "offsets", "merge_mode"});
        c.refine = s.value("enabled", c.refine);
        c.refine_classes = s.value("classes", c.refine_classes);
        c.trigger_confidence = s.value("trigger_confidence", c.trigger_confidence);
        c.offsets = s.value("offsets", c.offsets);
        if (s.contains("merge_mode")) c.merge_mode = parse_merge_mode(s["merge_mode"].get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
  }

  static PipelineConfig load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j, path.parent_path());
  }
};

}  // namespace lfseg
