#pragma once

// On-disk pipeline stages.
//
// Every stage reads and writes artifacts in the output directory:
//
//   synth   cloud.ply labels.json trajectory.json
//   render  views.json images/view_<i>.png [buffers/view_<i>.{depth.f64,index.u32}]
//   segment masks/view_<i>.json
//   refine  refinement.json
//   fuse    fused.ply fusion_votes.bin fusion.json
//   eval    eval.json eval.txt
//
// MANIFEST.json records a key per stage (hash of the stage settings and of
// its input files) and the sha256 of each output. With resume, a stage whose
// key is unchanged and whose outputs still hash the same is skipped.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lfseg/config.hpp"
#include "lfseg/evaluation.hpp"
#include "lfseg/fixtures.hpp"
#include "lfseg/hash.hpp"
#include "lfseg/pipeline.hpp"
#include "lfseg/ply.hpp"
#include "lfseg/png.hpp"
#include "lfseg/synth.hpp"

namespace lfseg {

namespace stage_detail {

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(1) + "\n"); }

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing artifact " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + " is not valid JSON: " + e.what());
  }
}

template <typename T>
void write_raw(const fs::path& path, const std::vector<T>& values) {
  std::string bytes(values.size() * sizeof(T), '\0');
  if (!values.empty()) std::memcpy(bytes.data(), values.data(), bytes.size());
  write_text(path, bytes);
}

[[noreturn]] inline void rethrow_tagged(const Error& e, const std::string& stage) {
  const std::string msg = "[" + stage + "] " + e.what();
  switch (e.kind()) {
    case ErrorKind::argument: throw ArgumentError(msg);
    case ErrorKind::config: throw ConfigError(msg);
    case ErrorKind::format: throw FormatError(msg);
    case ErrorKind::data: throw DataError(msg);
    case ErrorKind::transport: throw TransportError(msg);
  }
  throw DataError(msg);
}

}  // namespace stage_detail

/// Output directory state shared by the stages of one invocation.
class Workspace {
 public:
  Workspace(PipelineConfig cfg, bool resume, std::ostream* log = &std::cerr)
      : cfg_(std::move(cfg)), resume_(resume), log_(log) {
    cfg_.validate();
    fs::create_directories(cfg_.output);
    const fs::path manifest = path("MANIFEST.json");
    if (fs::exists(manifest)) {
      try {
        manifest_ = stage_detail::read_json(manifest);
      } catch (const Error&) {
        manifest_ = nlohmann::json::object();
      }
    }
    if (!manifest_.is_object()) manifest_ = nlohmann::json::object();
    if (!manifest_.contains("stages") || !manifest_["stages"].is_object()) manifest_["stages"] = nlohmann::json::object();
  }

  const PipelineConfig& config() const noexcept { return cfg_; }
  fs::path path(const fs::path& rel) const { return cfg_.output / rel; }

  fs::path cloud_path() const { return cfg_.synth.empty() ? cfg_.cloud : path("cloud.ply"); }
  fs::path labels_path() const { return cfg_.synth.empty() ? cfg_.labels : path("labels.json"); }
  fs::path trajectory_path() const { return cfg_.synth.empty() ? cfg_.trajectory : path("trajectory.json"); }

  const PointCloud& cloud() {
    if (!cloud_) {
      require(cloud_path());
      cloud_ = load_cloud(cloud_path().string());
    }
    return *cloud_;
  }
  const LabelSet& labels() {
    if (!labels_) {
      require(labels_path());
      labels_ = LabelSet::load(labels_path().string());
    }
    return *labels_;
  }

  void require(const fs::path& p) const {
    if (!fs::exists(p)) throw DataError("missing input " + p.string() + " (run the producing stage first)");
  }

  void info(const std::string& stage, const std::string& msg) const {
    if (log_) *log_ << "[" << stage << "] " << msg << "\n";
  }

  /// Runs `body` unless resume finds the stage up to date. `body` returns the
  /// output files it wrote.
  void run_stage(const std::string& name, const nlohmann::json& settings, const std::vector<fs::path>& inputs,
                 const std::function<std::vector<fs::path>()>& body) {
    std::string key;
    try {
      Sha256 h;
      h.update(name).update("\n").update(settings.dump()).update("\n");
      for (const auto& in : inputs) {
        require(in);
        h.update(relative(in)).update(" ").update(sha256_file(in)).update("\n");
      }
      key = h.hex();

      auto& stages = manifest_["stages"];
      if (resume_ && stages.contains(name) && stages[name].value("key", "") == key &&
          stages[name].value("status", "") == "done" && outputs_intact(stages[name])) {
        info(name, "up to date, skipped");
        return;
      }
      stages[name] = {{"key", key}, {"status", "running"}, {"outputs", nlohmann::json::object()}};
      manifest_["complete"] = false;
      save_manifest();

      const auto outputs = body();
      nlohmann::json hashes = nlohmann::json::object();
      for (const auto& out : outputs) hashes[relative(out)] = sha256_file(out);
      stages[name] = {{"key", key}, {"status", "done"}, {"outputs", hashes}};
      save_manifest();
    } catch (const Error& e) {
      fail(name, e.what());
      stage_detail::rethrow_tagged(e, name);
    } catch (const std::exception& e) {
      fail(name, e.what());
      throw DataError("[" + name + "] " + e.what());
    }
  }

  /// Marks the invocation finished.
  void finish() {
    manifest_["complete"] = true;
    manifest_.erase("failed_stage");
    manifest_.erase("error");
    save_manifest();
  }

 private:
  std::string relative(const fs::path& p) const {
    const fs::path rel = fs::relative(p, cfg_.output);
    const std::string s = rel.generic_string();
    return s.starts_with("..") ? fs::absolute(p).generic_string() : s;
  }

  bool outputs_intact(const nlohmann::json& stage) const {
    if (!stage.contains("outputs")) return false;
    for (const auto& [rel, hash] : stage["outputs"].items()) {
      const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : path(rel);
      if (!fs::exists(p) || sha256_file(p) != hash.get<std::string>()) return false;
    }
    return true;
  }

  void fail(const std::string& name, const std::string& what) {
    try {
      manifest_["stages"][name]["status"] = "failed";
      manifest_["complete"] = false;
      manifest_["failed_stage"] = name;
      manifest_["error"] = what;
      save_manifest();
    } catch (...) {
    }
  }

  void save_manifest() {
    nlohmann::json artifacts = nlohmann::json::object();
    std::vector<std::string> incomplete;
    for (const auto& [name, stage] : manifest_["stages"].items()) {
      if (stage.value("status", "") != "done") incomplete.push_back(name);
      for (const auto& [rel, hash] : stage["outputs"].items()) artifacts[rel] = hash;
    }
    manifest_["artifacts"] = artifacts;
    manifest_["incomplete_stages"] = incomplete;
    if (!manifest_.contains("complete")) manifest_["complete"] = false;
    stage_detail::write_json(path("MANIFEST.json"), manifest_);
  }

  PipelineConfig cfg_;
  bool resume_;
  std::ostream* log_;
  nlohmann::json manifest_;
  std::optional<PointCloud> cloud_;
  std::optional<LabelSet> labels_;
};

// ---------------------------------------------------------------------------
// views.json

inline nlohmann::json views_to_json(const ViewSet& views) {
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& pose = views.poses[i];
    std::vector<double> r;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r.push_back(pose.rotation(row, col));
    }
    const Vec3 c = pose.center();
    list.push_back({{"id", view_id(i)},
                    {"rotation", r},
                    {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}},
                    {"center", {c.x(), c.y(), c.z()}}});
  }
  const auto& in = views.intr;
  return {{"intrinsics",
           {{"fx", in.fx}, {"fy", in.fy}, {"cx", in.cx}, {"cy", in.cy}, {"width", in.width}, {"height", in.height}}},
          {"splat_radius", views.render.splat_radius},
          {"z_near", views.render.z_near},
          {"views", list}};
}

inline ViewSet views_from_json(const nlohmann::json& j) {
  ViewSet views;
  try {
    const auto& in = j.at("intrinsics");
    views.intr = {in.at("fx").get<double>(), in.at("fy").get<double>(), in.at("cx").get<double>(),
                  in.at("cy").get<double>(), in.at("width").get<int>(), in.at("height").get<int>()};
    views.intr.validate();
    views.render = {j.at("splat_radius").get<double>(), j.at("z_near").get<double>()};
    for (const auto& v : j.at("views")) {
      const auto r = v.at("rotation").get<std::vector<double>>();
      const auto t = v.at("translation").get<std::vector<double>>();
      if (r.size() != 9 || t.size() != 3) throw FormatError("view pose has the wrong shape");
      CameraPose pose;
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) pose.rotation(row, col) = r[static_cast<std::size_t>(row * 3 + col)];
      }
      pose.translation = Vec3(t[0], t[1], t[2]);
      views.poses.push_back(pose);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed views.json: ") + e.what());
  }
  return views;
}

inline ViewSet plan_views(const PipelineConfig& cfg, const Trajectory& traj) {
  return {cfg.intrinsics(), cfg.render_params(), place_cameras(traj, cfg.placement())};
}

// ---------------------------------------------------------------------------
// Stages

inline void stage_synth(Workspace& ws) {
  const auto& cfg = ws.config();
  if (cfg.synth.empty()) throw ConfigError("[synth] no synth scene configured");
  std::vector<fs::path> inputs;
  if (!cfg.synth_is_fixture()) inputs.push_back(cfg.synth);
  if (!cfg.labels.empty()) inputs.push_back(cfg.labels);
  ws.run_stage("synth", {{"synth", cfg.synth}, {"seed", cfg.seed}}, inputs, [&] {
    SceneSpec spec = cfg.synth_is_fixture() ? fixtures::fixture(cfg.synth, cfg.seed) : load_scene(cfg.synth);
    spec.seed = cfg.seed;
    const LabelSet labels = cfg.label_set();
    const auto scene = generate(spec, labels, cfg.workers);
    save_cloud(scene.cloud, *scene.cloud.gt_labels(), labels, ws.path("cloud.ply").string());
    stage_detail::write_json(ws.path("labels.json"), labels.to_json());
    stage_detail::write_json(ws.path("trajectory.json"), scene.trajectory.to_json());
    ws.info("synth", std::to_string(scene.cloud.size()) + " points");
    return std::vector<fs::path>{ws.path("cloud.ply"), ws.path("labels.json"), ws.path("trajectory.json")};
  });
}

inline void stage_render(Workspace& ws) {
  const auto& cfg = ws.config();
  const nlohmann::json settings{{"camera", cfg.to_json()["camera"]}, {"render", cfg.to_json()["render"]}};
  ws.run_stage("render", settings, {ws.cloud_path(), ws.trajectory_path()}, [&] {
    const auto& cloud = ws.cloud();
    const ViewSet views = plan_views(cfg, Trajectory::load(ws.trajectory_path().string()));
    std::vector<fs::path> outputs(views.size());
    std::vector<fs::path> buffers(cfg.export_buffers ? 2 * views.size() : 0);
    parallel_for(views.size(), cfg.workers, [&](std::size_t v) {
      const ViewRender view = render_view(cloud, views.intr, views.poses[v], views.render);
      outputs[v] = ws.path("images/view_" + view_id(v) + ".png");
      fs::create_directories(outputs[v].parent_path());
      write_png(view.image, outputs[v].string());
      if (cfg.export_buffers) {
        buffers[2 * v] = ws.path("buffers/view_" + view_id(v) + ".depth.f64");
        buffers[2 * v + 1] = ws.path("buffers/view_" + view_id(v) + ".index.u32");
        stage_detail::write_raw(buffers[2 * v], view.depth.data());
        stage_detail::write_raw(buffers[2 * v + 1], view.point_map.data());
      }
    }, 1);
    stage_detail::write_json(ws.path("views.json"), views_to_json(views));
    outputs.push_back(ws.path("views.json"));
    outputs.insert(outputs.end(), buffers.begin(), buffers.end());
    ws.info("render", std::to_string(views.size()) + " views");
    return outputs;
  });
}

inline std::vector<fs::path> mask_inputs(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("view_") && name.ends_with(".json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline nlohmann::json segmenter_settings(const PipelineConfig& cfg) {
  auto s = cfg.to_json()["segmenter"];
  s["seed"] = cfg.seed;
  return s;
}

inline void stage_segment(Workspace& ws) {
  const auto& cfg = ws.config();
  std::vector<fs::path> inputs{ws.cloud_path(), ws.labels_path(), ws.path("views.json")};
  if (cfg.segmenter == "files") {
    const auto masks = mask_inputs(cfg.mask_dir);
    inputs.insert(inputs.end(), masks.begin(), masks.end());
  }
  ws.run_stage("segment", segmenter_settings(cfg), inputs, [&] {
    const auto& cloud = ws.cloud();
    const auto& labels = ws.labels();
    const ViewSet views = views_from_json(stage_detail::read_json(ws.path("views.json")));
    const Segmenter segmenter(cfg.segmenter_kind(), labels);
    const auto prompts = cfg.prompt_list(labels);
    // Read everything first so that mask_dir may equal the output masks dir.
    std::vector<std::vector<Detection2D>> detections(views.size());
    parallel_for(views.size(), cfg.workers, [&](std::size_t v) {
      const ViewRender view = render_view(cloud, views.intr, views.poses[v], views.render);
      detections[v] = segmenter.segment(view, cloud, view_id(v), prompts);
    }, 1);
    std::vector<fs::path> outputs;
    std::size_t count = 0;
    for (std::size_t v = 0; v < views.size(); ++v) {
      outputs.push_back(ws.path("masks") / mask_file_name(view_id(v)));
      stage_detail::write_json(outputs.back(), detections_to_json(detections[v], labels));
      count += detections[v].size();
    }
    ws.info("segment", std::to_string(count) + " detections over " + std::to_string(views.size()) + " views");
    return outputs;
  });
}

namespace stage_detail {

inline std::vector<fs::path> base_inputs(Workspace& ws, std::size_t view_count) {
  std::vector<fs::path> inputs{ws.cloud_path(), ws.labels_path(), ws.path("views.json")};
  for (std::size_t v = 0; v < view_count; ++v) inputs.push_back(ws.path("masks") / mask_file_name(view_id(v)));
  return inputs;
}

inline std::size_t view_count(Workspace& ws) {
  ws.require(ws.path("views.json"));
  return read_json(ws.path("views.json")).at("views").size();
}

/// Detections that pass the confidence floor, read back from masks/.
inline std::vector<std::vector<Detection2D>> load_detections(Workspace& ws, const ViewSet& views) {
  const auto& cfg = ws.config();
  const auto& labels = ws.labels();
  const auto prompts = labels.class_names();
  std::vector<std::vector<Detection2D>> detections(views.size());
  parallel_for(views.size(), cfg.workers, [&](std::size_t v) {
    ViewRender shape;
    shape.intr = views.intr;
    detections[v] = apply_confidence_floor(
        read_mask_file(ws.path("masks") / mask_file_name(view_id(v)), shape, labels, prompts), cfg.confidence_floor);
  }, 1);
  return detections;
}

}  // namespace stage_detail

inline void stage_refine(Workspace& ws) {
  const auto& cfg = ws.config();
  if (!cfg.refine) {
    ws.info("refine", "disabled");
    return;
  }
  const nlohmann::json settings{{"refinement", cfg.to_json()["refinement"]},
                                {"segmenter", segmenter_settings(cfg)},
                                {"d_min", cfg.fusion.d_min}};
  auto inputs = stage_detail::base_inputs(ws, stage_detail::view_count(ws));
  ws.run_stage("refine", settings, inputs, [&] {
    const auto& cloud = ws.cloud();
    const auto& labels = ws.labels();
    const ViewSet views = views_from_json(stage_detail::read_json(ws.path("views.json")));
    const auto detections = stage_detail::load_detections(ws, views);
    const Segmenter segmenter(cfg.segmenter_kind(), labels);
    const LabelingParams params{cfg.prompt_list(labels), cfg.confidence_floor, cfg.fusion.d_min};
    const auto outcomes = refine_views(cloud, views, detections, cfg.refinement(labels), segmenter, params,
                                       static_cast<std::uint32_t>(views.size()), cfg.workers);
    nlohmann::json report = nlohmann::json::array();
    nlohmann::json partials = nlohmann::json::array();
    for (const auto& o : outcomes) {
      report.push_back(outcome_to_json(o, labels));
      if (o.partial) partials.push_back(partial_to_json(*o.partial));
    }
    stage_detail::write_json(ws.path("refinement.json"), {{"outcomes", report}, {"partials", partials}});
    ws.info("refine", std::to_string(outcomes.size()) + " triggers, " + std::to_string(partials.size()) +
                          " refined partial clouds");
    return std::vector<fs::path>{ws.path("refinement.json")};
  });
}

inline nlohmann::json fusion_summary(const FusionResult& r, const LabelSet& labels, std::size_t cameras,
                                     std::size_t refined) {
  std::vector<std::uint64_t> counts(labels.count(), 0);
  std::uint64_t supported = 0, support_sum = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    ++counts[r.labels[i]];
    if (r.support[i] > 0) ++supported;
    support_sum += r.support[i];
  }
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t id = 0; id < counts.size(); ++id) per_class[labels.name(static_cast<ClassId>(id))] = counts[id];
  const double n = static_cast<double>(std::max<std::size_t>(r.size(), 1));
  return {{"points", r.size()},
          {"cameras", cameras},
          {"refined_cameras", refined},
          {"supported_points", supported},
          {"supported_fraction", static_cast<double>(supported) / n},
          {"mean_support", static_cast<double>(support_sum) / n},
          {"points_per_class", per_class}};
}

inline void stage_fuse(Workspace& ws) {
  const auto& cfg = ws.config();
  nlohmann::json settings{{"fusion", cfg.to_json()["fusion"]},
                          {"confidence_floor", cfg.confidence_floor},
                          {"refine", cfg.refine}};
  if (cfg.refine) settings["merge_mode"] = to_string(cfg.merge_mode);
  auto inputs = stage_detail::base_inputs(ws, stage_detail::view_count(ws));
  if (cfg.refine) inputs.push_back(ws.path("refinement.json"));
  ws.run_stage("fuse", settings, inputs, [&] {
    const auto& cloud = ws.cloud();
    const auto& labels = ws.labels();
    const ViewSet views = views_from_json(stage_detail::read_json(ws.path("views.json")));
    std::vector<LabeledPartialCloud> refined;
    if (cfg.refine) {
      const auto j = stage_detail::read_json(ws.path("refinement.json"));
      if (!j.contains("partials")) throw FormatError("refinement.json has no partials");
      for (const auto& p : j["partials"]) refined.push_back(partial_from_json(p, cloud));
    }
    const std::size_t refined_count = refined.size();
    RefinedFusion fusion(cloud, cfg.fusion, labels.count(), cfg.merge_mode, std::move(refined), cfg.workers);
    const auto prompts = labels.class_names();
    stream_partials(
        views.size(), cfg.workers,
        [&](std::size_t v) {
          const ViewRender view = render_view(cloud, views.intr, views.poses[v], views.render);
          const auto dets = apply_confidence_floor(
              read_mask_file(ws.path("masks") / mask_file_name(view_id(v)), view, labels, prompts),
              cfg.confidence_floor);
          return backproject_mask(view, cloud, dets, cfg.fusion.d_min, static_cast<std::uint32_t>(v));
        },
        [&](std::size_t, const LabeledPartialCloud& partial) { fusion.add_base(partial); });
    const FusionResult result = fusion.result();

    save_cloud(cloud, result.labels, labels, ws.path("fused.ply").string());
    std::string votes(result.size() * 12, '\0');
    for (std::size_t i = 0; i < result.size(); ++i) {
      std::memcpy(votes.data() + 12 * i, &result.support[i], 4);
      std::memcpy(votes.data() + 12 * i + 4, &result.vote_mass[i], 8);
    }
    stage_detail::write_text(ws.path("fusion_votes.bin"), votes);
    stage_detail::write_json(ws.path("fusion.json"), fusion_summary(result, labels, views.size(), refined_count));
    ws.info("fuse", std::to_string(result.size()) + " points, " + std::to_string(views.size() + refined_count) +
                        " cameras");
    return std::vector<fs::path>{ws.path("fused.ply"), ws.path("fusion_votes.bin"), ws.path("fusion.json")};
  });
}

/// Reads the fuse stage outputs back.
inline FusionResult load_fusion_result(const fs::path& output_dir) {
  const PointCloud fused = load_cloud((output_dir / "fused.ply").string());
  if (!fused.has_gt_labels()) throw FormatError("fused.ply has no label property");
  FusionResult r;
  r.labels = *fused.gt_labels();
  std::ifstream in(output_dir / "fusion_votes.bin", std::ios::binary);
  if (!in) throw DataError("missing artifact " + (output_dir / "fusion_votes.bin").string());
  r.support.resize(fused.size());
  r.vote_mass.resize(fused.size());
  for (std::size_t i = 0; i < fused.size(); ++i) {
    in.read(reinterpret_cast<char*>(&r.support[i]), 4);
    in.read(reinterpret_cast<char*>(&r.vote_mass[i]), 8);
  }
  if (!in) throw FormatError("fusion_votes.bin is truncated");
  return r;
}

inline void stage_eval(Workspace& ws) {
  const auto& cfg = ws.config();
  const std::vector<fs::path> inputs{ws.cloud_path(), ws.labels_path(), ws.path("fused.ply"),
                                     ws.path("fusion_votes.bin")};
  ws.run_stage("eval", nlohmann::json::object(), inputs, [&] {
    const auto& cloud = ws.cloud();
    const auto& labels = ws.labels();
    if (!cloud.has_gt_labels()) throw DataError("cloud has no ground-truth labels to evaluate against");
    const FusionResult fused = load_fusion_result(cfg.output);
    if (fused.size() != cloud.size()) throw DataError("fused cloud size does not match the input cloud");
    const auto& gt = *cloud.gt_labels();
    std::vector<std::uint8_t> supported(fused.size());
    for (std::size_t i = 0; i < fused.size(); ++i) supported[i] = fused.support[i] > 0;
    const EvalReport all = evaluate(fused.labels, gt, labels);
    const EvalReport sup = evaluate(select(fused.labels, supported), select(gt, supported), labels);
    const double coverage =
        cloud.empty() ? 0.0
                      : static_cast<double>(std::count(supported.begin(), supported.end(), 1)) /
                            static_cast<double>(cloud.size());
    stage_detail::write_json(ws.path("eval.json"), {{"all_points", report_to_json(all, labels)},
                                                    {"supported_points", report_to_json(sup, labels)},
                                                    {"support_coverage", coverage}});
    stage_detail::write_text(ws.path("eval.txt"),
                             report_table({{"fused", all}, {"fused, support>=1", sup}}, labels));
    ws.info("eval", "mIoU " + std::to_string(all.miou) + " (supported points " + std::to_string(sup.miou) + ")");
    return std::vector<fs::path>{ws.path("eval.json"), ws.path("eval.txt")};
  });
}

struct PipelineOutput {
  FusionResult fusion;
  std::optional<EvalReport> eval;
};

/// Full pipeline. Evaluation runs when the cloud carries ground truth.
inline PipelineOutput run_pipeline(const PipelineConfig& cfg, bool resume = false, std::ostream* log = &std::cerr) {
  Workspace ws(cfg, resume, log);
  if (!cfg.synth.empty()) stage_synth(ws);
  stage_render(ws);
  stage_segment(ws);
  stage_refine(ws);
  stage_fuse(ws);
  PipelineOutput out{load_fusion_result(cfg.output), std::nullopt};
  if (ws.cloud().has_gt_labels()) {
    stage_eval(ws);
    out.eval = evaluate(out.fusion.labels, *ws.cloud().gt_labels(), ws.labels());
  }
  ws.finish();
  return out;
}

}  // namespace lfseg
