// lfseg: staged label-free point cloud segmentation.
//
//   lfseg run --config cfg.json
//   lfseg render --config cfg.json; <external model writes masks>;
//   lfseg segment --segmenter files ...; lfseg fuse ...; lfseg eval ...

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lfseg.hpp"

namespace {

int exit_code(lfseg::ErrorKind kind) {
  switch (kind) {
    case lfseg::ErrorKind::argument:
    case lfseg::ErrorKind::config: return 2;
    case lfseg::ErrorKind::format:
    case lfseg::ErrorKind::data: return 3;
    case lfseg::ErrorKind::transport: return 4;
  }
  return 1;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-free 3D point cloud segmentation from rendered views"};
  app.require_subcommand(1, 1);

  std::string config_path, output, segmenter, remote_url, refine_classes, merge_mode;
  std::string synth, cloud, labels, trajectory, mask_dir;
  std::size_t workers = 0;
  std::uint64_t seed = 0;
  double flip_rate = -1.0;
  bool resume = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--output", output, "output directory");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "global seed");
  app.add_option("--segmenter", segmenter, "segmenter kind")->check(CLI::IsMember({"oracle", "files", "remote"}));
  app.add_option("--remote-url", remote_url, "segmentation service base URL");
  app.add_option("--refine-classes", refine_classes, "comma-separated classes for bird's-eye refinement");
  app.add_option("--merge-mode", merge_mode, "how refined labels merge")->check(CLI::IsMember({"vote", "override"}));
  app.add_flag("--resume", resume, "skip stages whose inputs are unchanged");
  app.add_option("--synth", synth, "bundled fixture name or scene spec file");
  app.add_option("--cloud", cloud, "input PLY");
  app.add_option("--labels", labels, "label set JSON");
  app.add_option("--trajectory", trajectory, "trajectory JSON");
  app.add_option("--mask-dir", mask_dir, "mask files directory for the files segmenter");
  app.add_option("--flip-rate", flip_rate, "oracle label flip probability");

  for (const char* name : {"synth", "render", "segment", "refine", "fuse", "eval", "run"}) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("synth")->description("generate a synthetic scene");
  app.get_subcommand("render")->description("render trajectory views");
  app.get_subcommand("segment")->description("segment rendered views into masks/");
  app.get_subcommand("refine")->description("bird's-eye refinement of triggered detections");
  app.get_subcommand("fuse")->description("back-project masks and fuse labels");
  app.get_subcommand("eval")->description("score the fused labels against ground truth");
  app.get_subcommand("run")->description("full pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    lfseg::PipelineConfig cfg = config_path.empty() ? lfseg::PipelineConfig{} : lfseg::PipelineConfig::load(config_path);
    if (!output.empty()) cfg.output = output;
    if (workers > 0) cfg.workers = workers;
    if (*seed_opt) cfg.seed = seed;
    if (!segmenter.empty()) cfg.segmenter = segmenter;
    if (!remote_url.empty()) cfg.remote_url = remote_url;
    if (!refine_classes.empty()) {
      cfg.refine_classes = split_names(refine_classes);
      cfg.refine = true;
    }
    if (!merge_mode.empty()) cfg.merge_mode = lfseg::parse_merge_mode(merge_mode);
    if (!synth.empty()) cfg.synth = synth;
    if (!cloud.empty()) cfg.cloud = cloud;
    if (!labels.empty()) cfg.labels = labels;
    if (!trajectory.empty()) cfg.trajectory = trajectory;
    if (!mask_dir.empty()) cfg.mask_dir = mask_dir;
    if (flip_rate >= 0.0) cfg.flip_rate = flip_rate;

    if (command == "run") {
      const auto out = lfseg::run_pipeline(cfg, resume);
      if (out.eval) std::cout << "mIoU " << out.eval->miou << "\n";
      std::cout << "output " << cfg.output.string() << "\n";
      return 0;
    }

    lfseg::Workspace ws(cfg, resume);
    if (command == "synth") lfseg::stage_synth(ws);
    if (command == "render") lfseg::stage_render(ws);
    if (command == "segment") lfseg::stage_segment(ws);
    if (command == "refine") lfseg::stage_refine(ws);
    if (command == "fuse") lfseg::stage_fuse(ws);
    if (command == "eval") lfseg::stage_eval(ws);
    ws.finish();
    return 0;
  } catch (const lfseg::Error& e) {
    std::cerr << "lfseg " << command << ": " << lfseg::to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "lfseg " << command << ": " << e.what() << "\n";
    return 1;
  }
}
