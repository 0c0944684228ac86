// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "fusion_oracle.hpp"
#include "lfseg.hpp"
#include "renderer_oracle.hpp"
#include "test_helpers.hpp"

using namespace lfseg;
using testing_util::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// random fusion instances

struct Instance {
  PointCloud cloud;
  std::vector<LabeledPartialCloud> partials;
  std::size_t label_count = 2;
  FusionParams params;
};

// Entries sit near cloud points (within about 2 eps) so that every epsilon
// gets both hits and misses.
Instance random_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double eps_choices[] = {0.01, 0.05, 0.5};
  Instance inst;
  inst.params.epsilon = eps_choices[rng() % 3];
  inst.label_count = 2 + rng() % 8;  // classes 1..label_count-1, at most 8
  const std::size_t n = 1 + rng() % 500;
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u01(rng), u01(rng), u01(rng));
  inst.cloud = PointCloud(pts);
  const std::size_t cams = rng() % 6;
  std::vector<std::uint32_t> ids;
  while (ids.size() < cams) {
    const auto id = static_cast<std::uint32_t>(rng() % 50);
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  for (auto id : ids) {
    LabeledPartialCloud p{id, {}};
    const std::size_t m = rng() % 201;
    for (std::size_t k = 0; k < m; ++k) {
      const auto idx = static_cast<std::uint32_t>(rng() % n);
      const Vec3 jitter = Vec3(u01(rng) - 0.5, u01(rng) - 0.5, u01(rng) - 0.5) * (4.0 * inst.params.epsilon);
      const double w = 1.0 - u01(rng);  // (0, 1]
      const double d = 0.5 + 49.5 * u01(rng);
      p.entries.push_back({idx, pts[idx] + jitter, static_cast<ClassId>(1 + rng() % (inst.label_count - 1)), w, d});
    }
    inst.partials.push_back(std::move(p));
  }
  return inst;
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

// ---------------------------------------------------------------------------
// 1

Verdict fusion_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t label_mismatch = 0, mass_mismatch = 0, hits = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = random_instance(rng);
    const auto got = fuse(inst.cloud, inst.partials, inst.params, inst.label_count, 4);
    const auto want = oracle::nested_loop_fuse(inst.cloud, inst.partials, inst.params, inst.label_count);
    for (std::size_t i = 0; i < inst.cloud.size(); ++i) {
      if (got.labels[i] != want.labels[i] || got.support[i] != want.support[i]) ++label_mismatch;
      if (!rel_close(got.vote_mass[i], want.vote_mass[i], 1e-12)) ++mass_mismatch;
      hits += want.support[i] > 0;
    }
  }
  const double t = seconds_since(t0);
  return {label_mismatch == 0 && mass_mismatch == 0 && t < 10.0,
          "200 instances, " + std::to_string(hits) + " supported points, label mismatches " +
              std::to_string(label_mismatch) + ", vote mass mismatches " + std::to_string(mass_mismatch) + ", " +
              fmt(t, 2) + " s"};
}

// ---------------------------------------------------------------------------
// 2

Verdict renderer_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t mismatched = 0, mapped = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<Vec3> pts(n);
    std::vector<Rgb> colors(n);
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = Vec3(u(rng) * 3, u(rng) * 3, u(rng) * 3);
      colors[i] = Rgb{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                      static_cast<std::uint8_t>(rng())};
    }
    // some exact duplicates to exercise depth ties
    for (std::size_t i = 0; i + 1 < n; i += 17) pts[i + 1] = pts[i];
    const PointCloud cloud(pts, colors);
    const auto intr = intrinsics_from_fov(40.0 + 80.0 * (u(rng) + 1.0) / 2.0, 64, 64);
    const Vec3 center(u(rng) * 2, u(rng) * 2, 6.0 + u(rng));
    const CameraPose pose = look_at(center, Vec3(u(rng) * 0.5, u(rng) * 0.5, u(rng) * 0.5));
    const RenderParams params{0.02 + 0.2 * (u(rng) + 1.0) / 2.0, kDefaultZNear};
    const ViewRender got = render_view(cloud, intr, pose, params);
    const ViewRender want = oracle::brute_force_render(cloud, intr, pose, params.splat_radius, params.z_near);
    for (int r = 0; r < 64; ++r) {
      for (int c = 0; c < 64; ++c) {
        const bool same = got.point_map(c, r) == want.point_map(c, r) &&
                          (got.depth(c, r) == want.depth(c, r) ||
                           (std::isinf(got.depth(c, r)) && std::isinf(want.depth(c, r)))) &&
                          got.image(c, r) == want.image(c, r);
        mismatched += !same;
        mapped += want.point_map(c, r) != kNoPoint;
      }
    }
  }
  const double t = seconds_since(t0);
  return {mismatched == 0 && mapped > 0 && t < 10.0,
          "50 clouds, " + std::to_string(mapped) + " mapped pixels, " + std::to_string(mismatched) +
              " mismatched pixels, " + fmt(t, 2) + " s"};
}

// ---------------------------------------------------------------------------
// 3

PipelineConfig fixture_config(const std::string& name, const std::filesystem::path& out, std::size_t workers) {
  PipelineConfig cfg;
  cfg.synth = name;
  cfg.output = out;
  cfg.workers = workers;
  return cfg;
}

Verdict end_to_end_oracle(const std::filesystem::path& scratch) {
  const auto t0 = Clock::now();
  const auto cfg = fixture_config("scene1-tunnel", scratch / "scene1", 8);
  run_pipeline(cfg, false, nullptr);
  const double t = seconds_since(t0);
  const auto j = stage_detail::read_json(cfg.output / "eval.json");
  const double miou = j["supported_points"]["miou"].get<double>();
  const double coverage = j["support_coverage"].get<double>();
  const auto points = j["all_points"]["evaluated_points"].get<std::size_t>();
  return {std::abs(miou - 1.0) <= 1e-12 && coverage >= 0.9 && t < 300.0,
          std::to_string(points) + " points, mIoU on supported points " + fmt(miou, 12) + ", coverage " +
              fmt(coverage) + ", " + fmt(t, 1) + " s"};
}

// ---------------------------------------------------------------------------
// 4

struct NoiseRun {
  double fused_miou = 0.0;
  double best_single_view = 0.0;
};

// In-memory pass: every view is labeled, scored on its own labeled points and
// streamed into fusion.
NoiseRun noise_run(double flip_rate) {
  PipelineConfig cfg;
  cfg.synth = "scene1-tunnel";
  cfg.flip_rate = flip_rate;
  cfg.workers = 8;
  const LabelSet labels = cfg.label_set();
  SceneSpec spec = fixtures::fixture(cfg.synth, cfg.seed);
  spec.seed = cfg.seed;
  const auto scene = generate(spec, labels, cfg.workers);
  const auto& cloud = scene.cloud;
  const auto& gt = *cloud.gt_labels();
  const ViewSet views = plan_views(cfg, scene.trajectory);
  const Segmenter segmenter(cfg.segmenter_kind(), labels);
  const auto prompts = cfg.prompt_list(labels);

  std::vector<double> single(views.size(), 0.0);
  FusionAccumulator acc(cloud, cfg.fusion, labels.count(), cfg.workers);
  stream_partials(
      views.size(), cfg.workers,
      [&](std::size_t v) {
        const ViewRender view = render_view(cloud, views.intr, views.poses[v], views.render);
        const auto dets =
            apply_confidence_floor(segmenter.segment(view, cloud, view_id(v), prompts), cfg.confidence_floor);
        auto partial = backproject_mask(view, cloud, dets, cfg.fusion.d_min, static_cast<std::uint32_t>(v));
        std::vector<ClassId> pred, truth;
        for (const auto& e : partial.entries) {
          pred.push_back(e.label);
          truth.push_back(gt[e.point_index]);
        }
        if (!pred.empty()) single[v] = evaluate(pred, truth, labels).miou;
        return partial;
      },
      [&](std::size_t, const LabeledPartialCloud& p) { acc.add(p); });
  const auto fused = acc.result();
  return {evaluate(fused.labels, gt, labels).miou, *std::max_element(single.begin(), single.end())};
}

Verdict noise_monotonicity() {
  const auto t0 = Clock::now();
  const NoiseRun r0 = noise_run(0.0), r1 = noise_run(0.1), r3 = noise_run(0.3);
  const bool decreasing = r0.fused_miou > r1.fused_miou && r1.fused_miou > r3.fused_miou;
  const bool redundancy = r1.fused_miou > r1.best_single_view;
  return {decreasing && redundancy,
          "fused mIoU " + fmt(r0.fused_miou) + " / " + fmt(r1.fused_miou) + " / " + fmt(r3.fused_miou) +
              " at flip 0 / 0.1 / 0.3, best single view at 0.1 " + fmt(r1.best_single_view) + ", " +
              fmt(seconds_since(t0), 1) + " s"};
}

// ---------------------------------------------------------------------------
// 5 and 6

PipelineConfig bridge_config(const std::filesystem::path& out, std::size_t workers, bool refine) {
  PipelineConfig cfg = fixture_config("scene2-bridge", out, workers);
  if (refine) {
    cfg.refine = true;
    cfg.refine_classes = {"bridge"};
  }
  return cfg;
}

double bridge_iou(const PipelineOutput& out, const LabelSet& labels) {
  const auto& iou = out.eval->per_class_iou;
  const auto it = iou.find(*labels.find("bridge"));
  return it == iou.end() ? 0.0 : it->second;
}

Verdict refinement_direction(const std::filesystem::path& scratch) {
  const auto t0 = Clock::now();
  const auto base_cfg = bridge_config(scratch / "bridge_base", 8, false);
  const auto refined_cfg = bridge_config(scratch / "bridge_w8", 8, true);
  const LabelSet labels = base_cfg.label_set();
  const double without = bridge_iou(run_pipeline(base_cfg, false, nullptr), labels);
  const double with = bridge_iou(run_pipeline(refined_cfg, false, nullptr), labels);
  const auto report = stage_detail::read_json(refined_cfg.output / "refinement.json");
  return {with >= without && with - without >= 0.1,
          "bridge IoU " + fmt(without) + " without, " + fmt(with) + " with refinement (" +
              std::to_string(report["outcomes"].size()) + " triggers), " + fmt(seconds_since(t0), 1) + " s"};
}

Verdict invariance(const std::filesystem::path& scratch) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::size_t scaling_diff = 0, shuffle_diff = 0, relabel_diff = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = random_instance(rng);
    const auto base = fuse(inst.cloud, inst.partials, inst.params, inst.label_count);
    for (double lambda : {0.1, 3.7}) {
      auto scaled = inst.partials;
      for (auto& p : scaled) {
        for (auto& e : p.entries) e.confidence *= lambda;
      }
      const auto r = fuse(inst.cloud, scaled, inst.params, inst.label_count);
      scaling_diff += r.labels != base.labels;
    }
    auto shuffled = inst.partials;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto s = fuse(inst.cloud, shuffled, inst.params, inst.label_count, 3);
    shuffle_diff += s.labels != base.labels || s.vote_mass != base.vote_mass || s.support != base.support;
    // permute which camera id each partial carries
    std::vector<std::uint32_t> ids;
    for (const auto& p : shuffled) ids.push_back(p.camera);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t k = 0; k < ids.size(); ++k) shuffled[k].camera = ids[k];
    relabel_diff += fuse(inst.cloud, shuffled, inst.params, inst.label_count).labels != base.labels;
  }

  std::vector<std::string> hashes{sha256_file(scratch / "bridge_w8" / "fused.ply")};
  for (std::size_t workers : {1, 4}) {
    const auto cfg = bridge_config(scratch / ("bridge_w" + std::to_string(workers)), workers, true);
    run_pipeline(cfg, false, nullptr);
    hashes.push_back(sha256_file(cfg.output / "fused.ply"));
  }
  const bool same_hash = hashes[0] == hashes[1] && hashes[0] == hashes[2];
  return {scaling_diff == 0 && shuffle_diff == 0 && relabel_diff == 0 && same_hash,
          "scaling diffs " + std::to_string(scaling_diff) + ", order diffs " + std::to_string(shuffle_diff) +
              ", camera-id permutation diffs " + std::to_string(relabel_diff) + ", fused.ply sha256 " +
              hashes[0].substr(0, 12) + (same_hash ? " for workers 1/4/8" : " differs across workers") + ", " +
              fmt(seconds_since(t0), 1) + " s"};
}

// ---------------------------------------------------------------------------
// 7

Verdict geometry() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  double ortho = 0.0, principal = 0.0, proj = 0.0;
  const auto intr = intrinsics_from_fov(90.0, 480, 640);
  std::size_t projected = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 c(u(rng), u(rng), u(rng)), t(u(rng), u(rng), u(rng));
    if ((t - c).norm() < 1.0) continue;
    const CameraPose pose = look_at(c, t);
    const Mat3 should_be_identity = pose.rotation * pose.rotation.transpose();
    ortho = std::max(ortho, (should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff());
    const auto p = project_point(t, intr, pose);
    principal = std::max(principal, p ? std::hypot(p->u - intr.cx, p->v - intr.cy) : 1e9);

    // K [R | t] applied to homogeneous coordinates
    const Vec3 x(u(rng), u(rng), u(rng));
    Eigen::Matrix<double, 3, 4> rt;
    rt << pose.rotation, pose.translation;
    Eigen::Matrix3d k;
    k << intr.fx, 0, intr.cx, 0, intr.fy, intr.cy, 0, 0, 1;
    const Eigen::Vector3d h = k * rt * Eigen::Vector4d(x.x(), x.y(), x.z(), 1.0);
    if (const auto q = project_point(x, intr, pose)) {
      ++projected;
      proj = std::max({proj, std::abs(q->u - h.x() / h.z()) / (1.0 + std::abs(q->u)),
                       std::abs(q->v - h.y() / h.z()) / (1.0 + std::abs(q->v)), std::abs(q->depth - h.z())});
    }
  }

  // a neighbour at exactly epsilon is out, one ulp closer is in
  bool strict = true;
  for (double eps : {0.25, 0.5, 1.0, 2.0}) {
    const PointCloud cloud({Vec3(0, 0, 0)});
    FusionParams params;
    params.epsilon = eps;
    const LabeledPartialCloud at{0, {{0, Vec3(eps, 0, 0), 1, 1.0, 1.0}}};
    const LabeledPartialCloud inside{0, {{0, Vec3(std::nextafter(eps, 0.0), 0, 0), 1, 1.0, 1.0}}};
    strict &= fuse(cloud, std::vector{at}, params, 2).support[0] == 0;
    strict &= fuse(cloud, std::vector{inside}, params, 2).support[0] == 1;
  }
  const bool pass = ortho <= 1e-9 && principal <= 1e-6 && proj <= 1e-9 && projected > 100 && strict;
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << "orthonormality " << ortho << ", principal point " << principal
     << " px, projection " << proj << " over " << projected << " points, strict epsilon "
     << (strict ? "ok" : "violated");
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 8

Verdict performance() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::size_t n = 1'000'000, cameras = 50, per_camera = 50'000;
  // a 1 km drive corridor; each camera sees a 60 m stretch of it
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(1000.0 * u01(rng), 20.0 * u01(rng) - 10.0, 10.0 * u01(rng));
  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) { return a.x() < b.x(); });
  const PointCloud cloud(std::move(pts));
  std::vector<LabeledPartialCloud> partials(cameras);
  for (std::size_t c = 0; c < cameras; ++c) {
    partials[c].camera = static_cast<std::uint32_t>(c);
    const double x0 = 20.0 * static_cast<double>(c);
    const auto lo = static_cast<std::size_t>(x0 / 1000.0 * n);
    const auto hi = std::min(n, static_cast<std::size_t>((x0 + 60.0) / 1000.0 * n));
    for (std::size_t k = 0; k < per_camera; ++k) {
      const auto idx = static_cast<std::uint32_t>(lo + rng() % (hi - lo));
      partials[c].entries.push_back({idx, cloud.position(idx), static_cast<ClassId>(1 + rng() % 8), 1.0 - u01(rng),
                                     0.5 + 49.5 * u01(rng)});
    }
    std::sort(partials[c].entries.begin(), partials[c].entries.end(),
              [](const PartialEntry& a, const PartialEntry& b) { return a.point_index < b.point_index; });
  }
  const auto t0 = Clock::now();
  const auto r = fuse(cloud, partials, FusionParams{}, 9, 8);
  const double t = seconds_since(t0);
  const auto supported = std::count_if(r.support.begin(), r.support.end(), [](auto s) { return s > 0; });
  return {t <= 60.0, std::to_string(n) + " points x " + std::to_string(cameras) + " partials of " +
                         std::to_string(per_camera) + " entries, " + std::to_string(supported) +
                         " supported, fused in " + fmt(t, 2) + " s"};
}

}  // namespace

int main() {
  TempDir scratch("acceptance");
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"fusion oracle equivalence", fusion_oracle},
      {"renderer oracle equivalence", renderer_oracle},
      {"end-to-end oracle accuracy", [&] { return end_to_end_oracle(scratch.path()); }},
      {"noise robustness monotonicity", noise_monotonicity},
      {"refinement direction", [&] { return refinement_direction(scratch.path()); }},
      {"invariance suite", [&] { return invariance(scratch.path()); }},
      {"geometry suite", geometry},
      {"performance budget", performance},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << "criterion " << i + 1 << " " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << v.detail << std::endl;
  }
  return failures;
}
