#include <gtest/gtest.h>

#include "lfseg/refinement.hpp"
#include "test_helpers.hpp"

using namespace lfseg;
using testing_util::TempDir;
using testing_util::write_file;

namespace {

const LabelSet kLabels({"a", "b"});

ViewRender grid_view(int w, int h) {
  ViewRender view;
  view.intr = CameraIntrinsics{1, 1, 0, 0, w, h};
  view.image = Grid<Rgb>(w, h, Rgb{});
  view.depth = Grid<double>(w, h, std::numeric_limits<double>::infinity());
  view.point_map = Grid<std::uint32_t>(w, h, kNoPoint);
  return view;
}

Detection2D box_detection(ClassId label, double conf, BBox box, int w, int h) {
  Bitmask m(w, h, 0);
  for (int r = box.y0; r < box.y1; ++r) {
    for (int c = box.x0; c < box.x1; ++c) m(c, r) = 1;
  }
  return Detection2D(label, conf, box, m);
}

// Flat 21x21 patch of ground points around the origin.
PointCloud ground_patch() {
  std::vector<Vec3> pts;
  for (int i = -10; i <= 10; ++i) {
    for (int j = -10; j <= 10; ++j) pts.emplace_back(0.1 * i, 0.1 * j, 0.0);
  }
  return PointCloud(pts);
}

PartialEntry entry(std::uint32_t point, ClassId label, double conf, double dist = 1.0) {
  return {point, Vec3(point, 0, 0), label, conf, dist};
}

}  // namespace

TEST(Triggers, ConfidenceThreshold) {
  ViewRender view = grid_view(4, 4);
  view.point_map(2, 2) = 0;
  view.depth(2, 2) = 1.0;
  const PointCloud cloud({Vec3(1, 2, 3)});
  RefinementConfig cfg;
  cfg.enabled = true;
  cfg.target_classes = {1};
  const BBox box{0, 0, 4, 4};
  auto t = find_triggers({{box_detection(1, 0.8, box, 4, 4)}}, cfg, {view}, cloud);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].target_index, 0u);
  EXPECT_EQ(t[0].target_point, Vec3(1, 2, 3));
  EXPECT_TRUE(find_triggers({{box_detection(1, 0.3, box, 4, 4)}}, cfg, {view}, cloud).empty());
  // non-target class never triggers
  EXPECT_TRUE(find_triggers({{box_detection(2, 0.9, box, 4, 4)}}, cfg, {view}, cloud).empty());
  // exactly at the threshold triggers
  EXPECT_EQ(find_triggers({{box_detection(1, 0.5, box, 4, 4)}}, cfg, {view}, cloud).size(), 1u);
}

TEST(Triggers, EmptyCenterFallsBackToNearestMappedPixel) {
  ViewRender view = grid_view(5, 5);
  view.point_map(0, 0) = 0;
  view.depth(0, 0) = 4.0;
  view.point_map(4, 1) = 1;
  view.depth(4, 1) = 2.0;
  view.point_map(1, 4) = 2;
  view.depth(1, 4) = 2.0;
  const BBox box{0, 0, 5, 5};
  EXPECT_EQ(trigger_target(view, box), std::optional<std::uint32_t>(1));
  view.point_map(2, 2) = 0;
  EXPECT_EQ(trigger_target(view, box), std::optional<std::uint32_t>(0));
  EXPECT_FALSE(trigger_target(grid_view(5, 5), box).has_value());
}

TEST(Triggers, OnePerViewAndClass) {
  ViewRender view = grid_view(4, 4);
  view.point_map(1, 1) = 0;
  view.depth(1, 1) = 1.0;
  const PointCloud cloud({Vec3(0, 0, 1)});
  RefinementConfig cfg;
  cfg.enabled = true;
  cfg.target_classes = {1, 2};
  const BBox box{0, 0, 3, 3};
  const auto t = find_triggers(
      {{box_detection(2, 0.6, box, 4, 4), box_detection(1, 0.7, box, 4, 4), box_detection(1, 0.9, box, 4, 4)}}, cfg,
      {view}, cloud);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].detection.label(), 1);
  EXPECT_EQ(t[0].detection.confidence(), 0.9);
  EXPECT_EQ(t[1].detection.label(), 2);
  EXPECT_THROW(find_triggers({{}, {}}, cfg, {view}, cloud), ArgumentError);
}

class RefineFixture : public ::testing::Test {
 protected:
  const PointCloud cloud = ground_patch();
  const CameraIntrinsics intr = intrinsics_from_fov(90.0, 16, 16);
  RenderParams render{0.05, 0.1};
  RefinementConfig cfg;
  RefinementTrigger trigger;
  TempDir dir{"refine"};

  void SetUp() override {
    cfg.enabled = true;
    cfg.target_classes = {1};
    cfg.vertical_offsets = {5.0, 10.0};
    trigger.view = 0;
    trigger.detection = box_detection(1, 0.9, BBox{0, 0, 4, 4}, 16, 16);
    trigger.target_index = 220;  // origin
    trigger.target_point = cloud.position(220);
  }

  void write_mask(std::size_t k, const std::string& cls, double conf) {
    const auto det = box_detection(*kLabels.find(cls), conf, BBox{0, 0, 16, 16}, 16, 16);
    write_file(dir.path() / mask_file_name(refined_view_id("0", k)),
               detections_to_json({det}, kLabels).dump());
  }

  RefinementOutcome run(const Segmenter& seg, std::uint32_t camera = 7) {
    const RefineContext ctx{cloud, intr, render, seg, kDefaultMinCameraDistance, 0.25};
    return refine(trigger, Vec3(-10, 0, 2), cfg, ctx, camera, "0");
  }
};

TEST_F(RefineFixture, KeepsMostConfidentOffset) {
  write_mask(0, "a", 0.7);
  write_mask(1, "a", 0.9);
  const Segmenter seg(MaskFilesSegmenter{dir.path().string()}, kLabels);
  const auto o = run(seg);
  EXPECT_EQ(o.offsets_tried, (std::vector<double>{5.0, 10.0}));
  ASSERT_TRUE(o.chosen_offset.has_value());
  EXPECT_EQ(*o.chosen_offset, 10.0);
  EXPECT_EQ(o.chosen_confidence, 0.9);
  ASSERT_TRUE(o.partial.has_value());
  EXPECT_EQ(o.partial->camera, 7u);
  EXPECT_GT(o.points_labeled(), 0u);
  for (const auto& e : o.partial->entries) {
    EXPECT_EQ(e.label, 1);
    EXPECT_EQ(e.confidence, 0.9);
  }
  const auto j = outcome_to_json(o, kLabels);
  EXPECT_EQ(j["class"], "a");
  EXPECT_EQ(j["chosen_offset"], 10.0);
}

TEST_F(RefineFixture, TiesGoToSmallerOffset) {
  write_mask(0, "a", 0.8);
  write_mask(1, "a", 0.8);
  const Segmenter seg(MaskFilesSegmenter{dir.path().string()}, kLabels);
  EXPECT_EQ(*run(seg).chosen_offset, 5.0);
}

TEST_F(RefineFixture, AbsentClassYieldsNothing) {
  write_mask(0, "b", 0.9);
  write_mask(1, "b", 0.9);
  const Segmenter seg(MaskFilesSegmenter{dir.path().string()}, kLabels);
  const auto o = run(seg);
  EXPECT_FALSE(o.chosen_offset.has_value());
  EXPECT_FALSE(o.partial.has_value());
  EXPECT_EQ(o.points_labeled(), 0u);
  EXPECT_TRUE(outcome_to_json(o, kLabels)["chosen_offset"].is_null());
}

TEST_F(RefineFixture, OracleSeesTheTargetFromAbove) {
  std::vector<ClassId> gt(cloud.size(), 1);
  const PointCloud labeled(cloud.positions(), std::nullopt, gt);
  const Segmenter seg(OracleSegmenter{}, kLabels);
  const RefineContext ctx{labeled, intr, render, seg, kDefaultMinCameraDistance, 0.25};
  const auto o = refine(trigger, Vec3(-10, 0, 2), cfg, ctx, 3, "0");
  ASSERT_TRUE(o.partial.has_value());
  EXPECT_EQ(*o.chosen_offset, 5.0);
  // many ground points share a pixel up there; one of them sits next to the target
  EXPECT_TRUE(std::any_of(o.partial->entries.begin(), o.partial->entries.end(),
                          [](const PartialEntry& e) { return e.position.norm() < 1.0; }));
}

TEST_F(RefineFixture, TransportErrorNamesTheOffset) {
  const Segmenter seg(RemoteSegmenter{"http://127.0.0.1:9", 1.0, 1}, kLabels);
  try {
    run(seg);
    FAIL() << "expected a transport error";
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("refinement offset 5"), std::string::npos) << e.what();
  }
}

TEST(Merge, VoteLetsConfidentRefinedEntryWin) {
  const PointCloud cloud({Vec3(0, 0, 0)});
  const LabeledPartialCloud base{0, {{0, Vec3(0, 0, 0), 2, 0.2, 1.0}}};
  const LabeledPartialCloud refined{1, {{0, Vec3(0, 0, 0), 1, 1.0, 1.0}}};
  const FusionParams params;
  const auto r = fuse_with_refinement(cloud, {base}, {refined}, MergeMode::vote, params, 3);
  EXPECT_EQ(r.labels[0], 1);
  EXPECT_EQ(r.support[0], 2u);
  EXPECT_DOUBLE_EQ(r.vote_mass[0], 1.0);
}

TEST(Merge, OverrideAlwaysTakesRefinedLabel) {
  const PointCloud cloud({Vec3(0, 0, 0), Vec3(5, 0, 0)});
  std::vector<LabeledPartialCloud> base;
  for (std::uint32_t c = 0; c < 3; ++c) {
    base.push_back({c, {{0, Vec3(0, 0, 0), 2, 1.0, 1.0}, {1, Vec3(5, 0, 0), 2, 1.0, 1.0}}});
  }
  const std::vector<LabeledPartialCloud> refined{{10, {{0, Vec3(0, 0, 0), 1, 0.3, 1.0}}}};
  const FusionParams params;
  const auto voted = fuse_with_refinement(cloud, base, refined, MergeMode::vote, params, 3);
  EXPECT_EQ(voted.labels[0], 2);
  const auto r = fuse_with_refinement(cloud, base, refined, MergeMode::override_labels, params, 3);
  EXPECT_EQ(r.labels[0], 1);
  EXPECT_EQ(r.support[0], 4u);
  EXPECT_DOUBLE_EQ(r.vote_mass[0], 0.3);
  // points without a refined entry keep the base result
  EXPECT_EQ(r.labels[1], 2);
  EXPECT_EQ(r.support[1], 3u);
}

TEST(Merge, EmptyRefinedEqualsBaseFusion) {
  const PointCloud cloud({Vec3(0, 0, 0), Vec3(0.01, 0, 0), Vec3(3, 0, 0)});
  const std::vector<LabeledPartialCloud> base{{0, {entry(0, 1, 0.5)}}, {1, {entry(0, 2, 0.7)}}};
  const FusionParams params;
  const auto plain = fuse(cloud, base, params, 3);
  for (auto mode : {MergeMode::vote, MergeMode::override_labels}) {
    const auto r = fuse_with_refinement(cloud, base, {}, mode, params, 3);
    EXPECT_EQ(r.labels, plain.labels);
    EXPECT_EQ(r.vote_mass, plain.vote_mass);
    EXPECT_EQ(r.support, plain.support);
  }
}

TEST(Config, Validation) {
  RefinementConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.enabled = true;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.target_classes = {1};
  EXPECT_NO_THROW(cfg.validate());
  cfg.vertical_offsets = {5.0, -1.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.vertical_offsets = {5.0};
  cfg.trigger_confidence = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(parse_merge_mode("override"), MergeMode::override_labels);
  EXPECT_THROW(parse_merge_mode("max"), ConfigError);
}
