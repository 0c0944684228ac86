#include <random>

#include <gtest/gtest.h>

#include "lfseg/detection.hpp"
#include "lfseg/partial_cloud.hpp"

using namespace lfseg;

namespace {

// Naive run-length reference: runs of equal values, starting with zeros.
std::vector<std::uint64_t> reference_rle(const Bitmask& m) {
  std::vector<std::uint64_t> runs{0};
  std::uint8_t current = 0;
  for (auto v : m.data()) {
    if ((v != 0) != (current != 0)) {
      runs.push_back(0);
      current = v ? 1 : 0;
    }
    ++runs.back();
  }
  return runs;
}

}  // namespace

TEST(Rle, MatchesReferenceAndRoundTrips) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 13), h = 1 + static_cast<int>(rng() % 9);
    Bitmask m(w, h, 0);
    const double p = static_cast<double>(rng() % 100) / 100.0;
    for (auto& v : m.data()) v = std::uniform_real_distribution<double>(0, 1)(rng) < p;
    const auto counts = rle_encode(m);
    EXPECT_EQ(counts, reference_rle(m));
    EXPECT_EQ(rle_decode(h, w, counts), m);
  }
}

TEST(Rle, DetectionEncodingMatchesFullMask) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 13), h = 1 + static_cast<int>(rng() % 9);
    const int x0 = static_cast<int>(rng() % w), y0 = static_cast<int>(rng() % h);
    const BBox box{x0, y0, x0 + 1 + static_cast<int>(rng() % (w - x0)), y0 + 1 + static_cast<int>(rng() % (h - y0))};
    Bitmask crop(box.width(), box.height(), 0);
    for (auto& v : crop.data()) v = rng() % 3 == 0;
    const auto d = Detection2D::from_crop(1, 0.5, box, w, h, crop);
    EXPECT_EQ(rle_encode(d), reference_rle(d.full_mask()));
  }
}

TEST(Rle, KnownExampleAndErrors) {
  Bitmask m(3, 2, 0);
  m(0, 0) = 1;
  m(2, 1) = 1;
  EXPECT_EQ(rle_encode(m), (std::vector<std::uint64_t>{0, 1, 4, 1}));
  EXPECT_THROW(rle_decode(2, 3, {0, 1, 4}), FormatError);
  EXPECT_THROW(rle_decode(2, 3, {0, 1, 4, 2}), FormatError);
}

TEST(Detection, InvariantsAndCrop) {
  Bitmask full(6, 4, 0);
  full(2, 1) = full(3, 2) = 1;
  const Detection2D d(3, 0.7, BBox{2, 1, 4, 3}, full);
  EXPECT_EQ(d.area(), 2u);
  EXPECT_TRUE(d.covers(3, 2));
  EXPECT_FALSE(d.covers(2, 2));
  EXPECT_FALSE(d.covers(5, 3));
  EXPECT_EQ(d.full_mask(), full);
  std::vector<std::pair<int, int>> px;
  d.for_each_pixel([&](int c, int r) { px.emplace_back(c, r); });
  EXPECT_EQ(px, (std::vector<std::pair<int, int>>{{2, 1}, {3, 2}}));

  EXPECT_THROW(Detection2D(3, 0.7, BBox{2, 1, 3, 3}, full), ArgumentError);  // pixel outside bbox
  EXPECT_THROW(Detection2D(3, 0.0, BBox{2, 1, 4, 3}, full), ArgumentError);
  EXPECT_THROW(Detection2D(3, 1.5, BBox{2, 1, 4, 3}, full), ArgumentError);
  EXPECT_THROW(Detection2D(0, 0.5, BBox{2, 1, 4, 3}, full), ArgumentError);
  EXPECT_THROW(Detection2D(3, 0.5, BBox{2, 1, 7, 3}, full), ArgumentError);
  EXPECT_THROW(Detection2D(3, 0.5, BBox{2, 1, 2, 3}, full), ArgumentError);
}

TEST(Detection, JsonRoundTrip) {
  LabelSet labels({"road", "tree"});
  Bitmask full(5, 5, 0);
  full(1, 1) = full(2, 3) = 1;
  const Detection2D d(2, 0.9, BBox{1, 1, 3, 4}, full);
  const auto j = detections_to_json({d}, labels);
  ASSERT_TRUE(j.is_array());
  const auto raw = parse_detection(detection_entries(j)[0], 5, 5);
  EXPECT_EQ(raw.label, "tree");
  EXPECT_EQ(raw.confidence, 0.9);
  EXPECT_EQ(raw.bbox, (BBox{1, 1, 3, 4}));
  EXPECT_EQ(Detection2D::from_crop(2, raw.confidence, raw.bbox, raw.frame_width, raw.frame_height, raw.crop), d);
  const nlohmann::json wrapped{{"detections", j}};
  EXPECT_EQ(detection_entries(wrapped).size(), 1u);
}

TEST(Detection, SchemaViolations) {
  LabelSet labels({"road"});
  Bitmask full(4, 4, 0);
  full(1, 1) = 1;
  const auto good = detection_to_json(Detection2D(1, 0.5, BBox{1, 1, 2, 2}, full), labels);
  EXPECT_NO_THROW(parse_detection(good, 4, 4));
  EXPECT_THROW(parse_detection(good, 5, 4), FormatError);  // size mismatch
  auto j = good;
  j["confidence"] = 0.0;
  EXPECT_THROW(parse_detection(j, 4, 4), FormatError);
  j = good;
  j["bbox"] = {2, 2, 4, 4};  // mask pixel outside
  EXPECT_THROW(parse_detection(j, 4, 4), FormatError);
  j = good;
  j["bbox"] = {0, 0, 5, 4};
  EXPECT_THROW(parse_detection(j, 4, 4), FormatError);
  j = good;
  j["mask_rle"]["counts"] = {5, 1};
  EXPECT_THROW(parse_detection(j, 4, 4), FormatError);
  j = good;
  j["mask_rle"]["counts"] = {-1, 17};
  EXPECT_THROW(parse_detection(j, 4, 4), FormatError);
  j = good;
  j.erase("label");
  EXPECT_THROW(parse_detection(j, 4, 4), FormatError);
  EXPECT_THROW(detection_entries(nlohmann::json{{"x", 1}}), FormatError);
}

TEST(Backproject, MaxConfidencePerPointThenLowerClass) {
  const CameraIntrinsics intr{4, 4, 2, 2, 4, 4};
  PointCloud cloud({Vec3(0, 0, 1), Vec3(0.5, 0, 2), Vec3(-0.25, -0.25, 1)});
  const ViewRender view = render_view(cloud, intr, CameraPose{}, {1e-4, 0.1});
  ASSERT_EQ(view.point_map(2, 2), 0u);
  ASSERT_EQ(view.point_map(3, 2), 1u);
  Bitmask all(4, 4, 1);
  const Detection2D a(2, 0.6, BBox{0, 0, 4, 4}, all);
  const Detection2D b(1, 0.6, BBox{0, 0, 4, 4}, all);
  Bitmask one(4, 4, 0);
  one(1, 1) = 1;
  const Detection2D c(3, 0.9, BBox{1, 1, 2, 2}, one);
  const auto partial = backproject_mask(view, cloud, {a, b, c}, 0.5, 7);
  EXPECT_EQ(partial.camera, 7u);
  ASSERT_EQ(partial.size(), 3u);
  EXPECT_EQ(partial.entries[0].point_index, 0u);
  EXPECT_EQ(partial.entries[0].label, 1);  // tie at 0.6 -> lower id
  EXPECT_EQ(partial.entries[2].point_index, 2u);
  EXPECT_EQ(partial.entries[2].label, 3);
  EXPECT_EQ(partial.entries[2].confidence, 0.9);
  EXPECT_EQ(partial.entries[0].cam_dist, 1.0);
  EXPECT_EQ(partial.entries[1].position, cloud.position(1));
  EXPECT_NEAR(partial.entries[1].cam_dist, std::sqrt(4.25), 1e-15);

  // distance floor
  PointCloud close({Vec3(0, 0, 0.2)});
  const ViewRender v2 = render_view(close, intr, CameraPose{}, {1e-4, 0.1});
  EXPECT_EQ(backproject_mask(v2, close, {a}, 0.5).entries[0].cam_dist, 0.5);

  EXPECT_THROW(backproject_mask(view, cloud, {Detection2D(1, 0.5, BBox{0, 0, 5, 4}, Bitmask(5, 4, 1))}, 0.5),
               ArgumentError);
  EXPECT_TRUE(backproject_mask(view, cloud, {}, 0.5).empty());
}

TEST(Backproject, ConfidenceFloorAndJson) {
  Bitmask m(2, 2, 1);
  std::vector<Detection2D> dets{Detection2D(1, 0.2, BBox{0, 0, 2, 2}, m), Detection2D(1, 0.25, BBox{0, 0, 2, 2}, m)};
  const auto kept = apply_confidence_floor(dets, 0.25);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].confidence(), 0.25);

  PointCloud cloud({Vec3(1, 2, 3), Vec3(4, 5, 6)});
  LabeledPartialCloud p{3, {{1, cloud.position(1), 2, 0.75, 1.5}}};
  EXPECT_EQ(partial_from_json(partial_to_json(p), cloud), p);
  auto j = partial_to_json(p);
  j["entries"][0][0] = 9;
  EXPECT_THROW(partial_from_json(j, cloud), DataError);
}
