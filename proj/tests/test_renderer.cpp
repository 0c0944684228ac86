#include <random>

#include <gtest/gtest.h>

#include "lfseg/png.hpp"
#include "lfseg/renderer.hpp"
#include "renderer_oracle.hpp"

using namespace lfseg;

namespace {

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, bool colored) {
  std::uniform_real_distribution<double> xy(-3, 3), z(-1, 8);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<Vec3> pts;
  std::vector<Rgb> colors;
  for (std::size_t i = 0; i < n; ++i) {
    pts.emplace_back(xy(rng), xy(rng), z(rng));
    colors.push_back(Rgb{static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                         static_cast<std::uint8_t>(byte(rng))});
  }
  // duplicate a few points so depth ties occur
  for (std::size_t i = 0; i + 3 < n; i += 17) pts[i + 3] = pts[i];
  return colored ? PointCloud(pts, colors) : PointCloud(pts);
}

}  // namespace

TEST(Renderer, MatchesBruteForceOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cloud = random_cloud(rng, 150, trial % 2 == 0);
    const auto intr = intrinsics_from_fov(70.0, 64, 48);
    const CameraPose pose = look_at(Vec3(0.1 * trial, -0.2, -4), Vec3(0, 0, 3));
    const double radius = trial % 3 == 0 ? 0.01 : 0.08;
    const auto got = render_view(cloud, intr, pose, {radius, 0.1});
    const auto want = oracle::brute_force_render(cloud, intr, pose, radius, 0.1);
    EXPECT_EQ(got.point_map, want.point_map);
    EXPECT_EQ(got.depth, want.depth);
    EXPECT_EQ(got.image, want.image);
  }
}

TEST(Renderer, TiesKeepLowerIndexAndEmptyIsBackground) {
  const CameraIntrinsics intr{10, 10, 5, 5, 10, 10};
  PointCloud cloud({Vec3(0, 0, 2), Vec3(0, 0, 2), Vec3(0, 0, 1)}, std::vector<Rgb>{{1, 1, 1}, {2, 2, 2}, {3, 3, 3}});
  auto view = render_view(cloud, intr, CameraPose{}, {0.001, 0.1});
  EXPECT_EQ(view.point_map(5, 5), 2u);
  EXPECT_EQ(mapped_pixel_count(view), 1u);
  PointCloud two({Vec3(0, 0, 2), Vec3(0, 0, 2)});
  view = render_view(two, intr, CameraPose{}, {0.001, 0.1});
  EXPECT_EQ(view.point_map(5, 5), 0u);
  EXPECT_EQ(view.image(5, 5), kUncoloredPoint);
  EXPECT_EQ(view.image(0, 0), kBackgroundColor);
  EXPECT_TRUE(std::isinf(view.depth(0, 0)));
}

TEST(Renderer, SplatRadiusScalesWithDepth) {
  const auto intr = intrinsics_from_fov(90.0, 480, 640);
  EXPECT_DOUBLE_EQ(splat_pixels(intr, 0.01, 1.0), 2.4);
  EXPECT_DOUBLE_EQ(splat_pixels(intr, 0.01, 100.0), 0.5);
  PointCloud near({Vec3(0, 0, 0.5)});
  const auto view = render_view(near, intr, CameraPose{}, {0.01, 0.1});
  // radius 4.8 px around the principal point (240, 320): 76 pixel centers
  std::size_t expected = 0;
  for (int r = 310; r < 330; ++r)
    for (int c = 230; c < 250; ++c) {
      const double du = c + 0.5 - 240, dv = r + 0.5 - 320;
      if (du * du + dv * dv <= 4.8 * 4.8) ++expected;
    }
  EXPECT_EQ(mapped_pixel_count(view), expected);
}

TEST(Renderer, RejectsBadParams) {
  PointCloud cloud({Vec3(0, 0, 1)});
  const CameraIntrinsics intr{10, 10, 5, 5, 10, 10};
  EXPECT_THROW(render_view(cloud, intr, CameraPose{}, {0.0, 0.1}), ArgumentError);
  EXPECT_THROW(render_view(cloud, intr, CameraPose{}, {0.01, 0.0}), ArgumentError);
  EXPECT_THROW(render_view(cloud, CameraIntrinsics{-1, 1, 0, 0, 1, 1}, CameraPose{}), ArgumentError);
}

TEST(Png, RoundTripAndBase64) {
  Grid<Rgb> img(7, 5, Rgb{1, 2, 3});
  img(6, 4) = Rgb{250, 0, 17};
  const auto bytes = encode_png(img);
  EXPECT_EQ(decode_png(bytes), img);
  EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  EXPECT_EQ(base64_encode({'f', 'o', 'o', 'b'}), "Zm9vYg==");
  EXPECT_EQ(base64_encode({'f', 'o', 'o', 'b', 'a'}), "Zm9vYmE=");
  EXPECT_THROW(base64_decode("Zm9v!"), FormatError);
  EXPECT_THROW(decode_png({1, 2, 3}), FormatError);
}
