#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <set>
#include <vector>

#include "support.hpp"

namespace opentie {
namespace {

using testing::Gen;

PointCloud with_pixels(const std::vector<PixelIndex>& px) {
  PointCloud c;
  for (std::size_t i = 0; i < px.size(); ++i) c.points.emplace_back(0, 0, 1);
  c.provenance = px;
  return c;
}

std::size_t count_true(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto b : m.data()) n += b ? 1 : 0;
  return n;
}

TEST(AlignToXoz, Examples) {
  EXPECT_EQ(align_to_xoz(Plane({0, 1, 0}, 0.4)).rotation, Mat3::Identity());

  const Plane px({1, 0, 0}, 0.3);
  const RigidTransform t = align_to_xoz(px);
  EXPECT_EQ(t.from_frame, "camera");
  EXPECT_EQ(t.to_frame, "aligned");
  EXPECT_TRUE(t.translation.isZero(0.0));
  for (double a : {-1.0, 0.0, 2.5}) {
    const Point3 on(0.3, a, -a);
    EXPECT_NEAR(transform_point(t, on).y(), 0.3, 1e-9);
  }
}

TEST(AlignToXoz, RandomPlanes) {
  Gen g(61);
  for (int i = 0; i < 1000; ++i) {
    const Plane p(g.unit_vector(), g.uniform(-2, 2));
    const RigidTransform t = align_to_xoz(p);
    ASSERT_LT((t.rotation * p.normal() - Vec3::UnitY()).cwiseAbs().maxCoeff(), 1e-9);
    const Point3 on = p.offset() * p.normal() + g.uniform(-1, 1) * p.normal().unitOrthogonal();
    ASSERT_NEAR(transform_point(t, on).y(), p.offset(), 1e-9);
  }
}

TEST(SelectNearPlane, Examples) {
  PointCloud c;
  c.points = {{0, 0.005, 0}, {0, 0.05, 0}};
  c.provenance = std::vector<PixelIndex>{{1, 1}, {2, 2}};
  const Plane p({0, 1, 0}, 0);
  const PointCloud out = select_near_plane(c, p, 0.01);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.points[0], Point3(0, 0.005, 0));
  EXPECT_EQ((*out.provenance)[0], (PixelIndex{1, 1}));
  EXPECT_EQ(select_near_plane(c, p, 1e300).size(), 2u);
  EXPECT_THROW(select_near_plane(c, p, 0.0), Error);
}

TEST(SelectNearPlane, TwoLayerScene) {
  GridSpec spec;
  const SyntheticCloud sc = generate_grid_cloud(spec);
  const auto rods = grid_rods(spec);
  // label every noiseless surface point with the layer of the rod it lies on
  std::vector<std::size_t> near_layer;
  for (std::size_t i = 0; i < sc.cloud.size(); ++i) {
    const Point3& p = sc.cloud.points[i];
    double best = std::numeric_limits<double>::infinity();
    int layer = -1;
    for (const auto& rod : rods) {
      const Vec3 rel = p - rod.start;
      const double s = std::clamp(rel.dot(rod.axis), 0.0, rod.length);
      const double d = std::abs((rel - s * rod.axis).norm() - rod.radius);
      if (d < best) {
        best = d;
        layer = rod.layer;
      }
    }
    ASSERT_LT(best, 1e-9);
    if (layer == 0) near_layer.push_back(i);
  }
  const PointCloud out =
      select_near_plane(sc.cloud, sc.truth.planes.near_plane(), spec.layer_gap / 2);
  ASSERT_GT(out.size(), 1000u);
  EXPECT_EQ(out.points, sc.cloud.subset(near_layer).points);
}

TEST(SelectNearPlane, CommutesWithAlignment) {
  Gen g(62);
  PointCloud c;
  for (int i = 0; i < 2000; ++i) c.points.push_back(g.vec(-1, 1));
  for (int trial = 0; trial < 20; ++trial) {
    const Plane p(g.unit_vector(), g.uniform(-0.5, 0.5));
    const double tau = g.uniform(0.01, 0.3);
    const RigidTransform t = align_to_xoz(p);
    const PointCloud aligned = transform_cloud(t, c);
    const Plane p_aligned = transform_plane(t, p);
    const PointCloud a = select_near_plane(c, p, tau);
    const PointCloud b = select_near_plane(aligned, p_aligned, tau);
    ASSERT_EQ(a.size(), b.size()) << "trial " << trial;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_LT((transform_point(t, a.points[i]) - b.points[i]).norm(), 1e-12);
    }
  }
}

TEST(RasterizeMask, Examples) {
  const BinaryMask one = rasterize_mask(with_pixels({{10, 10}}), 20, 20, 1);
  EXPECT_EQ(count_true(one), 9u);
  for (int v = 9; v <= 11; ++v) {
    for (int u = 9; u <= 11; ++u) EXPECT_TRUE(one(u, v));
  }
  EXPECT_EQ(count_true(rasterize_mask(with_pixels({}), 8, 8, 2)), 0u);
  const BinaryMask seeds = rasterize_mask(with_pixels({{1, 1}, {1, 1}, {3, 4}}), 8, 8, 0);
  EXPECT_EQ(count_true(seeds), 2u);
}

TEST(RasterizeMask, Errors) {
  PointCloud bare;
  bare.points = {{0, 0, 1}};
  try {
    rasterize_mask(bare, 4, 4, 1);
    FAIL() << "expected MissingProvenance";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingProvenance);
  }
  EXPECT_THROW(rasterize_mask(with_pixels({{4, 0}}), 4, 4, 1), Error);
  EXPECT_THROW(rasterize_mask(with_pixels({{0, 0}}), 4, 4, -1), Error);
}

TEST(RasterizeMask, MatchesBruteDilationAndIsMonotone) {
  Gen g(63);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = g.integer(1, 30);
    const int h = g.integer(1, 30);
    std::vector<PixelIndex> px;
    const int n = g.integer(0, 20);
    for (int i = 0; i < n; ++i) px.push_back({g.integer(0, w - 1), g.integer(0, h - 1)});
    std::size_t prev = 0;
    for (int r = 0; r <= 4; ++r) {
      const BinaryMask m = rasterize_mask(with_pixels(px), w, h, r);
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
          bool want = false;
          for (const auto& s : px) want = want || (std::abs(s.u - u) <= r && std::abs(s.v - v) <= r);
          ASSERT_EQ(m(u, v) != 0, want) << "trial " << trial << " r " << r << " at " << u << "," << v;
        }
      }
      const std::size_t now = count_true(m);
      ASSERT_GE(now, prev);
      prev = now;
    }
  }
}

TEST(ApplyMask, Examples) {
  RgbImage img(4, 3, Rgb{10, 20, 30});
  const BinaryMask all(4, 3, 1);
  const BinaryMask none(4, 3, 0);
  EXPECT_EQ(apply_mask(img, all), img);
  EXPECT_EQ(apply_mask(img, none), RgbImage(4, 3, Rgb{0, 0, 0}));
  BinaryMask checker(4, 3, 0);
  for (int v = 0; v < 3; ++v) {
    for (int u = 0; u < 4; ++u) checker(u, v) = static_cast<std::uint8_t>((u + v) % 2);
  }
  const RgbImage out = apply_mask(img, checker);
  for (int v = 0; v < 3; ++v) {
    for (int u = 0; u < 4; ++u) {
      const Rgb want = checker(u, v) ? Rgb{10, 20, 30} : Rgb{0, 0, 0};
      EXPECT_EQ(out(u, v), want);
    }
  }
  EXPECT_EQ(apply_mask(out, checker), out);
  try {
    apply_mask(img, BinaryMask(3, 3));
    FAIL() << "expected SizeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
  }
}

TEST(ProjectedProvenance, TagsAndDropsPoints) {
  CameraModel cam{100, 100, 50, 40, 100, 80};
  PointCloud c;
  c.points = {{0, 0, 1}, {0.1, -0.1, 1}, {0, 0, -1}, {5, 0, 1}};
  const PointCloud out = with_projected_provenance(c, cam);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ((*out.provenance)[0], (PixelIndex{50, 40}));
  EXPECT_EQ((*out.provenance)[1], (PixelIndex{60, 30}));
  c.frame = "base";
  EXPECT_THROW(with_projected_provenance(c, cam), Error);
}

TEST(MaskPgm, RoundTrip) {
  BinaryMask m(5, 2, 0);
  m(1, 1) = 1;
  m(4, 0) = 1;
  const GrayImage g = mask_to_gray(m);
  EXPECT_EQ(g(1, 1), 255);
  EXPECT_EQ(g(0, 0), 0);
  EXPECT_EQ(gray_to_mask(decode_pgm(encode_pgm(g))), m);
  RgbImage img(3, 2, Rgb{1, 2, 3});
  img(2, 1) = Rgb{250, 0, 7};
  EXPECT_EQ(decode_ppm(encode_ppm(img)), img);
}

}  // namespace
}  // namespace opentie
