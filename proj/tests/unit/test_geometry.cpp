#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "properties.hpp"
#include "support.hpp"

namespace opentie {
namespace {

using testing::Gen;

TEST(PlaneSignedDistance, Examples) {
  EXPECT_NEAR(plane_signed_distance(Plane({0, 1, 0}, 0.5), {1, 0.7, 2}), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(plane_signed_distance(Plane({0, 0, 1}, 2), {0, 0, 0}), -2.0);
  const Plane p({1, 2, 3}, 4);
  const Point3 on = p.offset() * p.normal() + p.normal().unitOrthogonal() * 0.37;
  EXPECT_NEAR(plane_signed_distance(p, on), 0.0, 1e-15);
}

TEST(Plane, CanonicalSignAndNormalization) {
  const Plane p({0, -2, 0}, -1);
  EXPECT_EQ(p.normal(), Vec3(0, 1, 0));
  EXPECT_DOUBLE_EQ(p.offset(), 0.5);
  const Plane q({0, 0, -3}, 6);
  EXPECT_EQ(q.normal(), Vec3(0, 0, 1));
  EXPECT_DOUBLE_EQ(q.offset(), -2.0);
  EXPECT_THROW(Plane(Vec3::Zero(), 1.0), Error);
}

TEST(FitPlane, ExactCoplanar) {
  const std::vector<Point3> pts = {{0, 2, 0}, {1, 2, 0}, {0, 2, 1}, {1, 2, 1}};
  const Plane p = fit_plane_least_squares(pts);
  EXPECT_TRUE(p.approx_equal(Plane({0, 1, 0}, 2), 1e-12));
}

TEST(FitPlane, CollinearIsDegenerate) {
  const std::vector<Point3> line = {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
  try {
    fit_plane_least_squares(line);
    FAIL() << "expected DegenerateInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
  const std::vector<Point3> same = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  EXPECT_THROW(fit_plane_least_squares(same), Error);
  const std::vector<Point3> two = {{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(fit_plane_least_squares(two), Error);
}

TEST(FitPlane, NoisyPlaneAgainstJacobiOracle) {
  Gen g(7);
  const Vec3 n = Vec3(1, 1, 1).normalized();
  const Vec3 u = n.unitOrthogonal();
  const Vec3 v = n.cross(u);
  std::vector<Point3> pts;
  for (int i = 0; i < 200; ++i) {
    pts.push_back(n / std::sqrt(3.0) + g.uniform(-1, 1) * u + g.uniform(-1, 1) * v + g.normal(1e-3) * n);
  }
  const Plane fit = fit_plane_least_squares(pts);
  EXPECT_LT(std::acos(std::min(1.0, fit.normal().dot(n))), 0.01);
  EXPECT_TRUE(fit.approx_equal(testing::oracle_fit_plane(pts), 1e-10));
}

TEST(JacobiOracle, DiagonalAndKnownMatrix) {
  // the oracle itself: a rotated diag(1, 2, 3)
  Gen g(3);
  const Mat3 r = g.rotation();
  const Mat3 m = r * Vec3(3, 1, 2).asDiagonal() * r.transpose();
  const auto [values, vectors] = testing::jacobi_eigen(m);
  EXPECT_NEAR(values[0], 1.0, 1e-12);
  EXPECT_NEAR(values[1], 2.0, 1e-12);
  EXPECT_NEAR(values[2], 3.0, 1e-12);
  EXPECT_NEAR(std::abs(vectors[0].dot(r.col(1))), 1.0, 1e-12);
}

TEST(RotationAligning, Examples) {
  const RigidTransform same = rotation_aligning({0, 1, 0}, {0, 1, 0});
  EXPECT_EQ(same.rotation, Mat3::Identity());

  const RigidTransform quarter = rotation_aligning({1, 0, 0}, {0, 1, 0});
  EXPECT_LT((quarter.rotation * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm(), 1e-12);
  const Mat3 about_z = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()).toRotationMatrix();
  EXPECT_LT((quarter.rotation - about_z).cwiseAbs().maxCoeff(), 1e-12);

  const RigidTransform flip = rotation_aligning({0, -1, 0}, {0, 1, 0});
  EXPECT_LT((flip.rotation * Vec3(0, -1, 0) - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_TRUE(flip.is_valid(1e-12));
  // the half turn is about the coordinate axis least parallel to +y: x
  EXPECT_LT((flip.rotation * Vec3::UnitX() - Vec3::UnitX()).norm(), 1e-12);
}

TEST(RotationAligning, Property) {
  const auto r = testing::prop_rotation_aligning(2000, 11);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Transform, Examples) {
  const Point3 p(0.3, -1.2, 4.0);
  EXPECT_EQ(transform_point(RigidTransform::identity("camera"), p), p);
  const auto t = RigidTransform::translation_only({1, 0, 0}, "a", "b");
  EXPECT_EQ(transform_point(t, {0, 0, 1}), Point3(1, 0, 1));

  Gen g(5);
  const RigidTransform tr = g.transform("a", "b");
  const RigidTransform composed = compose(RigidTransform::identity("b"), tr);
  EXPECT_LT((composed.rotation - tr.rotation).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((composed.translation - tr.translation).norm(), 1e-15);
  EXPECT_EQ(composed.from_frame, "a");
  EXPECT_EQ(composed.to_frame, "b");
}

TEST(Transform, FrameMismatch) {
  const auto ab = RigidTransform::identity("a");
  auto bc = RigidTransform::identity("b");
  bc.to_frame = "c";
  try {
    compose(bc, ab);
    FAIL() << "expected FrameMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FrameMismatch);
    EXPECT_EQ(e.module(), "geometry");
  }
}

TEST(Transform, ComposeInverseProperty) {
  const auto r = testing::prop_compose_inverse(2000, 12);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Transform, PlaneTransformMapsPoints) {
  Gen g(9);
  for (int i = 0; i < 200; ++i) {
    const Plane p(g.unit_vector(), g.uniform(-2, 2));
    const RigidTransform t = g.transform("camera", "base");
    const Point3 on = p.offset() * p.normal() + g.uniform(-1, 1) * p.normal().unitOrthogonal();
    EXPECT_NEAR(plane_signed_distance(transform_plane(t, p), transform_point(t, on)), 0.0, 1e-12);
  }
}

TEST(FitPlane, EquivarianceProperty) {
  const auto r = testing::prop_fit_plane_equivariance(2000, 13);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Plane, CanonicalProperty) {
  const auto r = testing::prop_plane_canonical(2000, 14);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Projection, Examples) {
  CameraModel cam{500, 500, 320, 240, 640, 480};
  const Pixel px = project(cam, {0, 0, 1});
  EXPECT_DOUBLE_EQ(px.u, 320.0);
  EXPECT_DOUBLE_EQ(px.v, 240.0);
  try {
    project(cam, {0, 0, -1});
    FAIL() << "expected BehindCamera";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
  }
  EXPECT_THROW(project(cam, {1, 1, 0}), Error);
  EXPECT_THROW(backproject(cam, 10, 10, 0.0), Error);
}

TEST(Projection, RoundTripProperty) {
  Gen g(15);
  const CameraModel cam;
  for (int i = 0; i < 10000; ++i) {
    const double z = g.uniform(0.1, 10.0);
    const Point3 p(g.uniform(-2, 2) * z, g.uniform(-2, 2) * z, z);
    const Pixel px = project(cam, p);
    const Point3 back = backproject(cam, px.u, px.v, z);
    ASSERT_LE((back - p).norm(), 1e-9 * p.norm()) << "case " << i;
  }
}

TEST(CameraModel, Validity) {
  CameraModel cam;
  EXPECT_TRUE(cam.is_valid());
  cam.cx = cam.width;
  EXPECT_FALSE(cam.is_valid());
  cam = CameraModel{};
  cam.fy = 0;
  EXPECT_FALSE(cam.is_valid());
  StereoRig rig;
  rig.baseline = 0;
  EXPECT_FALSE(rig.is_valid());
}

TEST(Error, MessageFormat) {
  const Error e("plane-detect", ErrorCode::LayersTooClose, "gap 1 mm");
  EXPECT_STREQ(e.what(), "plane-detect: LayersTooClose: gap 1 mm");
  EXPECT_STREQ(Error("stereo", ErrorCode::SizeMismatch).what(), "stereo: SizeMismatch");
  const ParseError pe("node-locate", 3, "bad field");
  EXPECT_EQ(pe.line(), 3u);
  EXPECT_STREQ(pe.what(), "node-locate: ParseError: line 3: bad field");
  EXPECT_TRUE(is_input_error(ErrorCode::ParseError));
  EXPECT_FALSE(is_input_error(ErrorCode::NoConsensus));
}

}  // namespace
}  // namespace opentie
