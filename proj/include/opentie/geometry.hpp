#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>

#include "opentie/error.hpp"

namespace opentie {

/// Metric 3D point (meters). The frame is carried by the container.
using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace frames_id {
inline const std::string camera = "camera";
inline const std::string aligned = "aligned";
inline const std::string base = "base";
inline const std::string grid = "grid";
}  // namespace frames_id

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

/// Components with magnitude at or below this are treated as zero when picking
/// the canonical normal sign.
inline constexpr double kCanonicalZero = 1e-12;

/// Plane {p : normal . p = offset} with unit normal whose first nonzero
/// component is positive.
class Plane {
 public:
  Plane() = default;

  /// Normalizes and canonicalizes; throws DegenerateInput on a zero normal.
  Plane(const Vec3& normal, double offset) {
    const double len = normal.norm();
    if (!(len > 0.0) || !std::isfinite(len) || !std::isfinite(offset)) {
      throw Error("geometry", ErrorCode::DegenerateInput, "invalid plane normal");
    }
    // A normal already unit to rounding is kept as is, so canonicalizing a
    // canonical plane reproduces it bit for bit.
    const bool unit = std::abs(len - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon();
    normal_ = unit ? normal : Vec3(normal / len);
    offset_ = unit ? offset : offset / len;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(normal_[i]) > kCanonicalZero) {
        if (normal_[i] < 0.0) {
          normal_ = -normal_;
          offset_ = -offset_;
        }
        break;
      }
    }
  }

  /// Wraps a normal that is already unit length and canonical, bit for bit.
  static Plane from_canonical(const Vec3& unit_normal, double offset) {
    Plane p;
    p.normal_ = unit_normal;
    p.offset_ = offset;
    return p;
  }

  const Vec3& normal() const { return normal_; }
  double offset() const { return offset_; }

  bool approx_equal(const Plane& other, double tol) const {
    return (normal_ - other.normal_).cwiseAbs().maxCoeff() <= tol &&
           std::abs(offset_ - other.offset_) <= tol;
  }

 private:
  Vec3 normal_ = Vec3::UnitY();
  double offset_ = 0.0;
};

inline double plane_signed_distance(const Plane& plane, const Point3& p) {
  return plane.normal().dot(p) - plane.offset();
}

/// Total least squares plane through `points`: the normal is the eigenvector of
/// the smallest eigenvalue of the centered scatter matrix.
inline Plane fit_plane_least_squares(std::span<const Point3> points) {
  if (points.size() < 3) {
    throw Error("geometry", ErrorCode::DegenerateInput, "fewer than 3 points");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Mat3 scatter = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    scatter.noalias() += d * d.transpose();
  }
  const double trace = scatter.trace();
  Eigen::SelfAdjointEigenSolver<Mat3> solver(scatter);
  const Vec3 evals = solver.eigenvalues();  // ascending
  if (!(trace > 0.0) || (evals[1] < 1e-12 * trace)) {
    throw Error("geometry", ErrorCode::DegenerateInput, "points are collinear or coincident");
  }
  const Vec3 normal = solver.eigenvectors().col(0);
  return Plane(normal, normal.dot(centroid));
}

/// Rigid transform p_to = R p_from + t between two labelled frames.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::string from_frame;
  std::string to_frame;

  static RigidTransform identity(const std::string& frame) {
    return {Mat3::Identity(), Vec3::Zero(), frame, frame};
  }

  static RigidTransform translation_only(const Vec3& t, const std::string& from,
                                         const std::string& to) {
    return {Mat3::Identity(), t, from, to};
  }

  bool is_valid(double tol = 1e-9) const {
    return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol && is_finite(translation);
  }
};

inline Point3 transform_point(const RigidTransform& t, const Point3& p) {
  return t.rotation * p + t.translation;
}

inline Vec3 transform_direction(const RigidTransform& t, const Vec3& v) {
  return t.rotation * v;
}

/// T2 after T1. Requires T1.to_frame == T2.from_frame.
inline RigidTransform compose(const RigidTransform& t2, const RigidTransform& t1) {
  if (t1.to_frame != t2.from_frame) {
    throw Error("geometry", ErrorCode::FrameMismatch,
                "cannot compose " + t1.from_frame + "->" + t1.to_frame + " with " +
                    t2.from_frame + "->" + t2.to_frame);
  }
  return {t2.rotation * t1.rotation, t2.rotation * t1.translation + t2.translation,
          t1.from_frame, t2.to_frame};
}

inline RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = t.rotation.transpose();
  return {rt, -(rt * t.translation), t.to_frame, t.from_frame};
}

/// Plane expressed in the target frame of `t`.
inline Plane transform_plane(const RigidTransform& t, const Plane& plane) {
  const Vec3 n = t.rotation * plane.normal();
  return Plane(n, plane.offset() + n.dot(t.translation));
}

namespace detail {

inline Mat3 skew(const Vec3& v) {
  Mat3 k;
  k << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return k;
}

// Rotation about axis from x cross y by the angle between them, for dot(x,y)
// well away from -1. R = I + [v]x + [v]x^2 / (1 + c).
inline Mat3 rotation_between(const Vec3& from, const Vec3& to) {
  const Vec3 v = from.cross(to);
  const double c = from.dot(to);
  const Mat3 k = skew(v);
  return Mat3::Identity() + k + (k * k) / (1.0 + c);
}

}  // namespace detail

inline constexpr double kAlignParallelEps = 1e-12;

/// Rotation taking `from_dir` onto `to_dir` about their common normal. Nearly
/// antipodal inputs get a 180 degree turn about the coordinate axis least
/// parallel to `to_dir` (orthogonalized), followed by the residual small turn.
inline RigidTransform rotation_aligning(const Vec3& from_dir, const Vec3& to_dir,
                                        const std::string& from_frame = frames_id::camera,
                                        const std::string& to_frame = frames_id::aligned) {
  const double c = std::clamp(from_dir.dot(to_dir), -1.0, 1.0);
  RigidTransform out{Mat3::Identity(), Vec3::Zero(), from_frame, to_frame};
  if (c > 1.0 - kAlignParallelEps) {
    if (from_dir == to_dir) return out;
    out.rotation = detail::rotation_between(from_dir, to_dir);
    return out;
  }
  if (c < -1.0 + kAlignParallelEps) {
    int axis_idx = 0;
    for (int i = 1; i < 3; ++i) {
      if (std::abs(to_dir[i]) < std::abs(to_dir[axis_idx])) axis_idx = i;
    }
    Vec3 axis = Vec3::Unit(axis_idx);
    axis = (axis - axis.dot(to_dir) * to_dir).normalized();
    const Mat3 half_turn = 2.0 * axis * axis.transpose() - Mat3::Identity();
    const Vec3 flipped = half_turn * from_dir;
    out.rotation = detail::rotation_between(flipped, to_dir) * half_turn;
    return out;
  }
  const Vec3 axis = from_dir.cross(to_dir).normalized();
  const double angle = std::acos(c);
  out.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  return out;
}

/// Pinhole intrinsics. Camera frame: +z forward, +x right, +y down.
struct CameraModel {
  double fx = 700.0;
  double fy = 700.0;
  double cx = 640.0;
  double cy = 360.0;
  int width = 1280;
  int height = 720;

  bool is_valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width &&
           cy >= 0.0 && cy < height;
  }
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

inline Pixel project(const CameraModel& cam, const Point3& p) {
  if (!(p.z() > 0.0)) {
    throw Error("geometry", ErrorCode::BehindCamera);
  }
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

inline Point3 backproject(const CameraModel& cam, double u, double v, double depth) {
  if (!(depth > 0.0)) {
    throw Error("geometry", ErrorCode::BehindCamera, "non-positive depth");
  }
  return {(u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth};
}

/// Rectified binocular pair sharing one intrinsics model.
struct StereoRig {
  CameraModel camera;
  double baseline = 0.06;

  bool is_valid() const { return camera.is_valid() && baseline > 0.0; }
};

}  // namespace opentie
