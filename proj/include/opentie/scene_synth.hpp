#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"
#include "opentie/node_locate.hpp"
#include "opentie/plane_detect.hpp"
#include "opentie/point_cloud.hpp"

namespace opentie {

/// Looking straight down the grid's +y axis from 1.2 m, tilted slightly.
inline RigidTransform default_grid_pose() {
  Mat3 look;
  // camera x = grid x, camera y = -grid z, camera z = grid y
  look << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  const Mat3 tilt = (Eigen::AngleAxisd(8.0 * std::numbers::pi / 180.0, Vec3::UnitX()) *
                     Eigen::AngleAxisd(-5.0 * std::numbers::pi / 180.0, Vec3::UnitY()))
                        .toRotationMatrix();
  return {tilt * look, Vec3(0.0, 0.0, 1.2), frames_id::grid, frames_id::camera};
}

/// Two perpendicular rod layers. Layer A: `cols` rods along grid x, spaced
/// along z, axes at y = 0. Layer B: `rows` rods along grid z, spaced along x,
/// axes at y = layer_gap. Rods overhang the outer crossings by half a spacing.
struct GridSpec {
  int rows = 5;
  int cols = 5;
  double spacing_x = 0.2;
  double spacing_z = 0.2;
  double rod_radius = 0.006;
  double layer_gap = 0.012;
  RigidTransform pose = default_grid_pose();  // grid -> camera
  double noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    auto bad = [](const char* what) {
      return Error("scene-synth", ErrorCode::InvalidArgument, what);
    };
    if (rows < 2 || cols < 2) throw bad("rows and cols must be >= 2");
    if (!(rod_radius > 0.0)) throw bad("rod_radius must be > 0");
    if (!(spacing_x > 2 * rod_radius) || !(spacing_z > 2 * rod_radius)) {
      throw bad("spacing must exceed the rod diameter");
    }
    if (!(layer_gap >= 2 * rod_radius)) throw bad("layer_gap must be >= rod diameter");
    if (!(noise_sigma >= 0.0)) throw bad("noise_sigma must be >= 0");
    if (!(outlier_fraction >= 0.0) || !(outlier_fraction < 1.0)) {
      throw bad("outlier_fraction must be in [0,1)");
    }
    if (!pose.is_valid(1e-9)) throw bad("pose is not a rigid transform");
  }
};

/// A finite cylinder in camera coordinates.
struct Rod {
  Point3 start = Point3::Zero();
  Vec3 axis = Vec3::UnitX();  // unit
  double length = 0.0;
  double radius = 0.0;
  Vec3 ref1 = Vec3::UnitY();  // fixed perpendicular frame for texturing
  Vec3 ref2 = Vec3::UnitZ();
  int layer = 0;              // 0 = A (near), 1 = B
  int index = 0;
};

namespace detail {

inline double grid_x(const GridSpec& g, int i) { return (i - (g.rows - 1) / 2.0) * g.spacing_x; }
inline double grid_z(const GridSpec& g, int j) { return (j - (g.cols - 1) / 2.0) * g.spacing_z; }

}  // namespace detail

inline std::vector<Rod> grid_rods(const GridSpec& g) {
  const double x_lo = detail::grid_x(g, 0) - 0.5 * g.spacing_x;
  const double x_hi = detail::grid_x(g, g.rows - 1) + 0.5 * g.spacing_x;
  const double z_lo = detail::grid_z(g, 0) - 0.5 * g.spacing_z;
  const double z_hi = detail::grid_z(g, g.cols - 1) + 0.5 * g.spacing_z;
  const Mat3& R = g.pose.rotation;
  std::vector<Rod> rods;
  int idx = 0;
  for (int j = 0; j < g.cols; ++j) {
    Rod r;
    r.start = transform_point(g.pose, Point3(x_lo, 0.0, detail::grid_z(g, j)));
    r.axis = R * Vec3::UnitX();
    r.length = x_hi - x_lo;
    r.radius = g.rod_radius;
    r.ref1 = R * Vec3::UnitY();
    r.ref2 = R * Vec3::UnitZ();
    r.layer = 0;
    r.index = idx++;
    rods.push_back(r);
  }
  for (int i = 0; i < g.rows; ++i) {
    Rod r;
    r.start = transform_point(g.pose, Point3(detail::grid_x(g, i), g.layer_gap, z_lo));
    r.axis = R * Vec3::UnitZ();
    r.length = z_hi - z_lo;
    r.radius = g.rod_radius;
    r.ref1 = R * Vec3::UnitY();
    r.ref2 = R * Vec3::UnitX();
    r.layer = 1;
    r.index = idx++;
    rods.push_back(r);
  }
  return rods;
}

/// Nodes (camera frame), row-major over (rows, cols): midpoint of the two rod
/// axes at each crossing.
inline std::vector<Point3> grid_nodes(const GridSpec& g) {
  std::vector<Point3> nodes;
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) {
      nodes.push_back(transform_point(
          g.pose, Point3(detail::grid_x(g, i), 0.5 * g.layer_gap, detail::grid_z(g, j))));
    }
  }
  return nodes;
}

/// Rod-axis planes of both layers (layer A is the near one).
inline ParallelPlanePair grid_planes(const GridSpec& g) {
  const Vec3 n = g.pose.rotation * Vec3::UnitY();
  const Plane a(n, n.dot(g.pose.translation));
  const Point3 on_b = transform_point(g.pose, Point3(0.0, g.layer_gap, 0.0));
  ParallelPlanePair pair;
  pair.normal = a.normal();
  pair.offset_near = a.offset();
  pair.offset_far = a.normal().dot(on_b);
  pair.frame = frames_id::camera;
  return pair;
}

struct GroundTruth {
  std::vector<Point3> nodes;  // camera frame
  ParallelPlanePair planes;
  std::vector<DetectionBox> labels;
  DisparityMap disparity;
};

struct SyntheticCloud {
  PointCloud cloud;
  GroundTruth truth;
  std::size_t surface_points = 0;
};

/// Samples the camera-facing half of every rod on a jittered 2 mm grid
/// (axial x arc length), adds Gaussian noise along the surface normal, then
/// appends uniform outliers drawn from the grid bounding box scaled 2x.
inline SyntheticCloud generate_grid_cloud(const GridSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr double kStep = 0.002;

  SyntheticCloud out;
  out.cloud.frame = frames_id::camera;
  for (const Rod& rod : grid_rods(spec)) {
    const int n_axial = static_cast<int>(std::ceil(rod.length / kStep));
    const int n_arc = static_cast<int>(std::ceil(std::numbers::pi * rod.radius / kStep));
    for (int a = 0; a < n_axial; ++a) {
      for (int b = 0; b < n_arc; ++b) {
        const double s = (a + unit(rng)) / n_axial * rod.length;
        const double theta = ((b + unit(rng)) / n_arc - 0.5) * std::numbers::pi;
        const Point3 c = rod.start + s * rod.axis;
        Vec3 toward = -c;  // camera centre is the origin
        toward -= toward.dot(rod.axis) * rod.axis;
        toward.normalize();
        const Vec3 side = rod.axis.cross(toward);
        const Vec3 normal = std::cos(theta) * toward + std::sin(theta) * side;
        const double dn = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise(rng) : 0.0;
        out.cloud.points.push_back(c + (rod.radius + dn) * normal);
      }
    }
  }
  out.surface_points = out.cloud.size();

  if (spec.outlier_fraction > 0.0) {
    const RigidTransform to_grid = invert(spec.pose);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : out.cloud.points) {
      const Vec3 q = transform_point(to_grid, p);
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const Vec3 centre = 0.5 * (lo + hi);
    const Vec3 half = hi - lo;  // 2x box half-extent
    const auto n_out = static_cast<std::size_t>(std::llround(
        spec.outlier_fraction / (1.0 - spec.outlier_fraction) * static_cast<double>(out.surface_points)));
    for (std::size_t k = 0; k < n_out; ++k) {
      const Vec3 q(centre.x() + (2 * unit(rng) - 1) * half.x(),
                   centre.y() + (2 * unit(rng) - 1) * half.y(),
                   centre.z() + (2 * unit(rng) - 1) * half.z());
      out.cloud.points.push_back(transform_point(spec.pose, q));
    }
  }

  out.truth.nodes = grid_nodes(spec);
  out.truth.planes = grid_planes(spec);
  out.truth.planes.inliers_near = out.truth.planes.inliers_far = out.surface_points / 2;
  return out;
}

// ---------------------------------------------------------------------------
// Ray casting

struct RayHit {
  double t = std::numeric_limits<double>::infinity();
  int rod = -1;
  Point3 point = Point3::Zero();
};

/// Nearest front-surface hit of origin + t * dir (t > 0) against the rods.
/// End caps are ignored.
inline RayHit cast_ray(const std::vector<Rod>& rods, const Point3& origin, const Vec3& dir) {
  RayHit best;
  for (std::size_t k = 0; k < rods.size(); ++k) {
    const Rod& rod = rods[k];
    const Vec3 w = origin - rod.start;
    const Vec3 d_perp = dir - dir.dot(rod.axis) * rod.axis;
    const Vec3 w_perp = w - w.dot(rod.axis) * rod.axis;
    const double a = d_perp.squaredNorm();
    if (a <= 0.0) continue;
    const double b = 2.0 * d_perp.dot(w_perp);
    const double c = w_perp.squaredNorm() - rod.radius * rod.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) continue;
    // numerically stable smaller root
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double t0 = q / a;
    double t1 = c / q;
    if (t0 > t1) std::swap(t0, t1);
    const double t = t0;
    if (!(t > 0.0) || t >= best.t) continue;
    const double s = (w + t * dir).dot(rod.axis);
    if (s < 0.0 || s > rod.length) continue;
    best.t = t;
    best.rod = static_cast<int>(k);
    best.point = origin + t * dir;
  }
  return best;
}

/// Z-buffered analytic render; disparity = fx * B / Z at the nearest hit.
inline DisparityMap render_disparity(const GridSpec& spec, const StereoRig& rig) {
  spec.validate();
  const auto rods = grid_rods(spec);
  const auto& cam = rig.camera;
  DisparityMap out(cam.width, cam.height, kInvalidDisparity);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      // dir.z == 1, so the ray parameter is the depth
      const Vec3 dir((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
      const RayHit hit = cast_ray(rods, Point3::Zero(), dir);
      if (hit.rod >= 0) out(u, v) = static_cast<float>(cam.fx * rig.baseline / hit.t);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Texture and stereo synthesis

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double lattice(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(i) ^
                                             mix64(static_cast<std::uint64_t>(j) + 0x51ed27ULL)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Smoothly interpolated lattice noise in [0, 1).
inline double value_noise(double x, double y, std::uint64_t seed) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  double tx = x - fx;
  double ty = y - fy;
  tx = tx * tx * (3 - 2 * tx);
  ty = ty * ty * (3 - 2 * ty);
  const double a = lattice(ix, iy, seed);
  const double b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed);
  const double d = lattice(ix + 1, iy + 1, seed);
  return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

inline std::uint8_t to_gray(double t) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(30.0 + 200.0 * t), 0L, 255L));
}

inline constexpr double kTextureCell = 0.004;  // meters on the rod surface
inline constexpr std::uint8_t kBackgroundLevel = 12;

inline std::uint8_t rod_intensity(const Rod& rod, const Point3& p, std::uint64_t seed) {
  const Vec3 rel = p - rod.start;
  const double s = rel.dot(rod.axis);
  const double phi = std::atan2(rel.dot(rod.ref2), rel.dot(rod.ref1));
  return to_gray(value_noise(s / kTextureCell, rod.radius * phi / kTextureCell,
                             seed + 1000003ULL * static_cast<std::uint64_t>(rod.index + 1)));
}


}  // namespace detail

struct StereoPair {
  GrayImage left;
  GrayImage right;
};

/// Renders both rectified views of the textured grid. The texture is attached
/// to the rod surfaces, so the right view equals the left view warped by the
/// rendered disparity. The background is a flat dark level: it carries no
/// texture to match, as no surface exists there.
inline StereoPair synth_stereo_pair(const GridSpec& spec, const StereoRig& rig) {
  spec.validate();
  const auto rods = grid_rods(spec);
  const auto& cam = rig.camera;
  StereoPair pair{GrayImage(cam.width, cam.height), GrayImage(cam.width, cam.height)};
  for (int eye = 0; eye < 2; ++eye) {
    const Point3 origin(eye == 0 ? 0.0 : rig.baseline, 0.0, 0.0);
    GrayImage& img = eye == 0 ? pair.left : pair.right;
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const Vec3 dir((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
        const RayHit hit = cast_ray(rods, origin, dir);
        img(u, v) = hit.rod >= 0
                        ? detail::rod_intensity(rods[static_cast<std::size_t>(hit.rod)], hit.point, spec.seed)
                        : detail::kBackgroundLevel;
      }
    }
  }
  return pair;
}

struct PlanarStereoScene {
  StereoPair images;
  DisparityMap disparity;
};

/// Textured fronto-parallel plane at `depth`: constant disparity fx * B / depth.
inline PlanarStereoScene synth_fronto_parallel_pair(const StereoRig& rig, double depth,
                                                    std::uint64_t seed) {
  if (!(depth > 0.0)) throw Error("scene-synth", ErrorCode::InvalidArgument, "depth must be > 0");
  const auto& cam = rig.camera;
  PlanarStereoScene out{{GrayImage(cam.width, cam.height), GrayImage(cam.width, cam.height)},
                        DisparityMap(cam.width, cam.height,
                                     static_cast<float>(cam.fx * rig.baseline / depth))};
  for (int eye = 0; eye < 2; ++eye) {
    const double ox = eye == 0 ? 0.0 : rig.baseline;
    GrayImage& img = eye == 0 ? out.images.left : out.images.right;
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const double x = ox + (u - cam.cx) / cam.fx * depth;
        const double y = (v - cam.cy) / cam.fy * depth;
        img(u, v) = detail::to_gray(detail::value_noise(x / detail::kTextureCell,
                                                        y / detail::kTextureCell, seed));
      }
    }
  }
  return out;
}

/// One class-0 box per node, centred on the projected node.
inline std::vector<DetectionBox> ground_truth_boxes(const std::vector<Point3>& nodes,
                                                    const CameraModel& cam, double box_size) {
  if (!(box_size > 0.0) || box_size > 1.0) {
    throw Error("scene-synth", ErrorCode::InvalidArgument, "box_size must be in (0,1]");
  }
  std::vector<DetectionBox> boxes;
  for (const auto& n : nodes) {
    const Pixel px = project(cam, n);
    if (px.u < 0 || px.v < 0 || px.u > cam.width || px.v > cam.height) {
      throw Error("scene-synth", ErrorCode::InvalidArgument, "node projects outside the image");
    }
    boxes.push_back({0, px.u / cam.width, px.v / cam.height, box_size, box_size, std::nullopt});
  }
  return boxes;
}

inline std::string emit_ground_truth_labels(const GroundTruth& gt, const CameraModel& cam,
                                            double box_size) {
  return write_yolo_labels(ground_truth_boxes(gt.nodes, cam, box_size));
}

}  // namespace opentie
