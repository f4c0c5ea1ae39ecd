#pragma once

#include <cmath>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"
#include "opentie/point_cloud.hpp"

namespace opentie {

/// Rotation taking the plane normal onto +y, so the plane becomes y = offset.
inline RigidTransform align_to_xoz(const Plane& plane,
                                   const std::string& from_frame = frames_id::camera) {
  return rotation_aligning(plane.normal(), Vec3::UnitY(), from_frame, frames_id::aligned);
}

/// Points within `tau` of the plane; provenance kept in lockstep.
inline PointCloud select_near_plane(const PointCloud& cloud, const Plane& plane, double tau) {
  if (!(tau > 0.0)) throw Error("mask-gen", ErrorCode::InvalidArgument, "tau must be > 0");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::abs(plane_signed_distance(plane, cloud.points[i])) <= tau) keep.push_back(i);
  }
  return cloud.subset(keep);
}

/// Tags every point with the rounded pixel it projects to; points behind the
/// camera or outside the image are dropped. Used for clouds that lost their
/// provenance through downsampling or a file round trip.
inline PointCloud with_projected_provenance(const PointCloud& cloud, const CameraModel& cam) {
  if (cloud.frame != frames_id::camera) {
    throw Error("mask-gen", ErrorCode::FrameMismatch, "projection needs a camera-frame cloud");
  }
  PointCloud out;
  out.frame = cloud.frame;
  std::vector<PixelIndex> prov;
  for (const auto& p : cloud.points) {
    if (!(p.z() > 0.0)) continue;
    const Pixel px = project(cam, p);
    const int u = static_cast<int>(std::lround(px.u));
    const int v = static_cast<int>(std::lround(px.v));
    if (u < 0 || v < 0 || u >= cam.width || v >= cam.height) continue;
    out.points.push_back(p);
    prov.push_back({u, v});
  }
  out.provenance = std::move(prov);
  return out;
}

/// Marks every provenance pixel, then dilates with a (2r+1) x (2r+1) square.
inline BinaryMask rasterize_mask(const PointCloud& selected, int width, int height,
                                 int dilation_radius) {
  if (!selected.provenance) throw Error("mask-gen", ErrorCode::MissingProvenance);
  if (dilation_radius < 0) {
    throw Error("mask-gen", ErrorCode::InvalidArgument, "dilation radius must be >= 0");
  }
  BinaryMask seeds(width, height, 0);
  for (const auto& px : *selected.provenance) {
    if (!seeds.contains(px.u, px.v)) {
      throw Error("mask-gen", ErrorCode::InvalidArgument, "provenance pixel out of bounds");
    }
    seeds(px.u, px.v) = 1;
  }
  if (dilation_radius == 0) return seeds;

  // separable: horizontal then vertical
  const int r = dilation_radius;
  BinaryMask horiz(width, height, 0);
  for (int v = 0; v < height; ++v) {
    int last = -r - 1;  // last seed column seen
    for (int u = 0; u < std::min(width, r); ++u) {
      if (seeds(u, v)) last = u;
    }
    for (int u = 0; u < width; ++u) {
      if (u + r < width && seeds(u + r, v)) last = u + r;
      if (last >= u - r) horiz(u, v) = 1;
    }
  }
  BinaryMask out(width, height, 0);
  for (int u = 0; u < width; ++u) {
    int last = -r - 1;
    for (int v = 0; v < std::min(height, r); ++v) {
      if (horiz(u, v)) last = v;
    }
    for (int v = 0; v < height; ++v) {
      if (v + r < height && horiz(u, v + r)) last = v + r;
      if (last >= v - r) out(u, v) = 1;
    }
  }
  return out;
}

/// Background (mask false) pixels are set to black.
inline RgbImage apply_mask(const RgbImage& image, const BinaryMask& mask) {
  if (!image.same_shape(mask)) throw Error("mask-gen", ErrorCode::SizeMismatch);
  RgbImage out = image;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask.data()[i]) out.data()[i] = {0, 0, 0};
  }
  return out;
}

}  // namespace opentie
