#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <limits>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"
#include "opentie/point_cloud.hpp"

namespace opentie {

struct BlockMatchParams {
  int block_radius = 2;
  int max_disparity = 64;
  /// A match is rejected when best_cost >= uniqueness_ratio * second_best_cost.
  double uniqueness_ratio = 0.95;
};

/// SAD block matching on a rectified pair. The right block is the left block
/// shifted left by d. Pixels whose block or any candidate shift leaves the image
/// are invalid. Second-best excludes the immediate neighbours of the best shift
/// so that a sub-pixel true disparity does not fail the uniqueness test.
inline DisparityMap block_match_disparity(const GrayImage& left, const GrayImage& right,
                                          const BlockMatchParams& params = {}) {
  if (!left.same_shape(right)) {
    throw Error("stereo", ErrorCode::SizeMismatch, "left and right images differ in size");
  }
  const int r = params.block_radius;
  const int max_d = params.max_disparity;
  if (r < 1 || max_d < 1) {
    throw Error("stereo", ErrorCode::InvalidArgument, "block_radius and max_disparity must be >= 1");
  }
  const int w = left.width();
  const int h = left.height();
  const int n_d = max_d + 1;
  DisparityMap out(w, h, kInvalidDisparity);

  const int u_begin = r + max_d;
  const int u_end = w - r;  // exclusive
  if (u_begin >= u_end || 2 * r + 1 > h) return out;

  std::vector<std::int32_t> cost(static_cast<std::size_t>(w) * n_d);
  std::vector<std::int32_t> col(static_cast<std::size_t>(w));

  for (int v = r; v < h - r; ++v) {
    for (int d = 0; d <= max_d; ++d) {
      // column sums of |L - R| over the block's rows
      for (int u = d; u < w; ++u) {
        std::int32_t s = 0;
        for (int dv = -r; dv <= r; ++dv) {
          s += std::abs(static_cast<int>(left(u, v + dv)) - static_cast<int>(right(u - d, v + dv)));
        }
        col[u] = s;
      }
      for (int u = u_begin; u < u_end; ++u) {
        std::int32_t s = 0;
        for (int du = -r; du <= r; ++du) s += col[u + du];
        cost[static_cast<std::size_t>(u) * n_d + d] = s;
      }
    }

    for (int u = u_begin; u < u_end; ++u) {
      const std::int32_t* c = &cost[static_cast<std::size_t>(u) * n_d];
      int best = 0;
      for (int d = 1; d <= max_d; ++d) {
        if (c[d] < c[best]) best = d;
      }
      std::int64_t second = std::numeric_limits<std::int64_t>::max();
      for (int d = 0; d <= max_d; ++d) {
        if (std::abs(d - best) > 1 && c[d] < second) second = c[d];
      }
      if (second != std::numeric_limits<std::int64_t>::max() &&
          static_cast<double>(c[best]) >= params.uniqueness_ratio * static_cast<double>(second)) {
        continue;
      }
      double disp = best;
      if (best > 0 && best < max_d) {
        const double c0 = c[best - 1];
        const double c1 = c[best];
        const double c2 = c[best + 1];
        const double denom = c0 - 2.0 * c1 + c2;
        if (denom > 0.0) disp += (c0 - c2) / (2.0 * denom);
      }
      out(u, v) = static_cast<float>(std::clamp(disp, 0.0, static_cast<double>(max_d)));
    }
  }
  return out;
}

inline DisparityMap block_match_disparity(const GrayImage& left, const GrayImage& right,
                                          int block_radius, int max_disparity) {
  return block_match_disparity(left, right, BlockMatchParams{block_radius, max_disparity});
}

inline double disparity_to_depth(const StereoRig& rig, double disparity) {
  if (!(disparity > 0.0)) {
    throw Error("stereo", ErrorCode::NonPositiveDisparity);
  }
  return rig.camera.fx * rig.baseline / disparity;
}

/// Camera-frame cloud with one point per valid pixel, tagged with its pixel.
/// Zero disparity (a point at infinity) yields no point.
inline PointCloud disparity_to_cloud(const StereoRig& rig, const DisparityMap& disp) {
  if (!disp.same_shape(rig.camera.width, rig.camera.height)) {
    throw Error("stereo", ErrorCode::SizeMismatch, "disparity map does not match camera size");
  }
  PointCloud cloud;
  cloud.frame = frames_id::camera;
  std::vector<PixelIndex> prov;
  for (int v = 0; v < disp.height(); ++v) {
    for (int u = 0; u < disp.width(); ++u) {
      const float d = disp(u, v);
      if (!(d > 0.0f)) continue;
      const double z = disparity_to_depth(rig, d);
      cloud.points.push_back(backproject(rig.camera, u, v, z));
      prov.push_back({u, v});
    }
  }
  cloud.provenance = std::move(prov);
  return cloud;
}

namespace detail {

// Max over a centred window of half-width `half`, clipped at the ends.
inline void sliding_max(const float* in, float* out, int n, int stride, int half) {
  std::deque<int> q;  // indices with decreasing values
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int hi = std::min(n - 1, i + half);
    while (next <= hi) {
      while (!q.empty() && in[q.back() * stride] <= in[next * stride]) q.pop_back();
      q.push_back(next++);
    }
    while (q.front() < i - half) q.pop_front();
    out[i * stride] = in[q.front() * stride];
  }
}

}  // namespace detail

/// Keeps a pixel iff its disparity is within `delta` of the largest valid
/// disparity in the centred window x window neighbourhood.
inline DisparityMap window_disparity_filter(const DisparityMap& disp, int window, double delta) {
  if (window < 3 || window % 2 == 0) {
    throw Error("stereo", ErrorCode::InvalidArgument, "window must be odd and >= 3");
  }
  if (!(delta > 0.0)) throw Error("stereo", ErrorCode::InvalidArgument, "delta must be > 0");
  const int w = disp.width();
  const int h = disp.height();
  const int half = window / 2;

  // invalid pixels are negative, so they never win the max against a valid one
  DisparityMap row_max(w, h);
  for (int v = 0; v < h; ++v) {
    detail::sliding_max(&disp.data()[static_cast<std::size_t>(v) * w],
                        &row_max.data()[static_cast<std::size_t>(v) * w], w, 1, half);
  }
  DisparityMap local_max(w, h);
  for (int u = 0; u < w; ++u) {
    detail::sliding_max(&row_max.data()[u], &local_max.data()[u], h, w, half);
  }

  DisparityMap out = disp;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float d = out.data()[i];
    if (!is_valid_disparity(d)) continue;
    if (static_cast<double>(d) < static_cast<double>(local_max.data()[i]) - delta) {
      out.data()[i] = kInvalidDisparity;
    }
  }
  return out;
}

}  // namespace opentie
