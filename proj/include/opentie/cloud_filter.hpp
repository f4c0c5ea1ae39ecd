#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "opentie/detail/kdtree.hpp"
#include "opentie/error.hpp"
#include "opentie/point_cloud.hpp"

namespace opentie {

/// Mean Euclidean distance of every point to its k nearest other points.
inline std::vector<double> mean_knn_distances(const PointCloud& cloud, std::size_t k) {
  detail::KdTree tree(cloud.points);
  std::vector<double> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto d2 = tree.knn_squared(i, k);
    double sum = 0.0;
    for (double v : d2) sum += std::sqrt(v);
    out[i] = sum / static_cast<double>(k);
  }
  return out;
}

/// Drops points whose mean k-NN distance exceeds mean + sigma_mult * stddev
/// (sample standard deviation over the cloud). Survivor order is preserved.
inline PointCloud statistical_outlier_removal(const PointCloud& cloud, std::size_t k,
                                              double sigma_mult) {
  if (k < 1) throw Error("cloud-filter", ErrorCode::InvalidArgument, "k must be >= 1");
  if (cloud.size() <= k) {
    throw Error("cloud-filter", ErrorCode::TooFewPoints,
                "need more than k=" + std::to_string(k) + " points");
  }
  const auto mean_d = mean_knn_distances(cloud, k);
  const double n = static_cast<double>(mean_d.size());
  double mu = 0.0;
  for (double d : mean_d) mu += d;
  mu /= n;
  double var = 0.0;
  for (double d : mean_d) var += (d - mu) * (d - mu);
  const double sigma = std::sqrt(var / (n - 1.0));
  const double limit = mu + sigma_mult * sigma;

  std::vector<std::size_t> keep;
  keep.reserve(cloud.size());
  for (std::size_t i = 0; i < mean_d.size(); ++i) {
    if (!(mean_d[i] > limit)) keep.push_back(i);
  }
  return cloud.subset(keep);
}

using VoxelKey = std::array<std::int64_t, 3>;

inline VoxelKey voxel_key(const Point3& p, double voxel_size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
}

/// One centroid per occupied voxel, in ascending (ix, iy, iz) order.
/// Provenance is dropped.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) {
    throw Error("cloud-filter", ErrorCode::InvalidArgument, "voxel_size must be > 0");
  }
  std::vector<VoxelKey> keys(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) keys[i] = voxel_key(cloud.points[i], voxel_size);
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  PointCloud out;
  out.frame = cloud.frame;
  std::size_t i = 0;
  while (i < order.size()) {
    const VoxelKey& key = keys[order[i]];
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
    for (; i < order.size() && keys[order[i]] == key; ++i) {
      sum += cloud.points[order[i]];
      ++count;
    }
    out.points.push_back(sum / static_cast<double>(count));
  }
  return out;
}

}  // namespace opentie
