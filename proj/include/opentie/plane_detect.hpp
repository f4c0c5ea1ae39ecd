#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/point_cloud.hpp"

namespace opentie {

struct RansacParams {
  int iterations = 500;
  double inlier_threshold = 0.005;
  double min_inlier_fraction = 0.3;
  std::uint64_t seed = 0;
};

struct PlaneFit {
  Plane plane;
  std::vector<std::size_t> inliers;
};

namespace detail {

inline std::vector<std::size_t> plane_inliers(const Plane& plane, std::span<const Point3> points,
                                              double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(plane_signed_distance(plane, points[i])) <= threshold) out.push_back(i);
  }
  return out;
}

inline void check_ransac_params(const RansacParams& p) {
  if (p.iterations < 1 || !(p.inlier_threshold > 0.0) || !(p.min_inlier_fraction > 0.0) ||
      p.min_inlier_fraction > 1.0) {
    throw Error("plane-detect", ErrorCode::InvalidArgument, "invalid RANSAC parameters");
  }
}

}  // namespace detail

/// Seeded RANSAC over 3-point samples. The best candidate (first one on score
/// ties) is refit by least squares on its inliers and the inlier set is
/// recomputed against the refit plane. Collinear samples use up an iteration
/// but are otherwise ignored.
inline PlaneFit ransac_dominant_plane(const PointCloud& cloud, const RansacParams& params) {
  detail::check_ransac_params(params);
  const auto& pts = cloud.points;
  const std::size_t n = pts.size();
  if (n < 3) throw Error("plane-detect", ErrorCode::DegenerateInput, "fewer than 3 points");

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t best_count = 0;
  Plane best;
  const double thr = params.inlier_threshold;

  for (int it = 0; it < params.iterations; ++it) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    std::size_t c = pick(rng);
    while (c == a || c == b) c = pick(rng);

    const Vec3 e1 = pts[b] - pts[a];
    const Vec3 e2 = pts[c] - pts[a];
    const Vec3 normal = e1.cross(e2);
    const double scale = e1.norm() * e2.norm();
    if (!(normal.norm() > 1e-12 * scale)) continue;
    const Plane candidate(normal, normal.dot(pts[a]));

    std::size_t count = 0;
    const Vec3& nv = candidate.normal();
    const double off = candidate.offset();
    for (const auto& p : pts) {
      if (std::abs(nv.dot(p) - off) <= thr) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = candidate;
    }
  }

  if (best_count == 0 ||
      static_cast<double>(best_count) < params.min_inlier_fraction * static_cast<double>(n)) {
    throw Error("plane-detect", ErrorCode::NoConsensus,
                "best support " + std::to_string(best_count) + " of " + std::to_string(n));
  }
  const auto seed_inliers = detail::plane_inliers(best, pts, thr);
  std::vector<Point3> support;
  support.reserve(seed_inliers.size());
  for (auto i : seed_inliers) support.push_back(pts[i]);
  PlaneFit fit;
  fit.plane = fit_plane_least_squares(support);
  fit.inliers = detail::plane_inliers(fit.plane, pts, thr);
  return fit;
}

/// Two-cluster partition of scalar values. Cluster 0 has the lower mean.
struct OffsetSplit {
  std::vector<int> labels;
  double mean_low = 0.0;
  double mean_high = 0.0;
};

/// Optimal 1-D 2-means: scans every threshold between consecutive distinct
/// sorted values and keeps the split with the largest between-cluster
/// scatter n_a n_b (mean_a - mean_b)^2, which minimizes the within-cluster sum
/// of squares. The result is a fixed point of Lloyd's iteration (every value is
/// nearer its own cluster mean). `seed` is accepted for interface symmetry with
/// other stages; the search is deterministic.
inline OffsetSplit kmeans_split_offsets(std::span<const double> values,
                                        [[maybe_unused]] std::uint64_t seed = 0) {
  const std::size_t n = values.size();
  if (n < 2) {
    throw Error("plane-detect", ErrorCode::DegenerateInput, "need at least 2 values");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw Error("plane-detect", ErrorCode::DegenerateInput, "all values equal");
  }
  // centre first so the prefix sums stay well conditioned
  double shift = 0.0;
  for (double x : sorted) shift += x;
  shift /= static_cast<double>(n);
  double total = 0.0;
  for (double x : sorted) total += x - shift;

  double best_score = -1.0;
  std::size_t best_k = 0;  // cluster 0 = sorted[0..best_k)
  double prefix = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    prefix += sorted[k - 1] - shift;
    if (sorted[k - 1] == sorted[k]) continue;
    const double na = static_cast<double>(k);
    const double nb = static_cast<double>(n - k);
    const double diff = prefix / na - (total - prefix) / nb;
    const double score = na * nb * diff * diff;
    if (score > best_score) {
      best_score = score;
      best_k = k;
    }
  }
  const double threshold = sorted[best_k - 1];

  OffsetSplit out;
  out.labels.resize(n);
  double s0 = 0.0;
  double s1 = 0.0;
  std::size_t n0 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = values[i] <= threshold ? 0 : 1;
    out.labels[i] = label;
    if (label == 0) {
      s0 += values[i];
      ++n0;
    } else {
      s1 += values[i];
    }
  }
  out.mean_low = s0 / static_cast<double>(n0);
  out.mean_high = s1 / static_cast<double>(n - n0);
  return out;
}

/// Two exactly parallel planes sharing one normal. "near" is the layer whose
/// members have the smaller mean camera z.
struct ParallelPlanePair {
  Vec3 normal = Vec3::UnitY();
  double offset_near = 0.0;
  double offset_far = 0.0;
  std::size_t inliers_near = 0;
  std::size_t inliers_far = 0;
  double rms_near = 0.0;
  double rms_far = 0.0;
  std::string frame = frames_id::camera;

  Plane near_plane() const { return make(offset_near); }
  Plane far_plane() const { return make(offset_far); }
  /// Plane halfway between the two layers.
  Plane mid_plane() const { return make(0.5 * (offset_near + offset_far)); }

 private:
  Plane make(double offset) const { return Plane::from_canonical(normal, offset); }
};

inline constexpr std::size_t kMinLayerSupport = 3;

/// RANSAC for the shared normal, 2-means on the projected offsets for the
/// layer split, then each layer offset is the mean of its members' offsets.
inline ParallelPlanePair detect_parallel_planes(const PointCloud& cloud,
                                                const RansacParams& params) {
  const PlaneFit dominant = ransac_dominant_plane(cloud, params);
  const Vec3 normal = dominant.plane.normal();

  std::vector<double> offsets(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) offsets[i] = normal.dot(cloud.points[i]);

  OffsetSplit split;
  try {
    split = kmeans_split_offsets(offsets, params.seed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput) throw;
    throw Error("plane-detect", ErrorCode::LayersTooClose, "all points on one plane");
  }

  double offset[2] = {0.0, 0.0};
  double mean_z[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const int l = split.labels[i];
    offset[l] += offsets[i];
    mean_z[l] += cloud.points[i].z();
    ++count[l];
  }
  for (int l = 0; l < 2; ++l) {
    offset[l] /= static_cast<double>(count[l]);
    mean_z[l] /= static_cast<double>(count[l]);
  }
  if (std::abs(offset[0] - offset[1]) < 2.0 * params.inlier_threshold) {
    throw Error("plane-detect", ErrorCode::LayersTooClose,
                "layer separation " + std::to_string(std::abs(offset[0] - offset[1])) + " m");
  }

  std::size_t inliers[2] = {0, 0};
  double sq[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const int l = split.labels[i];
    const double r = offsets[i] - offset[l];
    if (std::abs(r) <= params.inlier_threshold) {
      ++inliers[l];
      sq[l] += r * r;
    }
  }
  if (inliers[0] < kMinLayerSupport || inliers[1] < kMinLayerSupport) {
    throw Error("plane-detect", ErrorCode::NoConsensus, "a layer has too few inliers");
  }

  const int near = mean_z[0] <= mean_z[1] ? 0 : 1;
  const int far = 1 - near;
  ParallelPlanePair pair;
  pair.normal = normal;
  pair.frame = cloud.frame;
  pair.offset_near = offset[near];
  pair.offset_far = offset[far];
  pair.inliers_near = inliers[near];
  pair.inliers_far = inliers[far];
  pair.rms_near = std::sqrt(sq[near] / static_cast<double>(inliers[near]));
  pair.rms_far = std::sqrt(sq[far] / static_cast<double>(inliers[far]));
  return pair;
}

// ---------------------------------------------------------------------------
// Plane parameter file: normal / offset_near / offset_far / frame, 9 digits.

inline std::string encode_planes(const ParallelPlanePair& pair) {
  std::string out = "normal " + format_real(pair.normal.x(), 9) + " " +
                    format_real(pair.normal.y(), 9) + " " + format_real(pair.normal.z(), 9) + "\n";
  out += "offset_near " + format_real(pair.offset_near, 9) + "\n";
  out += "offset_far " + format_real(pair.offset_far, 9) + "\n";
  out += "frame " + pair.frame + "\n";
  return out;
}

inline ParallelPlanePair decode_planes(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  ParallelPlanePair pair;
  bool seen[4] = {false, false, false, false};
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string extra;
    if (key == "normal") {
      double x = 0;
      double y = 0;
      double z = 0;
      if (!(ls >> x >> y >> z) || (ls >> extra)) throw ParseError("plane-detect", line_no, "expected 'normal nx ny nz'");
      const Vec3 n(x, y, z);
      if (!(n.norm() > 0.0)) throw ParseError("plane-detect", line_no, "zero normal");
      pair.normal = Plane(n, 0.0).normal();
      seen[0] = true;
    } else if (key == "offset_near" || key == "offset_far") {
      double v = 0;
      if (!(ls >> v) || (ls >> extra)) throw ParseError("plane-detect", line_no, "expected '" + key + " v'");
      (key == "offset_near" ? pair.offset_near : pair.offset_far) = v;
      seen[key == "offset_near" ? 1 : 2] = true;
    } else if (key == "frame") {
      if (!(ls >> pair.frame) || (ls >> extra)) throw ParseError("plane-detect", line_no, "expected 'frame name'");
      seen[3] = true;
    } else {
      throw ParseError("plane-detect", line_no, "unknown key '" + key + "'");
    }
  }
  for (bool s : seen) {
    if (!s) throw ParseError("plane-detect", line_no, "incomplete plane parameters");
  }
  return pair;
}

inline ParallelPlanePair read_planes(const std::string& path) {
  return decode_planes(detail::read_file_bytes(path));
}
inline void write_planes(const std::string& path, const ParallelPlanePair& pair) {
  detail::write_file_bytes(path, encode_planes(pair));
}

}  // namespace opentie
