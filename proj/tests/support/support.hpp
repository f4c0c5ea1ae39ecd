#pragma once

// Shared test helpers: seeded generators, a scratch directory, and oracles
// written independently of the library code they check.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <unistd.h>

#include "opentie.hpp"

namespace opentie::testing {

// ---------------------------------------------------------------------------
// Generators

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  Vec3 vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

  Vec3 unit_vector() {
    for (;;) {
      const Vec3 v(normal(), normal(), normal());
      const double n = v.norm();
      if (n > 1e-6) return v / n;
    }
  }

  /// Uniform rotation from a normalized Gaussian quaternion.
  Mat3 rotation() {
    for (;;) {
      Eigen::Quaterniond q(normal(), normal(), normal(), normal());
      if (q.norm() > 1e-6) return q.normalized().toRotationMatrix();
    }
  }

  RigidTransform transform(const std::string& from, const std::string& to, double span = 2.0) {
    return {rotation(), vec(-span, span), from, to};
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Scratch directory, removed on destruction

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("opentie-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Oracles

/// Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix. Returns
/// eigenvalues ascending with matching unit eigenvectors (columns).
inline std::pair<std::array<double, 3>, std::array<Vec3, 3>> jacobi_eigen(const Mat3& input) {
  double a[3][3];
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a[i][j] = input(i, j);
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-300) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {  // A <- A J
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {  // A <- J^T A
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a[x][x] < a[y][y]; });
  std::array<double, 3> values{};
  std::array<Vec3, 3> vectors;
  for (int i = 0; i < 3; ++i) {
    const int c = order[static_cast<std::size_t>(i)];
    values[static_cast<std::size_t>(i)] = a[c][c];
    vectors[static_cast<std::size_t>(i)] = Vec3(v[0][c], v[1][c], v[2][c]).normalized();
  }
  return {values, vectors};
}

/// Total-least-squares plane through `pts` via the Jacobi oracle.
inline Plane oracle_fit_plane(const std::vector<Point3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Mat3 s = Mat3::Zero();
  for (const auto& p : pts) s += (p - c) * (p - c).transpose();
  const auto [values, vectors] = jacobi_eigen(s);
  return Plane(vectors[0], vectors[0].dot(c));
}

inline double brute_squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Mean distance to the k nearest other points, by exhaustive search.
inline std::vector<double> brute_mean_knn(const std::vector<Point3>& pts, std::size_t k) {
  std::vector<double> out(pts.size());
  std::vector<double> d2;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d2.clear();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j != i) d2.push_back(brute_squared_distance(pts[i], pts[j]));
    }
    std::partial_sort(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k), d2.end());
    double sum = 0.0;
    for (std::size_t m = 0; m < k; ++m) sum += std::sqrt(d2[m]);
    out[i] = sum / static_cast<double>(k);
  }
  return out;
}

/// Indices kept by statistical outlier removal (mean + mult * sample stddev).
inline std::vector<std::size_t> brute_sor_keep(const std::vector<Point3>& pts, std::size_t k,
                                               double mult) {
  const auto d = brute_mean_knn(pts, k);
  double mu = 0.0;
  for (double x : d) mu += x;
  mu /= static_cast<double>(d.size());
  double ss = 0.0;
  for (double x : d) ss += (x - mu) * (x - mu);
  const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] <= mu + mult * sd) keep.push_back(i);
  }
  return keep;
}

/// Voxel centroids keyed by floor(p / size), in lexicographic key order,
/// accumulating in input order.
inline std::vector<Point3> brute_voxel(const std::vector<Point3>& pts, double size) {
  std::map<std::tuple<long long, long long, long long>, std::pair<std::array<double, 3>, std::size_t>> cells;
  for (const auto& p : pts) {
    const auto key = std::make_tuple(static_cast<long long>(std::floor(p.x() / size)),
                                     static_cast<long long>(std::floor(p.y() / size)),
                                     static_cast<long long>(std::floor(p.z() / size)));
    auto& cell = cells[key];
    cell.first[0] += p.x();
    cell.first[1] += p.y();
    cell.first[2] += p.z();
    ++cell.second;
  }
  std::vector<Point3> out;
  for (const auto& [key, cell] : cells) {
    const auto n = static_cast<double>(cell.second);
    out.emplace_back(cell.first[0] / n, cell.first[1] / n, cell.first[2] / n);
  }
  return out;
}

/// Optimal 2-partition of scalars: tries every split of the sorted values,
/// scoring each by the directly computed within-cluster sum of squares.
/// Returns labels (0 = low cluster) for the input order.
inline std::vector<int> brute_two_means(const std::vector<double>& values) {
  std::vector<double> s = values;
  std::sort(s.begin(), s.end());
  double best = std::numeric_limits<double>::infinity();
  double threshold = s.front();
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (s[k - 1] == s[k]) continue;  // equal values cannot be separated
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < k; ++i) ma += s[i];
    for (std::size_t i = k; i < s.size(); ++i) mb += s[i];
    ma /= static_cast<double>(k);
    mb /= static_cast<double>(s.size() - k);
    double sse = 0.0;
    for (std::size_t i = 0; i < k; ++i) sse += (s[i] - ma) * (s[i] - ma);
    for (std::size_t i = k; i < s.size(); ++i) sse += (s[i] - mb) * (s[i] - mb);
    if (sse < best) {
      best = sse;
      threshold = s[k - 1];
    }
  }
  std::vector<int> labels;
  for (double x : values) labels.push_back(x <= threshold ? 0 : 1);
  return labels;
}

/// Within-cluster sum of squares of a labelled partition.
inline double partition_sse(const std::vector<double>& values, const std::vector<int>& labels) {
  double sum[2] = {0, 0};
  double n[2] = {0, 0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[labels[i]] += values[i];
    n[labels[i]] += 1;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double m = sum[labels[i]] / n[labels[i]];
    sse += (values[i] - m) * (values[i] - m);
  }
  return sse;
}

/// Total path length of visiting points in the given order.
inline double path_length(const std::vector<Point3>& ordered) {
  double total = 0.0;
  for (std::size_t i = 1; i < ordered.size(); ++i) total += (ordered[i] - ordered[i - 1]).norm();
  return total;
}

/// Random cloud mixing dense clusters and scattered points, with duplicates.
inline std::vector<Point3> random_cloud(Gen& g, std::size_t n) {
  std::vector<Point3> pts;
  const int clusters = g.integer(1, 5);
  std::vector<Vec3> centres;
  for (int c = 0; c < clusters; ++c) centres.push_back(g.vec(-1.0, 1.0));
  while (pts.size() < n) {
    const double r = g.uniform(0.0, 1.0);
    if (r < 0.7) {
      pts.push_back(centres[g.index(centres.size())] + Vec3(g.normal(0.02), g.normal(0.02), g.normal(0.02)));
    } else if (r < 0.95 || pts.empty()) {
      pts.push_back(g.vec(-1.5, 1.5));
    } else {
      pts.push_back(pts[g.index(pts.size())]);  // exact duplicate
    }
  }
  return pts;
}

}  // namespace opentie::testing
