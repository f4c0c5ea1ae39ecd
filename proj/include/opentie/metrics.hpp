#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"
#include "opentie/node_locate.hpp"

namespace opentie {

/// Task completion efficiency in percent.
inline double compute_tce(std::size_t successes, std::size_t attempts) {
  if (attempts == 0) throw Error("metrics", ErrorCode::NoAttempts);
  if (successes > attempts) {
    throw Error("metrics", ErrorCode::InvalidArgument, "more successes than attempts");
  }
  return static_cast<double>(successes) / static_cast<double>(attempts) * 100.0;
}

struct NodeMatch {
  std::size_t predicted = 0;
  std::size_t actual = 0;
  double distance = 0.0;
};

struct NodeMatching {
  std::vector<NodeMatch> pairs;
  std::vector<std::size_t> unmatched_predicted;
  std::vector<std::size_t> unmatched_actual;
};

/// Greedy global-closest one-to-one matching within `cutoff` meters; ties go
/// to the lowest (predicted, actual) index pair.
inline NodeMatching match_nodes(const std::vector<Point3>& predicted,
                                const std::vector<Point3>& actual, double cutoff) {
  if (!(cutoff > 0.0)) throw Error("metrics", ErrorCode::InvalidArgument, "cutoff must be > 0");
  std::vector<NodeMatch> candidates;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t j = 0; j < actual.size(); ++j) {
      const double d = (predicted[i] - actual[j]).norm();
      if (d <= cutoff) candidates.push_back({i, j, d});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const NodeMatch& a, const NodeMatch& b) {
    return std::tie(a.distance, a.predicted, a.actual) < std::tie(b.distance, b.predicted, b.actual);
  });
  std::vector<bool> used_p(predicted.size(), false);
  std::vector<bool> used_a(actual.size(), false);
  NodeMatching out;
  for (const auto& c : candidates) {
    if (used_p[c.predicted] || used_a[c.actual]) continue;
    used_p[c.predicted] = true;
    used_a[c.actual] = true;
    out.pairs.push_back(c);
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const NodeMatch& a, const NodeMatch& b) { return a.predicted < b.predicted; });
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!used_p[i]) out.unmatched_predicted.push_back(i);
  }
  for (std::size_t j = 0; j < actual.size(); ++j) {
    if (!used_a[j]) out.unmatched_actual.push_back(j);
  }
  return out;
}

/// Spatial accuracy index: mean matched distance in millimeters.
inline double compute_sai(const NodeMatching& matching, const std::vector<Point3>& predicted,
                          const std::vector<Point3>& actual) {
  if (matching.pairs.empty()) throw Error("metrics", ErrorCode::NoMatches);
  double sum = 0.0;
  for (const auto& m : matching.pairs) sum += (predicted[m.predicted] - actual[m.actual]).norm();
  return sum / static_cast<double>(matching.pairs.size()) * 1000.0;
}

inline double box_iou(const DetectionBox& a, const DetectionBox& b) {
  const double ax0 = a.cx - a.w / 2;
  const double ax1 = a.cx + a.w / 2;
  const double ay0 = a.cy - a.h / 2;
  const double ay1 = a.cy + a.h / 2;
  const double bx0 = b.cx - b.w / 2;
  const double bx1 = b.cx + b.w / 2;
  const double by0 = b.cy - b.h / 2;
  const double by1 = b.cy + b.h / 2;
  const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = iw * ih;
  // areas from the same corners as the overlap, so identical boxes give exactly 1
  const double uni = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Recall at an IoU threshold: share of ground-truth boxes claimed by a
/// prediction under greedy one-to-one matching by descending IoU.
inline double detection_accuracy(const std::vector<DetectionBox>& predicted,
                                 const std::vector<DetectionBox>& ground_truth,
                                 double iou_threshold) {
  if (!(iou_threshold > 0.0) || !(iou_threshold < 1.0)) {
    throw Error("metrics", ErrorCode::InvalidArgument, "iou_threshold must be in (0,1)");
  }
  if (ground_truth.empty()) return 0.0;
  struct Cand {
    double iou;
    std::size_t p;
    std::size_t g;
  };
  std::vector<Cand> cands;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const double iou = box_iou(predicted[p], ground_truth[g]);
      if (iou >= iou_threshold) cands.push_back({iou, p, g});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.p, a.g) < std::tie(b.p, b.g);
  });
  std::vector<bool> used_p(predicted.size(), false);
  std::vector<bool> used_g(ground_truth.size(), false);
  std::size_t hits = 0;
  for (const auto& c : cands) {
    if (used_p[c.p] || used_g[c.g]) continue;
    used_p[c.p] = used_g[c.g] = true;
    ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ground_truth.size());
}

struct RunMetrics {
  std::optional<double> tce_percent;
  std::optional<double> sai_mm;
  std::size_t matched = 0;
  std::size_t unmatched_predictions = 0;
  std::size_t unmatched_ground_truth = 0;
};

/// Node-position metrics; TCE is filled in separately when a tie run exists.
inline RunMetrics evaluate_nodes(const std::vector<Point3>& predicted,
                                 const std::vector<Point3>& actual, double cutoff) {
  const auto m = match_nodes(predicted, actual, cutoff);
  RunMetrics out;
  out.matched = m.pairs.size();
  out.unmatched_predictions = m.unmatched_predicted.size();
  out.unmatched_ground_truth = m.unmatched_actual.size();
  if (!m.pairs.empty()) out.sai_mm = compute_sai(m, predicted, actual);
  return out;
}

/// Six significant digits, always with a decimal point ("100.0", "3.25").
inline std::string format_metric(double v) {
  std::string s = format_real(v, 6);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

/// key=value report; absent metrics are omitted.
inline std::string encode_metrics(const RunMetrics& m) {
  std::string out;
  if (m.tce_percent) out += "tce_percent=" + format_metric(*m.tce_percent) + "\n";
  if (m.sai_mm) out += "sai_mm=" + format_metric(*m.sai_mm) + "\n";
  out += "matched=" + std::to_string(m.matched) + "\n";
  out += "unmatched_predictions=" + std::to_string(m.unmatched_predictions) + "\n";
  out += "unmatched_ground_truth=" + std::to_string(m.unmatched_ground_truth) + "\n";
  return out;
}

}  // namespace opentie
