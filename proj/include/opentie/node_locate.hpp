#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"

namespace opentie {

/// One detection in YOLO label form: normalized centre and size.
struct DetectionBox {
  int class_id = 0;
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  std::optional<double> confidence;

  friend bool operator==(const DetectionBox&, const DetectionBox&) = default;
};

namespace detail {

inline bool parse_double_token(std::string_view tok, double& out) {
  if (tok.empty()) return false;
  std::string s(tok);
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

/// Parses "class_id cx cy w h [conf]" per line; blank lines are skipped.
inline std::vector<DetectionBox> parse_yolo_labels(std::string_view text) {
  std::vector<DetectionBox> boxes;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

    const auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 5 && fields.size() != 6) {
      throw ParseError("node-locate", line_no,
                       "expected 5 or 6 fields, got " + std::to_string(fields.size()));
    }
    DetectionBox box;
    {
      const auto f = fields[0];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), box.class_id);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError("node-locate", line_no, "class id '" + std::string(f) + "' is not an integer");
      }
      if (box.class_id < 0) throw ParseError("node-locate", line_no, "negative class id");
    }
    double vals[5] = {0, 0, 0, 0, 0};
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (!detail::parse_double_token(fields[i], vals[i - 1])) {
        throw ParseError("node-locate", line_no,
                         "field " + std::to_string(i + 1) + " '" + std::string(fields[i]) +
                             "' is not a number");
      }
    }
    box.cx = vals[0];
    box.cy = vals[1];
    box.w = vals[2];
    box.h = vals[3];
    if (box.cx < 0.0 || box.cx > 1.0 || box.cy < 0.0 || box.cy > 1.0) {
      throw ParseError("node-locate", line_no, "box centre outside [0,1]");
    }
    if (!(box.w > 0.0) || box.w > 1.0 || !(box.h > 0.0) || box.h > 1.0) {
      throw ParseError("node-locate", line_no, "box size outside (0,1]");
    }
    if (fields.size() == 6) {
      if (vals[4] < 0.0 || vals[4] > 1.0) {
        throw ParseError("node-locate", line_no, "confidence outside [0,1]");
      }
      box.confidence = vals[4];
    }
    boxes.push_back(box);
  }
  return boxes;
}

/// One "class cx cy w h [conf]" line per box, 6 decimals.
inline std::string write_yolo_labels(const std::vector<DetectionBox>& boxes) {
  std::string out;
  char buf[160];
  for (const auto& b : boxes) {
    std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", b.class_id, b.cx, b.cy, b.w, b.h);
    out += buf;
    if (b.confidence) {
      std::snprintf(buf, sizeof buf, " %.6f", *b.confidence);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

/// Node pixel = box centre, i.e. the mean of the four box corners.
inline Pixel box_to_node_pixel(const DetectionBox& box, int width, int height) {
  return {box.cx * width, box.cy * height};
}

/// Intersection of the viewing ray through (u, v) with `plane` (camera frame).
inline Point3 node_pixel_to_camera_point(const CameraModel& cam, double u, double v,
                                         const Plane& plane) {
  const Vec3 dir = backproject(cam, u, v, 1.0).normalized();
  const double denom = plane.normal().dot(dir);
  if (std::abs(denom) <= 1e-9) throw Error("node-locate", ErrorCode::RayParallel);
  const double t = plane.offset() / denom;
  if (!(t > 0.0)) throw Error("node-locate", ErrorCode::NegativeDepth);
  return t * dir;
}

struct NodeObservation {
  Pixel pixel;
  Point3 camera_point = Point3::Zero();
  DetectionBox source_box;
  std::size_t label_index = 0;
};

struct NodeDiagnostic {
  std::size_t label_index = 0;
  std::string message;
};

struct LocateResult {
  std::vector<NodeObservation> nodes;
  std::vector<NodeDiagnostic> diagnostics;
};

/// Localizes each box on `plane`, in label order. Boxes that cannot be
/// localized are reported as diagnostics rather than failing the run.
inline LocateResult locate_nodes(const std::vector<DetectionBox>& labels, const CameraModel& cam,
                                 const Plane& plane) {
  LocateResult out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Pixel px = box_to_node_pixel(labels[i], cam.width, cam.height);
    try {
      const Point3 p = node_pixel_to_camera_point(cam, px.u, px.v, plane);
      out.nodes.push_back({px, p, labels[i], i});
    } catch (const Error& e) {
      out.diagnostics.push_back({i, e.what()});
    }
  }
  return out;
}

inline std::vector<DetectionBox> read_yolo_labels(const std::string& path) {
  return parse_yolo_labels(detail::read_file_bytes(path));
}

}  // namespace opentie
