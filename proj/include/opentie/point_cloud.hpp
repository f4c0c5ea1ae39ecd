#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"

namespace opentie {

/// Integer source pixel of a point reconstructed from an image.
struct PixelIndex {
  int u = 0;
  int v = 0;
  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Points in one named frame, optionally tagged with their source pixels.
struct PointCloud {
  std::vector<Point3> points;
  std::string frame = frames_id::camera;
  std::optional<std::vector<PixelIndex>> provenance;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_provenance() const { return provenance.has_value(); }

  bool is_consistent() const {
    return !provenance || provenance->size() == points.size();
  }

  /// Copies the points at `indices` (in the given order), keeping provenance in lockstep.
  PointCloud subset(const std::vector<std::size_t>& indices) const {
    PointCloud out;
    out.frame = frame;
    out.points.reserve(indices.size());
    for (auto i : indices) out.points.push_back(points[i]);
    if (provenance) {
      std::vector<PixelIndex> prov;
      prov.reserve(indices.size());
      for (auto i : indices) prov.push_back((*provenance)[i]);
      out.provenance = std::move(prov);
    }
    return out;
  }
};

inline PointCloud transform_cloud(const RigidTransform& t, const PointCloud& cloud) {
  if (cloud.frame != t.from_frame) {
    throw Error("geometry", ErrorCode::FrameMismatch,
                "cloud in " + cloud.frame + ", transform from " + t.from_frame);
  }
  PointCloud out = cloud;
  out.frame = t.to_frame;
  for (auto& p : out.points) p = transform_point(t, p);
  return out;
}

// ---------------------------------------------------------------------------
// ASCII PLY, x y z only, 6 significant digits.

inline std::string encode_ply(const PointCloud& cloud) {
  std::string out =
      "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
      "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : cloud.points) {
    out += format_real(p.x(), 6);
    out += ' ';
    out += format_real(p.y(), 6);
    out += ' ';
    out += format_real(p.z(), 6);
    out += '\n';
  }
  return out;
}

inline PointCloud decode_ply(const std::string& text, const std::string& frame = frames_id::camera) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError("cloud-filter", line_no, what);
  };

  if (!next() || line != "ply") {
    line_no = 1;
    throw fail("expected 'ply'");
  }
  std::optional<std::size_t> vertex_count;
  std::vector<std::string> props;
  bool ended = false;
  while (next()) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      std::string ver;
      ls >> fmt >> ver;
      if (fmt != "ascii") throw fail("only ascii PLY is supported");
    } else if (kw == "comment" || kw == "obj_info") {
      continue;
    } else if (kw == "element") {
      std::string name;
      long long n = -1;
      if (!(ls >> name >> n) || name != "vertex" || n < 0) throw fail("expected 'element vertex N'");
      vertex_count = static_cast<std::size_t>(n);
    } else if (kw == "property") {
      std::string type;
      std::string name;
      if (!(ls >> type >> name) || (type != "float" && type != "double")) {
        throw fail("unsupported property");
      }
      props.push_back(name);
    } else if (kw == "end_header") {
      ended = true;
      break;
    } else {
      throw fail("unexpected header keyword '" + kw + "'");
    }
  }
  if (!ended) throw fail("missing end_header");
  if (!vertex_count) throw fail("missing vertex element");
  if (props != std::vector<std::string>{"x", "y", "z"}) throw fail("expected properties x y z");

  PointCloud cloud;
  cloud.frame = frame;
  cloud.points.reserve(*vertex_count);
  while (cloud.points.size() < *vertex_count) {
    if (!next()) throw fail("expected " + std::to_string(*vertex_count) + " vertices");
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ls(line);
    double x = 0;
    double y = 0;
    double z = 0;
    std::string extra;
    if (!(ls >> x >> y >> z) || (ls >> extra)) throw fail("expected 'x y z'");
    Point3 p(x, y, z);
    if (!is_finite(p)) throw fail("non-finite coordinate");
    cloud.points.push_back(p);
  }
  return cloud;
}

inline PointCloud read_ply(const std::string& path, const std::string& frame = frames_id::camera) {
  return decode_ply(detail::read_file_bytes(path), frame);
}
inline void write_ply(const std::string& path, const PointCloud& cloud) {
  detail::write_file_bytes(path, encode_ply(cloud));
}

}  // namespace opentie
