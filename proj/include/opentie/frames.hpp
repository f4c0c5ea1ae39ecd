#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"

namespace opentie {

/// Eye-to-hand extrinsics plus the tool mounting correction.
struct CalibrationSet {
  RigidTransform t_base_from_camera{Mat3::Identity(), Vec3::Zero(), frames_id::camera,
                                    frames_id::base};
  RigidTransform tool_bias{Mat3::Identity(), Vec3::Zero(), frames_id::base, frames_id::base};
};

inline constexpr double kCalibrationOrthoTolerance = 1e-6;

/// Nearest rotation in the Frobenius sense (polar factor).
inline Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace detail {

inline RigidTransform checked_rigid(const Mat3& r, const Vec3& t, const std::string& from,
                                    const std::string& to, std::size_t line) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= kCalibrationOrthoTolerance)) {
    throw Error("frames", ErrorCode::BadCalibration,
                "rotation ending on line " + std::to_string(line) + " is not orthonormal");
  }
  if (!(r.determinant() > 0.0)) {
    throw Error("frames", ErrorCode::BadCalibration,
                "rotation ending on line " + std::to_string(line) + " has negative determinant");
  }
  if (!is_finite(t)) throw Error("frames", ErrorCode::BadCalibration, "non-finite translation");
  return {nearest_rotation(r), t, from, to};
}

inline std::string format_rigid_rows(const RigidTransform& t) {
  std::string out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out += format_real(t.rotation(i, j), 9) + " ";
    out += format_real(t.translation[i], 9) + "\n";
  }
  return out;
}

}  // namespace detail

/// Reads "T_base_cam" + three [R|t] rows, then "bias" + three rows.
/// Rotations within 1e-6 of orthonormal are projected onto SO(3).
inline CalibrationSet load_calibration(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  auto bad = [&](const std::string& what) {
    return Error("frames", ErrorCode::BadCalibration,
                 "line " + std::to_string(line_no) + ": " + what);
  };
  auto read_block = [&](const std::string& tag, const std::string& from, const std::string& to) {
    if (!next()) throw bad("missing '" + tag + "'");
    {
      std::istringstream ls(line);
      std::string word;
      std::string extra;
      ls >> word;
      if (word != tag || (ls >> extra)) throw bad("expected '" + tag + "'");
    }
    Mat3 r;
    Vec3 t;
    for (int i = 0; i < 3; ++i) {
      if (!next()) throw bad("missing matrix row");
      std::istringstream ls(line);
      double vals[4];
      for (double& v : vals) {
        if (!(ls >> v)) throw bad("expected 4 reals");
      }
      std::string extra;
      if (ls >> extra) throw bad("expected 4 reals");
      r.row(i) << vals[0], vals[1], vals[2];
      t[i] = vals[3];
    }
    return detail::checked_rigid(r, t, from, to, line_no);
  };
  CalibrationSet calib;
  calib.t_base_from_camera = read_block("T_base_cam", frames_id::camera, frames_id::base);
  calib.tool_bias = read_block("bias", frames_id::base, frames_id::base);
  if (next()) throw bad("unexpected trailing content");
  return calib;
}

inline std::string encode_calibration(const CalibrationSet& calib) {
  return "T_base_cam\n" + detail::format_rigid_rows(calib.t_base_from_camera) + "bias\n" +
         detail::format_rigid_rows(calib.tool_bias);
}

inline CalibrationSet read_calibration(const std::string& path) {
  return load_calibration(detail::read_file_bytes(path));
}

inline Point3 camera_to_base(const CalibrationSet& calib, const Point3& p_camera) {
  return transform_point(calib.t_base_from_camera, p_camera);
}

inline Point3 apply_tool_bias(const CalibrationSet& calib, const Point3& target_base) {
  return transform_point(calib.tool_bias, target_base);
}

/// A base-frame tie target and its place in the execution order.
struct TiePoint {
  Point3 position = Point3::Zero();
  std::size_t sequence_index = 0;
  std::size_t source_index = 0;  // index into the input list
};

/// Serpentine ordering. Points are grouped into rows along whichever of x/y has
/// the larger spread (y on ties), splitting wherever consecutive sorted values
/// differ by more than `row_tolerance`. Rows go in ascending order; even rows
/// run ascending along the other axis, odd rows descending.
inline std::vector<TiePoint> sequence_ties(const std::vector<Point3>& points, double row_tolerance) {
  if (!(row_tolerance > 0.0)) {
    throw Error("frames", ErrorCode::InvalidArgument, "row_tolerance must be > 0");
  }
  std::vector<TiePoint> out;
  if (points.empty()) return out;

  double lo[2] = {points[0].x(), points[0].y()};
  double hi[2] = {lo[0], lo[1]};
  for (const auto& p : points) {
    for (int a = 0; a < 2; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  const int row_axis = (hi[0] - lo[0]) > (hi[1] - lo[1]) ? 0 : 1;
  const int col_axis = 1 - row_axis;

  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a][row_axis] < points[b][row_axis];
  });

  std::vector<std::vector<std::size_t>> rows;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || points[order[k]][row_axis] - points[order[k - 1]][row_axis] > row_tolerance) {
      rows.emplace_back();
    }
    rows.back().push_back(order[k]);
  }

  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& row = rows[r];
    const bool ascending = r % 2 == 0;
    std::stable_sort(row.begin(), row.end(), [&](std::size_t a, std::size_t b) {
      return ascending ? points[a][col_axis] < points[b][col_axis]
                       : points[a][col_axis] > points[b][col_axis];
    });
    for (auto idx : row) out.push_back({points[idx], out.size(), idx});
  }
  return out;
}

/// Tie-point file: one "index x y z" line per tie in sequence order, 9 digits.
inline std::string encode_tie_points(const std::vector<TiePoint>& ties) {
  std::string out;
  for (const auto& t : ties) {
    out += std::to_string(t.sequence_index) + " " + format_real(t.position.x(), 9) + " " +
           format_real(t.position.y(), 9) + " " + format_real(t.position.z(), 9) + "\n";
  }
  return out;
}

inline std::vector<TiePoint> decode_tie_points(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<TiePoint> ties;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    long long idx = 0;
    if (!(ls >> idx)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError("frames", line_no, "expected 'index x y z'");
    }
    double x = 0;
    double y = 0;
    double z = 0;
    std::string extra;
    if (idx < 0 || !(ls >> x >> y >> z) || (ls >> extra)) {
      throw ParseError("frames", line_no, "expected 'index x y z'");
    }
    ties.push_back({Point3(x, y, z), static_cast<std::size_t>(idx), ties.size()});
  }
  std::sort(ties.begin(), ties.end(), [](const TiePoint& a, const TiePoint& b) {
    return a.sequence_index < b.sequence_index;
  });
  for (std::size_t i = 0; i < ties.size(); ++i) {
    if (ties[i].sequence_index != i) {
      throw ParseError("frames", line_no, "sequence indices are not a permutation of 0..n-1");
    }
  }
  return ties;
}

/// Plain point list: one "x y z" per line (also accepts tie-point lines).
inline std::string encode_points(const std::vector<Point3>& pts) {
  std::string out;
  for (const auto& p : pts) {
    out += format_real(p.x(), 9) + " " + format_real(p.y(), 9) + " " + format_real(p.z(), 9) + "\n";
  }
  return out;
}

inline std::vector<Point3> decode_points(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Point3> pts;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v = 0;
    while (ls >> v) vals.push_back(v);
    if (!ls.eof()) throw ParseError("frames", line_no, "non-numeric field");
    if (vals.empty()) continue;
    if (vals.size() == 3) {
      pts.emplace_back(vals[0], vals[1], vals[2]);
    } else if (vals.size() == 4) {
      pts.emplace_back(vals[1], vals[2], vals[3]);
    } else {
      throw ParseError("frames", line_no, "expected 'x y z' or 'index x y z'");
    }
  }
  return pts;
}

}  // namespace opentie
