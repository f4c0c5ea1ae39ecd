#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "opentie/config.hpp"
#include "opentie/frames.hpp"
#include "opentie/key_value.hpp"
#include "opentie/scene_synth.hpp"

namespace opentie {

/// Camera z maps to base -z, camera y to base -y; the default grid lands near
/// the base origin plane, inside the default simulator workspace.
inline CalibrationSet default_calibration() {
  CalibrationSet c;
  c.t_base_from_camera.rotation = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  c.t_base_from_camera.translation = Vec3(0.5, 0.0, 1.2);
  return c;
}

/// Everything needed to synthesize one scene bundle.
struct SceneSpec {
  GridSpec grid;
  StereoRig rig;
  double box_size = 0.05;  // normalized label box edge
};

inline const std::vector<ConfigField<SceneSpec>>& scene_spec_fields() {
  using S = SceneSpec;
  using F = ConfigField<S>;
  static const std::vector<F> fields = [] {
    std::vector<F> f;
    auto real = [&f](const char* name, const char* help, auto member) {
      f.push_back({name, help,
                   [=](S& s, const std::string& v) { member(s) = kv::to_real(name, v); },
                   [=](const S& s) { return kv::real(member(s)); }});
    };
    auto integer = [&f](const char* name, const char* help, auto member) {
      f.push_back({name, help,
                   [=](S& s, const std::string& v) { member(s) = kv::to_int(name, v); },
                   [=](const S& s) { return std::to_string(member(s)); }});
    };
    integer("rows", "rods along grid z (crossings per column)", [](auto& s) -> auto& { return s.grid.rows; });
    integer("cols", "rods along grid x (crossings per row)", [](auto& s) -> auto& { return s.grid.cols; });
    real("spacing_x", "rod spacing along grid x (m)", [](auto& s) -> auto& { return s.grid.spacing_x; });
    real("spacing_z", "rod spacing along grid z (m)", [](auto& s) -> auto& { return s.grid.spacing_z; });
    real("rod_radius", "rod radius (m)", [](auto& s) -> auto& { return s.grid.rod_radius; });
    real("layer_gap", "centre-to-centre layer distance (m)", [](auto& s) -> auto& { return s.grid.layer_gap; });
    f.push_back({"pose_rotation", "grid-to-camera rotation, 9 row-major reals",
                 [](S& s, const std::string& v) {
                   const auto r = kv::to_reals("pose_rotation", v, 9);
                   for (int i = 0; i < 9; ++i) s.grid.pose.rotation(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
                 },
                 [](const S& s) {
                   std::string out;
                   for (int i = 0; i < 9; ++i) {
                     out += (i ? "," : "") + kv::real(s.grid.pose.rotation(i / 3, i % 3));
                   }
                   return out;
                 }});
    f.push_back({"pose_translation", "grid origin in the camera frame x,y,z (m)",
                 [](S& s, const std::string& v) { s.grid.pose.translation = kv::to_vec3("pose_translation", v); },
                 [](const S& s) { return kv::vec3(s.grid.pose.translation); }});
    real("noise_sigma", "surface noise along the normal (m)", [](auto& s) -> auto& { return s.grid.noise_sigma; });
    real("outlier_fraction", "share of uniform outliers in the cloud",
         [](auto& s) -> auto& { return s.grid.outlier_fraction; });
    f.push_back({"seed", "scene seed",
                 [](S& s, const std::string& v) { s.grid.seed = kv::to_u64("seed", v); },
                 [](const S& s) { return std::to_string(s.grid.seed); }});
    real("fx", "focal length x (px)", [](auto& s) -> auto& { return s.rig.camera.fx; });
    real("fy", "focal length y (px)", [](auto& s) -> auto& { return s.rig.camera.fy; });
    real("cx", "principal point x (px)", [](auto& s) -> auto& { return s.rig.camera.cx; });
    real("cy", "principal point y (px)", [](auto& s) -> auto& { return s.rig.camera.cy; });
    integer("width", "image width (px)", [](auto& s) -> auto& { return s.rig.camera.width; });
    integer("height", "image height (px)", [](auto& s) -> auto& { return s.rig.camera.height; });
    real("baseline", "stereo baseline (m)", [](auto& s) -> auto& { return s.rig.baseline; });
    real("box_size", "label box edge (normalized)", [](auto& s) -> auto& { return s.box_size; });
    return f;
  }();
  return fields;
}

inline void validate_scene_spec(const SceneSpec& spec) {
  spec.grid.validate();
  if (!spec.rig.is_valid()) throw Error("scene-synth", ErrorCode::InvalidArgument, "invalid stereo rig");
  if (!(spec.box_size > 0.0) || spec.box_size > 1.0) {
    throw Error("scene-synth", ErrorCode::InvalidArgument, "box_size must be in (0,1]");
  }
}

/// Keys absent from the file keep their defaults, except that layer_gap
/// follows rod_radius (2 x radius) unless given. Reals are written with 17
/// significant digits, so encode/load reproduces a spec exactly.
inline SceneSpec load_scene_spec(const std::string& text) {
  SceneSpec spec;
  const auto entries = parse_key_values(text, "scene-synth");
  apply_key_values(spec, scene_spec_fields(), entries, "scene-synth");
  const bool has_gap = std::any_of(entries.begin(), entries.end(),
                                   [](const KeyValue& e) { return e.key == "layer_gap"; });
  if (!has_gap) spec.grid.layer_gap = 2.0 * spec.grid.rod_radius;
  validate_scene_spec(spec);
  return spec;
}

inline SceneSpec read_scene_spec(const std::string& path) {
  return load_scene_spec(detail::read_file_bytes(path));
}

inline std::string encode_scene_spec(const SceneSpec& spec) {
  return encode_fields(spec, scene_spec_fields());
}

}  // namespace opentie
