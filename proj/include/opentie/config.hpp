#pragma once

#include <functional>
#include <string>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/key_value.hpp"
#include "opentie/plane_detect.hpp"
#include "opentie/robot_link.hpp"
#include "opentie/stereo.hpp"

namespace opentie {

/// Which detected plane the node rays are intersected with.
enum class NodePlane { Mid, Near };

/// Every tunable of the pipeline, with module defaults.
struct PipelineConfig {
  StereoRig rig;
  BlockMatchParams block;
  bool use_stereo_matching = true;
  int window = 31;
  double delta = 3.0;
  std::size_t sor_k = 16;
  double sor_sigma_mult = 1.0;
  double voxel_size = 0.005;
  RansacParams ransac;
  double tau = 0.015;
  int dilation_radius = 2;
  NodePlane node_plane = NodePlane::Mid;
  double row_tolerance = 0.05;
  double matching_cutoff = 0.05;
  double iou_threshold = 0.5;
  ErrorPolicy error_policy = ErrorPolicy::SkipOnError;
  std::string host = "127.0.0.1";
  int port = 5005;
  SimRobotConfig sim;
  std::string sim_log;  // empty = no log file

  void validate() const {
    auto bad = [](const std::string& what) {
      return Error("config", ErrorCode::InvalidArgument, what);
    };
    if (!rig.camera.is_valid()) throw bad("camera intrinsics must be positive");
    if (!(rig.baseline > 0.0)) throw bad("baseline must be > 0");
    if (block.block_radius < 1) throw bad("block_radius must be >= 1");
    if (block.max_disparity < 1) throw bad("max_disparity must be >= 1");
    if (!(block.uniqueness_ratio > 0.0) || block.uniqueness_ratio > 1.0) {
      throw bad("uniqueness_ratio must be in (0,1]");
    }
    if (window < 3 || window % 2 == 0) throw bad("window must be odd and >= 3");
    if (!(delta > 0.0)) throw bad("delta must be > 0");
    if (sor_k < 1) throw bad("sor_k must be >= 1");
    if (!(sor_sigma_mult >= 0.0)) throw bad("sor_sigma_mult must be >= 0");
    if (!(voxel_size > 0.0)) throw bad("voxel_size must be > 0");
    try {
      detail::check_ransac_params(ransac);
    } catch (const Error& e) {
      throw bad(e.detail());
    }
    if (!(tau > 0.0)) throw bad("tau must be > 0");
    if (dilation_radius < 0) throw bad("dilation_radius must be >= 0");
    if (!(row_tolerance > 0.0)) throw bad("row_tolerance must be > 0");
    if (!(matching_cutoff > 0.0)) throw bad("matching_cutoff must be > 0");
    if (!(iou_threshold > 0.0) || !(iou_threshold < 1.0)) throw bad("iou_threshold must be in (0,1)");
    if (port < 0 || port > 65535) throw bad("port must be in [0,65535]");
    if (!(sim.workspace_radius > 0.0)) throw bad("sim_workspace_radius must be > 0");
    if (!(sim.position_tolerance > 0.0)) throw bad("sim_position_tolerance must be > 0");
    if (sim.tie_failure_rate < 0.0 || sim.tie_failure_rate > 1.0) {
      throw bad("sim_tie_failure_rate must be in [0,1]");
    }
  }
};

/// Named accessor pair for one config key.
template <class T>
struct ConfigField {
  std::string name;
  std::string help;
  std::function<void(T&, const std::string&)> set;
  std::function<std::string(const T&)> get;
};

inline const std::vector<ConfigField<PipelineConfig>>& pipeline_config_fields() {
  using C = PipelineConfig;
  using F = ConfigField<C>;
  static const std::vector<F> fields = [] {
    std::vector<F> f;
    auto real = [&f](const char* name, const char* help, auto member) {
      f.push_back({name, help,
                   [=](C& c, const std::string& v) { member(c) = kv::to_real(name, v); },
                   [=](const C& c) { return kv::real(member(c)); }});
    };
    auto integer = [&f](const char* name, const char* help, auto member) {
      f.push_back({name, help,
                   [=](C& c, const std::string& v) { member(c) = kv::to_int(name, v); },
                   [=](const C& c) { return std::to_string(member(c)); }});
    };
    real("fx", "focal length x (px)", [](auto& c) -> auto& { return c.rig.camera.fx; });
    real("fy", "focal length y (px)", [](auto& c) -> auto& { return c.rig.camera.fy; });
    real("cx", "principal point x (px)", [](auto& c) -> auto& { return c.rig.camera.cx; });
    real("cy", "principal point y (px)", [](auto& c) -> auto& { return c.rig.camera.cy; });
    integer("width", "image width (px)", [](auto& c) -> auto& { return c.rig.camera.width; });
    integer("height", "image height (px)", [](auto& c) -> auto& { return c.rig.camera.height; });
    real("baseline", "stereo baseline (m)", [](auto& c) -> auto& { return c.rig.baseline; });
    integer("block_radius", "block matching half size (px)",
            [](auto& c) -> auto& { return c.block.block_radius; });
    integer("max_disparity", "largest disparity searched (px)",
            [](auto& c) -> auto& { return c.block.max_disparity; });
    real("uniqueness_ratio", "reject when best SAD >= ratio * second best",
         [](auto& c) -> auto& { return c.block.uniqueness_ratio; });
    f.push_back({"use_stereo_matching", "match the stereo pair instead of using the given disparity",
                 [](C& c, const std::string& v) { c.use_stereo_matching = kv::to_bool("use_stereo_matching", v); },
                 [](const C& c) { return std::string(c.use_stereo_matching ? "true" : "false"); }});
    integer("window", "disparity filter window (px, odd)", [](auto& c) -> auto& { return c.window; });
    real("delta", "disparity filter tolerance below local max (px)",
         [](auto& c) -> auto& { return c.delta; });
    f.push_back({"sor_k", "neighbours for statistical outlier removal",
                 [](C& c, const std::string& v) {
                   const long long k = kv::to_integer("sor_k", v);
                   if (k < 1) throw kv::bad_value("sor_k", v, "a positive integer");
                   c.sor_k = static_cast<std::size_t>(k);
                 },
                 [](const C& c) { return std::to_string(c.sor_k); }});
    real("sor_sigma_mult", "outlier cut in standard deviations",
         [](auto& c) -> auto& { return c.sor_sigma_mult; });
    real("voxel_size", "voxel edge (m)", [](auto& c) -> auto& { return c.voxel_size; });
    integer("ransac_iterations", "RANSAC iterations", [](auto& c) -> auto& { return c.ransac.iterations; });
    real("ransac_threshold", "RANSAC inlier distance (m)",
         [](auto& c) -> auto& { return c.ransac.inlier_threshold; });
    real("min_inlier_fraction", "minimum RANSAC support fraction",
         [](auto& c) -> auto& { return c.ransac.min_inlier_fraction; });
    f.push_back({"ransac_seed", "RANSAC seed",
                 [](C& c, const std::string& v) { c.ransac.seed = kv::to_u64("ransac_seed", v); },
                 [](const C& c) { return std::to_string(c.ransac.seed); }});
    real("tau", "near-plane selection distance (m)", [](auto& c) -> auto& { return c.tau; });
    integer("dilation_radius", "mask dilation radius (px)",
            [](auto& c) -> auto& { return c.dilation_radius; });
    f.push_back({"node_plane", "plane for node localization: mid or near",
                 [](C& c, const std::string& v) {
                   if (v == "mid") {
                     c.node_plane = NodePlane::Mid;
                   } else if (v == "near") {
                     c.node_plane = NodePlane::Near;
                   } else {
                     throw kv::bad_value("node_plane", v, "mid or near");
                   }
                 },
                 [](const C& c) { return std::string(c.node_plane == NodePlane::Mid ? "mid" : "near"); }});
    real("row_tolerance", "gap that starts a new tie row (m)",
         [](auto& c) -> auto& { return c.row_tolerance; });
    real("matching_cutoff", "node matching cutoff (m)", [](auto& c) -> auto& { return c.matching_cutoff; });
    real("iou_threshold", "detection IoU threshold", [](auto& c) -> auto& { return c.iou_threshold; });
    f.push_back({"error_policy", "tie failure policy: skip or abort",
                 [](C& c, const std::string& v) {
                   if (v == "skip") {
                     c.error_policy = ErrorPolicy::SkipOnError;
                   } else if (v == "abort") {
                     c.error_policy = ErrorPolicy::AbortOnError;
                   } else {
                     throw kv::bad_value("error_policy", v, "skip or abort");
                   }
                 },
                 [](const C& c) {
                   return std::string(c.error_policy == ErrorPolicy::SkipOnError ? "skip" : "abort");
                 }});
    f.push_back({"host", "robot controller host", [](C& c, const std::string& v) { c.host = v; },
                 [](const C& c) { return c.host; }});
    integer("port", "robot controller port", [](auto& c) -> auto& { return c.port; });
    f.push_back({"sim_workspace_center", "simulator workspace centre x,y,z (m)",
                 [](C& c, const std::string& v) { c.sim.workspace_center = kv::to_vec3("sim_workspace_center", v); },
                 [](const C& c) { return kv::vec3(c.sim.workspace_center); }});
    real("sim_workspace_radius", "simulator reach (m)",
         [](auto& c) -> auto& { return c.sim.workspace_radius; });
    real("sim_position_tolerance", "simulator reach slack (m)",
         [](auto& c) -> auto& { return c.sim.position_tolerance; });
    real("sim_tie_failure_rate", "simulated tie failure probability",
         [](auto& c) -> auto& { return c.sim.tie_failure_rate; });
    f.push_back({"sim_seed", "simulator seed",
                 [](C& c, const std::string& v) { c.sim.seed = kv::to_u64("sim_seed", v); },
                 [](const C& c) { return std::to_string(c.sim.seed); }});
    f.push_back({"sim_log", "simulator log file", [](C& c, const std::string& v) { c.sim_log = v; },
                 [](const C& c) { return c.sim_log; }});
    return f;
  }();
  return fields;
}

/// Applies entries onto `target`; unknown keys and bad values report the line.
template <class T>
void apply_key_values(T& target, const std::vector<ConfigField<T>>& fields,
                      const std::vector<KeyValue>& entries, const std::string& module) {
  for (const auto& e : entries) {
    const auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const ConfigField<T>& f) { return f.name == e.key; });
    if (it == fields.end()) throw ParseError(module, e.line, "unknown key '" + e.key + "'");
    try {
      it->set(target, e.value);
    } catch (const Error& err) {
      throw ParseError(module, e.line, err.detail());
    }
  }
}

template <class T>
std::string encode_fields(const T& source, const std::vector<ConfigField<T>>& fields) {
  std::string out;
  // an empty value cannot be parsed back; leaving the key out keeps its default
  for (const auto& f : fields) {
    const std::string value = f.get(source);
    if (!value.empty()) out += f.name + " = " + value + "\n";
  }
  return out;
}

inline PipelineConfig load_config(const std::string& text) {
  PipelineConfig cfg;
  apply_key_values(cfg, pipeline_config_fields(), parse_key_values(text, "config"), "config");
  cfg.validate();
  return cfg;
}

inline PipelineConfig read_config(const std::string& path) {
  return load_config(detail::read_file_bytes(path));
}

inline std::string encode_config(const PipelineConfig& cfg) {
  return encode_fields(cfg, pipeline_config_fields());
}

}  // namespace opentie
