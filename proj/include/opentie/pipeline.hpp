#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "opentie/cloud_filter.hpp"
#include "opentie/config.hpp"
#include "opentie/frames.hpp"
#include "opentie/mask.hpp"
#include "opentie/metrics.hpp"
#include "opentie/node_locate.hpp"
#include "opentie/plane_detect.hpp"
#include "opentie/point_cloud.hpp"
#include "opentie/robot_link.hpp"
#include "opentie/scene_spec.hpp"
#include "opentie/scene_synth.hpp"
#include "opentie/stereo.hpp"

namespace opentie {

// ---------------------------------------------------------------------------
// Stages. Each takes decoded inputs and returns what its subcommand writes.

inline DisparityMap stage_disparity(const GrayImage& left, const GrayImage& right,
                                    const PipelineConfig& cfg) {
  return block_match_disparity(left, right, cfg.block);
}

/// Window filter, back-projection, outlier removal, voxel downsampling.
inline PointCloud stage_cloud(const DisparityMap& disp, const PipelineConfig& cfg) {
  const DisparityMap kept = window_disparity_filter(disp, cfg.window, cfg.delta);
  const PointCloud raw = disparity_to_cloud(cfg.rig, kept);
  const PointCloud inliers = statistical_outlier_removal(raw, cfg.sor_k, cfg.sor_sigma_mult);
  return voxel_downsample(inliers, cfg.voxel_size);
}

inline ParallelPlanePair stage_planes(const PointCloud& cloud, const PipelineConfig& cfg) {
  return detect_parallel_planes(cloud, cfg.ransac);
}

struct MaskStage {
  RigidTransform alignment;
  std::size_t selected_points = 0;
  BinaryMask mask;
  RgbImage filtered;
};

/// Near-plane points are re-tagged with the pixel they project to, so the
/// stage works on any camera-frame cloud, including one read from a file.
inline MaskStage stage_mask(const PointCloud& cloud, const ParallelPlanePair& planes,
                            const RgbImage& image, const PipelineConfig& cfg) {
  if (cloud.frame != planes.frame) {
    throw Error("mask-gen", ErrorCode::FrameMismatch, "cloud and planes are in different frames");
  }
  const auto& cam = cfg.rig.camera;
  if (image.width() != cam.width || image.height() != cam.height) {
    throw Error("mask-gen", ErrorCode::SizeMismatch, "image does not match the camera size");
  }
  MaskStage out;
  out.alignment = align_to_xoz(planes.near_plane(), cloud.frame);
  const PointCloud near = select_near_plane(cloud, planes.near_plane(), cfg.tau);
  const PointCloud tagged = with_projected_provenance(near, cam);
  out.selected_points = tagged.size();
  out.mask = rasterize_mask(tagged, cam.width, cam.height, cfg.dilation_radius);
  out.filtered = apply_mask(image, out.mask);
  return out;
}

inline Plane node_plane(const ParallelPlanePair& planes, const PipelineConfig& cfg) {
  return cfg.node_plane == NodePlane::Mid ? planes.mid_plane() : planes.near_plane();
}

struct NodesStage {
  LocateResult located;
  std::vector<Point3> base_points;  // before the tool bias, in label order
  std::vector<TiePoint> ties;       // biased and sequenced
};

inline NodesStage stage_nodes(const std::vector<DetectionBox>& labels,
                              const ParallelPlanePair& planes, const CalibrationSet& calib,
                              const PipelineConfig& cfg) {
  if (planes.frame != frames_id::camera) {
    throw Error("node-locate", ErrorCode::FrameMismatch, "planes must be in the camera frame");
  }
  NodesStage out;
  out.located = locate_nodes(labels, cfg.rig.camera, node_plane(planes, cfg));
  std::vector<Point3> targets;
  for (const auto& n : out.located.nodes) {
    const Point3 base = camera_to_base(calib, n.camera_point);
    out.base_points.push_back(base);
    targets.push_back(apply_tool_bias(calib, base));
  }
  out.ties = sequence_ties(targets, cfg.row_tolerance);
  return out;
}

/// Runs the controller state machine in-process, without a socket.
class InProcessChannel : public LineChannel {
 public:
  explicit InProcessChannel(const SimRobotConfig& cfg) : robot_(cfg) {}
  std::string request(const std::string& line) override {
    return std::string(detail::strip_eol(robot_.handle_line(line)));
  }
  const SimRobot& robot() const { return robot_; }

 private:
  SimRobot robot_;
};

// ---------------------------------------------------------------------------
// Synthetic bundle

struct SceneBundle {
  SyntheticCloud cloud;
  DisparityMap disparity;
  StereoPair images;
  std::vector<DetectionBox> labels;
  CalibrationSet calibration;
  std::vector<Point3> nodes_base;
};

inline SceneBundle synthesize_scene(const SceneSpec& spec) {
  validate_scene_spec(spec);
  SceneBundle b;
  b.cloud = generate_grid_cloud(spec.grid);
  b.disparity = render_disparity(spec.grid, spec.rig);
  b.images = synth_stereo_pair(spec.grid, spec.rig);
  b.labels = ground_truth_boxes(b.cloud.truth.nodes, spec.rig.camera, spec.box_size);
  b.cloud.truth.labels = b.labels;
  b.cloud.truth.disparity = b.disparity;
  b.calibration = default_calibration();
  for (const auto& n : b.cloud.truth.nodes) b.nodes_base.push_back(camera_to_base(b.calibration, n));
  return b;
}

namespace bundle_files {
inline constexpr const char* cloud = "cloud.ply";
inline constexpr const char* disparity = "disparity.txt";
inline constexpr const char* left = "left.pgm";
inline constexpr const char* right = "right.pgm";
inline constexpr const char* labels = "labels.txt";
inline constexpr const char* gt_nodes = "gt_nodes.txt";
inline constexpr const char* planes = "planes.txt";
inline constexpr const char* calibration = "calibration.txt";
inline constexpr const char* gt_nodes_base = "gt_nodes_base.txt";
inline constexpr const char* scene = "scene.cfg";
}  // namespace bundle_files

namespace detail {

inline std::filesystem::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cli", ErrorCode::FileError, "cannot create directory " + dir);
  return dir;
}

}  // namespace detail

inline void write_scene_bundle(const std::string& dir, const SceneSpec& spec, const SceneBundle& b) {
  const auto root = detail::ensure_dir(dir);
  write_ply((root / bundle_files::cloud).string(), b.cloud.cloud);
  write_disparity((root / bundle_files::disparity).string(), b.disparity);
  write_pgm((root / bundle_files::left).string(), b.images.left);
  write_pgm((root / bundle_files::right).string(), b.images.right);
  detail::write_file_bytes((root / bundle_files::labels).string(), write_yolo_labels(b.labels));
  detail::write_file_bytes((root / bundle_files::gt_nodes).string(), encode_points(b.cloud.truth.nodes));
  write_planes((root / bundle_files::planes).string(), b.cloud.truth.planes);
  detail::write_file_bytes((root / bundle_files::calibration).string(), encode_calibration(b.calibration));
  detail::write_file_bytes((root / bundle_files::gt_nodes_base).string(), encode_points(b.nodes_base));
  detail::write_file_bytes((root / bundle_files::scene).string(), encode_scene_spec(spec));
}

// ---------------------------------------------------------------------------
// Fused run

struct RunInputs {
  GrayImage left;
  GrayImage right;
  std::optional<DisparityMap> disparity;  // used when stereo matching is off
  std::vector<DetectionBox> labels;
  CalibrationSet calibration;
  std::optional<std::vector<Point3>> ground_truth_base;
};

struct RunOutputs {
  DisparityMap disparity;
  PointCloud cloud;
  ParallelPlanePair planes;
  MaskStage mask;
  NodesStage nodes;
  std::optional<SequenceReport> report;
  RunMetrics metrics;
};

/// Every stage consumes the serialized form of the previous stage's output,
/// so the fused run and the stage subcommands see identical inputs.
inline RunOutputs run_pipeline(const RunInputs& in, const PipelineConfig& cfg, LineChannel* robot) {
  cfg.validate();
  RunOutputs out;
  if (cfg.use_stereo_matching) {
    out.disparity = decode_disparity(encode_disparity(stage_disparity(in.left, in.right, cfg)));
  } else {
    if (!in.disparity) throw Error("cli", ErrorCode::InvalidArgument, "no disparity map given");
    out.disparity = *in.disparity;
  }
  out.cloud = decode_ply(encode_ply(stage_cloud(out.disparity, cfg)));
  out.planes = decode_planes(encode_planes(stage_planes(out.cloud, cfg)));
  out.mask = stage_mask(out.cloud, out.planes, gray_to_rgb(in.left), cfg);
  out.nodes = stage_nodes(in.labels, out.planes, in.calibration, cfg);
  const auto ties = decode_tie_points(encode_tie_points(out.nodes.ties));
  if (in.ground_truth_base) {
    out.metrics = evaluate_nodes(out.nodes.base_points, *in.ground_truth_base, cfg.matching_cutoff);
  }
  if (robot != nullptr) {
    out.report = execute_sequence(ties, *robot, cfg.error_policy);
    if (out.report->attempted > 0) {
      out.metrics.tce_percent = compute_tce(out.report->successes, out.report->attempted);
    }
  }
  return out;
}

namespace run_files {
inline constexpr const char* disparity = "disparity.txt";
inline constexpr const char* cloud = "cloud.ply";
inline constexpr const char* planes = "planes.txt";
inline constexpr const char* mask = "mask.pgm";
inline constexpr const char* filtered = "filtered.ppm";
inline constexpr const char* nodes_camera = "nodes_camera.txt";
inline constexpr const char* ties = "ties.txt";
inline constexpr const char* report = "report.txt";
inline constexpr const char* metrics = "metrics.txt";
inline constexpr const char* config = "config.cfg";
}  // namespace run_files

inline void write_run_outputs(const std::string& dir, const RunOutputs& out, const PipelineConfig& cfg) {
  const auto root = detail::ensure_dir(dir);
  write_disparity((root / run_files::disparity).string(), out.disparity);
  write_ply((root / run_files::cloud).string(), out.cloud);
  write_planes((root / run_files::planes).string(), out.planes);
  write_pgm((root / run_files::mask).string(), mask_to_gray(out.mask.mask));
  write_ppm((root / run_files::filtered).string(), out.mask.filtered);
  std::vector<Point3> cam_points;
  for (const auto& n : out.nodes.located.nodes) cam_points.push_back(n.camera_point);
  detail::write_file_bytes((root / run_files::nodes_camera).string(), encode_points(cam_points));
  detail::write_file_bytes((root / run_files::ties).string(), encode_tie_points(out.nodes.ties));
  if (out.report) {
    detail::write_file_bytes((root / run_files::report).string(), encode_sequence_report(*out.report));
  }
  detail::write_file_bytes((root / run_files::metrics).string(), encode_metrics(out.metrics));
  detail::write_file_bytes((root / run_files::config).string(), encode_config(cfg));
}

/// Loads the inputs of a fused run from a synthetic bundle directory.
inline RunInputs load_bundle_inputs(const std::string& dir) {
  const std::filesystem::path root(dir);
  RunInputs in;
  in.left = read_pgm((root / bundle_files::left).string());
  in.right = read_pgm((root / bundle_files::right).string());
  in.disparity = read_disparity((root / bundle_files::disparity).string());
  in.labels = read_yolo_labels((root / bundle_files::labels).string());
  in.calibration = read_calibration((root / bundle_files::calibration).string());
  in.ground_truth_base = decode_points(detail::read_file_bytes((root / bundle_files::gt_nodes_base).string()));
  return in;
}

}  // namespace opentie
