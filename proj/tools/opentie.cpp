// Command-line front end: one subcommand per pipeline stage plus a fused run.
// Exit status: 0 success, 1 input error, 2 pipeline error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opentie.hpp"

namespace {

using namespace opentie;

/// Registers every field of `fields` as "--<name>" on `sub`; values given on
/// the command line are applied on top of the config file.
template <class T>
class FieldFlags {
 public:
  FieldFlags(CLI::App* sub, const std::vector<ConfigField<T>>& fields) : sub_(sub), fields_(fields) {
    for (const auto& f : fields_) sub_->add_option("--" + f.name, values_[f.name], f.help);
  }

  void apply(T& target) const {
    for (const auto& f : fields_) {
      if (sub_->count("--" + f.name) == 0) continue;
      try {
        f.set(target, values_.at(f.name));
      } catch (const Error& e) {
        throw Error("cli", ErrorCode::InvalidArgument, "--" + f.name + ": " + e.detail());
      }
    }
  }

 private:
  CLI::App* sub_;
  const std::vector<ConfigField<T>>& fields_;
  std::map<std::string, std::string> values_;
};

struct ConfigFlags {
  std::string path;
  std::unique_ptr<FieldFlags<PipelineConfig>> flags;

  void attach(CLI::App* sub) {
    sub->add_option("--config", path, "flat key=value config file");
    flags = std::make_unique<FieldFlags<PipelineConfig>>(sub, pipeline_config_fields());
  }

  PipelineConfig load() const {
    PipelineConfig cfg = path.empty() ? PipelineConfig{} : read_config(path);
    flags->apply(cfg);
    cfg.validate();
    return cfg;
  }
};

void parse_endpoint(const std::string& endpoint, PipelineConfig& cfg) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error("cli", ErrorCode::InvalidArgument, "robot endpoint must be host:port");
  }
  cfg.host = endpoint.substr(0, colon);
  cfg.port = kv::to_int("port", endpoint.substr(colon + 1));
  cfg.validate();
}

void write_text(const std::string& path, const std::string& text) { detail::write_file_bytes(path, text); }

void print_report_summary(const char* stage, const SequenceReport& r) {
  std::printf("%s: attempted %zu, succeeded %zu, failed %zu%s\n", stage, r.attempted, r.successes,
              r.failures, r.aborted ? ", aborted" : "");
}

void print_metrics(const char* stage, const RunMetrics& m) {
  if (m.tce_percent) std::printf("%s: tce_percent=%s\n", stage, format_metric(*m.tce_percent).c_str());
  if (m.sai_mm) std::printf("%s: sai_mm=%s\n", stage, format_metric(*m.sai_mm).c_str());
  std::printf("%s: matched %zu, unmatched predictions %zu, unmatched ground truth %zu\n", stage,
              m.matched, m.unmatched_predictions, m.unmatched_ground_truth);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo rebar-grid perception and tie sequencing toolkit"};
  app.require_subcommand(1);

  // disparity
  auto* disparity = app.add_subcommand("disparity", "block-match a rectified stereo pair");
  ConfigFlags disparity_cfg;
  disparity_cfg.attach(disparity);
  std::string left_path, right_path, disparity_out;
  disparity->add_option("--left", left_path, "left image (PGM)")->required();
  disparity->add_option("--right", right_path, "right image (PGM)")->required();
  disparity->add_option("--out", disparity_out, "disparity file")->required();

  // cloud
  auto* cloud = app.add_subcommand("cloud", "filtered point cloud from a disparity map");
  ConfigFlags cloud_cfg;
  cloud_cfg.attach(cloud);
  std::string cloud_disparity, cloud_out;
  cloud->add_option("--disparity", cloud_disparity, "disparity file")->required();
  cloud->add_option("--out", cloud_out, "PLY file")->required();

  // planes
  auto* planes = app.add_subcommand("planes", "detect the two parallel layer planes");
  ConfigFlags planes_cfg;
  planes_cfg.attach(planes);
  std::string planes_cloud, planes_out;
  planes->add_option("--cloud", planes_cloud, "PLY file (camera frame)")->required();
  planes->add_option("--out", planes_out, "plane parameter file")->required();

  // mask
  auto* mask = app.add_subcommand("mask", "plane mask and background-filtered image");
  ConfigFlags mask_cfg;
  mask_cfg.attach(mask);
  std::string mask_cloud, mask_planes, mask_image, mask_out, mask_image_out;
  mask->add_option("--cloud", mask_cloud, "PLY file (camera frame)")->required();
  mask->add_option("--planes", mask_planes, "plane parameter file")->required();
  mask->add_option("--image", mask_image, "left image (PGM or PPM)")->required();
  mask->add_option("--mask-out", mask_out, "mask (PGM)")->required();
  mask->add_option("--image-out", mask_image_out, "filtered image (PPM)")->required();

  // nodes
  auto* nodes = app.add_subcommand("nodes", "YOLO labels to sequenced base-frame tie points");
  ConfigFlags nodes_cfg;
  nodes_cfg.attach(nodes);
  std::string nodes_labels, nodes_planes, nodes_calib, nodes_out;
  nodes->add_option("--labels", nodes_labels, "YOLO label file")->required();
  nodes->add_option("--planes", nodes_planes, "plane parameter file")->required();
  nodes->add_option("--calibration", nodes_calib, "calibration file")->required();
  nodes->add_option("--out", nodes_out, "tie-point file")->required();

  // tie
  auto* tie = app.add_subcommand("tie", "send a tie sequence to a robot controller");
  ConfigFlags tie_cfg;
  tie_cfg.attach(tie);
  std::string tie_points, tie_robot, tie_report, tie_metrics;
  tie->add_option("--ties", tie_points, "tie-point file")->required();
  tie->add_option("--robot", tie_robot, "controller host:port (default: host and port keys)");
  tie->add_option("--report", tie_report, "sequence report file");
  tie->add_option("--metrics", tie_metrics, "metrics file");

  // sim-robot
  auto* sim = app.add_subcommand("sim-robot", "run the simulated robot controller");
  ConfigFlags sim_cfg;
  sim_cfg.attach(sim);
  sim->add_flag("--loopback", "listen on 127.0.0.1 only");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic scene bundle");
  std::string synth_spec, synth_out;
  synth->add_option("--spec", synth_spec, "scene spec file (key=value)");
  synth->add_option("--out", synth_out, "bundle directory")->required();
  FieldFlags<SceneSpec> synth_flags(synth, scene_spec_fields());

  // eval
  auto* eval = app.add_subcommand("eval", "score predicted nodes against ground truth");
  ConfigFlags eval_cfg;
  eval_cfg.attach(eval);
  std::string eval_pred, eval_gt, eval_report, eval_out, eval_pred_labels, eval_gt_labels;
  eval->add_option("--predicted", eval_pred, "predicted points (x y z or tie-point lines)")->required();
  eval->add_option("--ground-truth", eval_gt, "ground-truth points")->required();
  eval->add_option("--report", eval_report, "sequence report, adds TCE");
  eval->add_option("--pred-labels", eval_pred_labels, "predicted YOLO labels");
  eval->add_option("--gt-labels", eval_gt_labels, "ground-truth YOLO labels");
  eval->add_option("--out", eval_out, "metrics file");

  // run
  auto* run = app.add_subcommand("run", "fused pipeline on a synthetic bundle");
  ConfigFlags run_cfg;
  run_cfg.attach(run);
  std::string run_bundle, run_out, run_labels, run_robot;
  bool run_no_robot = false;
  run->add_option("--bundle", run_bundle, "bundle directory written by synth")->required();
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--labels", run_labels, "YOLO labels (default: the bundle's ground truth)");
  run->add_option("--robot", run_robot, "controller host:port (default: in-process simulator)");
  run->add_flag("--no-robot", run_no_robot, "skip tie execution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*disparity) {
      const auto cfg = disparity_cfg.load();
      const auto d = stage_disparity(read_pgm(left_path), read_pgm(right_path), cfg);
      write_disparity(disparity_out, d);
      std::printf("disparity: %zu valid of %zu pixels\n", count_valid(d), d.size());
    } else if (*cloud) {
      const auto cfg = cloud_cfg.load();
      const auto c = stage_cloud(read_disparity(cloud_disparity), cfg);
      write_ply(cloud_out, c);
      std::printf("cloud: %zu points\n", c.size());
    } else if (*planes) {
      const auto cfg = planes_cfg.load();
      const auto p = stage_planes(read_ply(planes_cloud), cfg);
      write_planes(planes_out, p);
      std::printf("planes: offset_near %s, offset_far %s, inliers %zu/%zu\n",
                  format_real(p.offset_near, 9).c_str(), format_real(p.offset_far, 9).c_str(),
                  p.inliers_near, p.inliers_far);
    } else if (*mask) {
      const auto cfg = mask_cfg.load();
      const auto image = decode_any_as_rgb(detail::read_file_bytes(mask_image));
      const auto m = stage_mask(read_ply(mask_cloud), read_planes(mask_planes), image, cfg);
      write_pgm(mask_out, mask_to_gray(m.mask));
      write_ppm(mask_image_out, m.filtered);
      std::size_t on = 0;
      for (auto bit : m.mask.data()) on += bit ? 1 : 0;
      std::printf("mask: %zu near-plane points, %zu mask pixels\n", m.selected_points, on);
    } else if (*nodes) {
      const auto cfg = nodes_cfg.load();
      const auto n = stage_nodes(read_yolo_labels(nodes_labels), read_planes(nodes_planes),
                                 read_calibration(nodes_calib), cfg);
      write_text(nodes_out, encode_tie_points(n.ties));
      for (const auto& d : n.located.diagnostics) {
        std::fprintf(stderr, "nodes: label %zu skipped: %s\n", d.label_index + 1, d.message.c_str());
      }
      std::printf("nodes: %zu ties from %zu labels\n", n.ties.size(),
                  n.located.nodes.size() + n.located.diagnostics.size());
    } else if (*tie) {
      auto cfg = tie_cfg.load();
      if (!tie_robot.empty()) parse_endpoint(tie_robot, cfg);
      const auto ties = decode_tie_points(detail::read_file_bytes(tie_points));
      TcpRobotClient client(cfg.host, cfg.port);
      SequenceReport report;
      int status = 0;
      try {
        report = execute_sequence(ties, client, cfg.error_policy);
      } catch (const ConnectionLostError& e) {
        report = e.partial_report();
        std::fprintf(stderr, "%s\n", e.what());
        status = 2;
      }
      if (!tie_report.empty()) write_text(tie_report, encode_sequence_report(report));
      RunMetrics m;
      if (report.attempted > 0) m.tce_percent = compute_tce(report.successes, report.attempted);
      if (!tie_metrics.empty()) write_text(tie_metrics, encode_metrics(m));
      print_report_summary("tie", report);
      if (m.tce_percent) std::printf("tie: tce_percent=%s\n", format_metric(*m.tce_percent).c_str());
      return status;
    } else if (*sim) {
      const auto cfg = sim_cfg.load();
      std::unique_ptr<std::ofstream> log;
      if (!cfg.sim_log.empty()) {
        log = std::make_unique<std::ofstream>(cfg.sim_log, std::ios::app);
        if (!*log) throw Error("robot-link", ErrorCode::FileError, "cannot open " + cfg.sim_log);
      }
      SimRobotServer server(cfg.sim, cfg.port, log.get(), sim->count("--loopback") > 0);
      std::printf("sim-robot: listening on port %d\n", server.port());
      std::fflush(stdout);
      server.serve();
      std::printf("sim-robot: QUIT received, %zu tie attempts\n", server.robot().tie_attempts());
    } else if (*synth) {
      SceneSpec spec = synth_spec.empty() ? SceneSpec{} : read_scene_spec(synth_spec);
      synth_flags.apply(spec);
      validate_scene_spec(spec);
      const auto b = synthesize_scene(spec);
      write_scene_bundle(synth_out, spec, b);
      std::printf("synth: %zu nodes, %zu cloud points, %zu valid disparities\n",
                  b.cloud.truth.nodes.size(), b.cloud.cloud.size(), count_valid(b.disparity));
    } else if (*eval) {
      const auto cfg = eval_cfg.load();
      const auto pred = decode_points(detail::read_file_bytes(eval_pred));
      const auto gt = decode_points(detail::read_file_bytes(eval_gt));
      RunMetrics m = evaluate_nodes(pred, gt, cfg.matching_cutoff);
      if (!eval_report.empty()) {
        const auto report = decode_sequence_report(detail::read_file_bytes(eval_report));
        m.tce_percent = compute_tce(report.successes, report.attempted);
      }
      if (!eval_out.empty()) write_text(eval_out, encode_metrics(m));
      print_metrics("eval", m);
      if (!eval_pred_labels.empty() || !eval_gt_labels.empty()) {
        if (eval_pred_labels.empty() || eval_gt_labels.empty()) {
          throw Error("cli", ErrorCode::InvalidArgument, "--pred-labels and --gt-labels go together");
        }
        const double acc = detection_accuracy(read_yolo_labels(eval_pred_labels),
                                              read_yolo_labels(eval_gt_labels), cfg.iou_threshold);
        std::printf("eval: detection_accuracy=%s\n", format_metric(acc).c_str());
      }
    } else if (*run) {
      auto cfg = run_cfg.load();
      RunInputs in = load_bundle_inputs(run_bundle);
      if (!run_labels.empty()) in.labels = read_yolo_labels(run_labels);
      std::unique_ptr<LineChannel> channel;
      if (!run_no_robot) {
        if (run_robot.empty()) {
          channel = std::make_unique<InProcessChannel>(cfg.sim);
        } else {
          parse_endpoint(run_robot, cfg);
          channel = std::make_unique<TcpRobotClient>(cfg.host, cfg.port);
        }
      }
      const auto out = run_pipeline(in, cfg, channel.get());
      write_run_outputs(run_out, out, cfg);
      std::printf("run: %zu cloud points, %zu ties\n", out.cloud.size(), out.nodes.ties.size());
      if (out.report) print_report_summary("run", *out.report);
      print_metrics("run", out.metrics);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return is_input_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cli: %s\n", e.what());
    return 2;
  }
  return 0;
}
