#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "support.hpp"

namespace opentie {
namespace {

namespace fs = std::filesystem;

/// The default scene is expensive to render; build it once per process.
const SceneBundle& default_bundle() {
  static const SceneBundle b = synthesize_scene(SceneSpec{});
  return b;
}

RunInputs inputs_from(const SceneBundle& b) {
  RunInputs in;
  in.left = b.images.left;
  in.right = b.images.right;
  in.disparity = b.disparity;
  in.labels = b.labels;
  in.calibration = b.calibration;
  in.ground_truth_base = b.nodes_base;
  return in;
}

std::string slurp(const fs::path& p) { return detail::read_file_bytes(p.string()); }

TEST(Pipeline, RenderedDisparityEndToEnd) {
  PipelineConfig cfg;
  cfg.use_stereo_matching = false;
  InProcessChannel robot(cfg.sim);
  const RunOutputs out = run_pipeline(inputs_from(default_bundle()), cfg, &robot);
  EXPECT_EQ(out.nodes.ties.size(), 25u);
  EXPECT_EQ(out.metrics.matched, 25u);
  ASSERT_TRUE(out.metrics.sai_mm);
  EXPECT_LE(*out.metrics.sai_mm, 10.0);
  ASSERT_TRUE(out.metrics.tce_percent);
  EXPECT_EQ(format_metric(*out.metrics.tce_percent), "100.0");
  EXPECT_EQ(robot.robot().tie_attempts(), 25u);
  EXPECT_GT(out.mask.selected_points, 0u);
}

TEST(Pipeline, StagesThroughFilesEqualFusedRun) {
  PipelineConfig cfg;
  cfg.use_stereo_matching = false;
  const SceneBundle& b = default_bundle();
  testing::TempDir dir;
  write_scene_bundle(dir.file("bundle"), SceneSpec{}, b);

  const RunOutputs fused = run_pipeline(load_bundle_inputs(dir.file("bundle")), cfg, nullptr);
  write_run_outputs(dir.file("fused"), fused, cfg);

  // stage by stage, each reading the previous stage's file
  const fs::path bundle = dir.file("bundle");
  const PointCloud cloud = stage_cloud(read_disparity((bundle / bundle_files::disparity).string()), cfg);
  write_ply(dir.file("cloud.ply"), cloud);
  const ParallelPlanePair planes = stage_planes(read_ply(dir.file("cloud.ply")), cfg);
  write_planes(dir.file("planes.txt"), planes);
  const MaskStage mask = stage_mask(read_ply(dir.file("cloud.ply")), read_planes(dir.file("planes.txt")),
                                    decode_any_as_rgb(slurp(bundle / bundle_files::left)), cfg);
  write_pgm(dir.file("mask.pgm"), mask_to_gray(mask.mask));
  write_ppm(dir.file("filtered.ppm"), mask.filtered);
  const NodesStage nodes = stage_nodes(read_yolo_labels((bundle / bundle_files::labels).string()),
                                       read_planes(dir.file("planes.txt")),
                                       read_calibration((bundle / bundle_files::calibration).string()), cfg);
  detail::write_file_bytes(dir.file("ties.txt"), encode_tie_points(nodes.ties));

  const fs::path fused_dir = dir.file("fused");
  EXPECT_EQ(slurp(dir.file("cloud.ply")), slurp(fused_dir / run_files::cloud));
  EXPECT_EQ(slurp(dir.file("planes.txt")), slurp(fused_dir / run_files::planes));
  EXPECT_EQ(slurp(dir.file("mask.pgm")), slurp(fused_dir / run_files::mask));
  EXPECT_EQ(slurp(dir.file("filtered.ppm")), slurp(fused_dir / run_files::filtered));
  EXPECT_EQ(slurp(dir.file("ties.txt")), slurp(fused_dir / run_files::ties));
}

TEST(Pipeline, OneNodeOutsideWorkspaceSkipped) {
  PipelineConfig cfg;
  cfg.use_stereo_matching = false;
  cfg.error_policy = ErrorPolicy::SkipOnError;
  InProcessChannel robot(cfg.sim);
  const RunOutputs out = run_pipeline(inputs_from(default_bundle()), cfg, &robot);
  ASSERT_EQ(format_metric(*out.metrics.tce_percent), "100.0");

  // move one tie far beyond the reach of the simulated arm
  auto ties = out.nodes.ties;
  ties[7].position += Vec3(5, 0, 0);
  InProcessChannel robot2(cfg.sim);
  const SequenceReport r = execute_sequence(ties, robot2, ErrorPolicy::SkipOnError);
  EXPECT_EQ(r.attempted, 25u);
  EXPECT_EQ(r.successes, 24u);
  EXPECT_EQ(format_metric(compute_tce(r.successes, r.attempted)), "96.0");
  InProcessChannel robot3(cfg.sim);
  const SequenceReport a = execute_sequence(ties, robot3, ErrorPolicy::AbortOnError);
  EXPECT_TRUE(a.aborted);
  EXPECT_EQ(a.attempted, 8u);
}

TEST(Pipeline, DeterministicOutputs) {
  PipelineConfig cfg;
  cfg.use_stereo_matching = false;
  testing::TempDir dir;
  for (const char* name : {"a", "b"}) {
    InProcessChannel robot(cfg.sim);
    write_run_outputs(dir.file(name), run_pipeline(inputs_from(default_bundle()), cfg, &robot), cfg);
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir.file("a"))) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(fs::path(dir.file("b")) / entry.path().filename()))
        << entry.path().filename();
  }
  EXPECT_EQ(files, 10u);
}

TEST(Pipeline, StageErrors) {
  PipelineConfig cfg;
  const ParallelPlanePair planes = default_bundle().cloud.truth.planes;
  PointCloud base_cloud = default_bundle().cloud.cloud;
  base_cloud.frame = frames_id::base;
  try {
    stage_mask(base_cloud, planes, RgbImage(1280, 720), cfg);
    FAIL() << "expected FrameMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FrameMismatch);
  }
  try {
    stage_mask(default_bundle().cloud.cloud, planes, RgbImage(640, 480), cfg);
    FAIL() << "expected SizeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
  }
  RunInputs in = inputs_from(default_bundle());
  in.disparity.reset();
  cfg.use_stereo_matching = false;
  EXPECT_THROW(run_pipeline(in, cfg, nullptr), Error);
}

TEST(Pipeline, BundleFilesRoundTrip) {
  testing::TempDir dir;
  const SceneBundle& b = default_bundle();
  write_scene_bundle(dir.path().string(), SceneSpec{}, b);
  for (const char* f : {bundle_files::cloud, bundle_files::disparity, bundle_files::left, bundle_files::right,
                        bundle_files::labels, bundle_files::gt_nodes, bundle_files::planes,
                        bundle_files::calibration, bundle_files::gt_nodes_base, bundle_files::scene}) {
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  }
  const RunInputs in = load_bundle_inputs(dir.path().string());
  EXPECT_EQ(in.left, b.images.left);
  EXPECT_EQ(in.labels.size(), 25u);
  ASSERT_TRUE(in.ground_truth_base);
  ASSERT_EQ(in.ground_truth_base->size(), 25u);
  for (std::size_t i = 0; i < 25; ++i) EXPECT_LT(((*in.ground_truth_base)[i] - b.nodes_base[i]).norm(), 1e-8);
  EXPECT_EQ(encode_scene_spec(read_scene_spec((dir.path() / bundle_files::scene).string())),
            encode_scene_spec(SceneSpec{}));
  EXPECT_EQ(count_valid(*in.disparity), count_valid(b.disparity));
}

}  // namespace
}  // namespace opentie
