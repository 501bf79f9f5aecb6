#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "roadfuse/config.hpp"
#include "roadfuse/io.hpp"

using namespace roadfuse;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("roadfuse_test_" + name)).string();
}

}  // namespace

TEST_CASE("run config dump parses back to the same document") {
  RunConfig c;
  c.map.alpha_n = 3;
  c.map.clustering.beta_p = 0.55;
  c.map.layout.linkage_angle_max = 0.4;
  c.eval.warmup_frames = 12;
  const std::string text = dump_run_config(c);
  const RunConfig back = parse_run_config(text);
  CHECK(dump_run_config(back) == text);
  CHECK(back.map.alpha_n == 3);
  CHECK(back.eval.warmup_frames == 12);
  CHECK(run_config_keys().size() == 38);
}

TEST_CASE("run config rejects bad input") {
  CHECK_THROWS_AS(parse_run_config(R"({"alpha": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"alpha_n": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"alpha_n": "ten"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"beta_p": 1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"window_lateral_max": 30})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(temp_path("missing.json")), IoError);
}

TEST_CASE("overrides and window") {
  RunConfig c;
  apply_override(c, "alpha_n=3");
  apply_override(c, "layout_enabled=false");
  apply_override(c, "beta_r=0.8");
  CHECK(c.map.alpha_n == 3);
  CHECK_FALSE(c.map.layout_enabled);
  CHECK(c.map.clustering.beta_r == 0.8);
  CHECK_THROWS_AS(apply_override(c, "alpha_n"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "alpha_n=abc"), ConfigError);

  apply_window(c, "-10,10,0,20");
  CHECK(c.map.window.lateral_min == -10.0);
  CHECK(c.eval.window.longitudinal_max == 20.0);
  CHECK_THROWS_AS(apply_window(c, "1,2,3"), ConfigError);
  CHECK_THROWS_AS(apply_window(c, "1,2,x,4"), ConfigError);
  CHECK_THROWS_AS(apply_window(c, "5,1,0,10"), ConfigError);
}

TEST_CASE("simulation spec round trip") {
  const SimulationSpec s = parse_simulation_spec(
      R"({"scenario": {"kind": "split", "seed": 9, "frames": 30},
          "noise": {"dropout": 0.2, "range_lateral_max": 15}})");
  CHECK(s.scenario.kind == ScenarioKind::kSplit);
  CHECK(s.scenario.seed == 9);
  CHECK(s.noise.dropout == 0.2);
  CHECK(s.noise.range.lateral_max == 15.0);
  const SimulationSpec back = parse_simulation_spec(dump_simulation_spec(s));
  CHECK(dump_simulation_spec(back) == dump_simulation_spec(s));
  CHECK_THROWS_AS(parse_simulation_spec(R"({"scenario": {"kind": "loop"}})"), ConfigError);
  CHECK_THROWS_AS(parse_simulation_spec(R"({"weather": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_simulation_spec(R"({"noise": {"dropout": 2}})"), ConfigError);
}

TEST_CASE("frame stream round trip") {
  FrameInput f;
  f.timestamp = 0.25;
  f.pose = Pose::from_yaw(0.3, Vec3(1.5, -2.0, 0.33));
  f.detections.push_back({{{0, 0, 0}, {1, 0.5, 0}}, 0.8, MarkingType::kRoadedge});
  f.detections.push_back({{{2, 1, 0}, {2, 4, 0}}, 1.0, MarkingType::kStopline});
  std::stringstream buffer;
  write_frame(buffer, f);
  write_frame(buffer, f);
  const auto frames = read_frames(buffer);
  REQUIRE(frames.size() == 2);
  CHECK(frames[1].timestamp == 0.25);
  CHECK((frames[1].pose.translation - f.pose.translation).norm() == 0.0);
  CHECK(frames[1].pose.rotation == f.pose.rotation);
  REQUIRE(frames[1].detections.size() == 2);
  CHECK(frames[1].detections[0].type == MarkingType::kRoadedge);
  CHECK(frames[1].detections[0].points == f.detections[0].points);
}

TEST_CASE("malformed stream lines name their position") {
  const std::string good =
      R"({"timestamp": 0, "pose": [1,0,0,0,1,0,0,0,1,0,0,0], "detections": []})";
  const std::vector<std::pair<std::string, std::string>> bad = {
      {R"({"timestamp": 1, "pose": [1,0,0,0,1,0,0,0,1,0,0], "detections": []})", "12 numbers"},
      {R"({"timestamp": 1, "pose": [2,0,0,0,1,0,0,0,1,0,0,0], "detections": []})", "orthonormal"},
      {R"({"pose": [1,0,0,0,1,0,0,0,1,0,0,0], "detections": []})", "timestamp"},
      {R"({"timestamp": 1, "pose": [1,0,0,0,1,0,0,0,1,0,0,0], )"
       R"("detections": [{"type": "curb", "confidence": 1, "points": []}]})",
       "type"},
      {"{oops", "src:3"},
  };
  for (const auto& [line, needle] : bad) {
    std::stringstream in(good + "\n\n" + std::string(line) + "\n");
    std::string message;
    try {
      read_frames(in, "src");
    } catch (const DataError& e) {
      message = e.what();
    }
    INFO(message);
    CHECK(message.find("src:3") != std::string::npos);
    CHECK(message.find(needle) != std::string::npos);
  }
  CHECK_THROWS_AS(read_frames(temp_path("absent.jsonl")), IoError);
}

TEST_CASE("groundtruth and snapshot files round trip") {
  GtMap gt;
  gt.lines.push_back({0, MarkingType::kLaneline, {{0, 0, 0}, {10, 0, 0}}});
  gt.lines.push_back({1, MarkingType::kRoadedge, {{0, 3.5, 0}, {10, 3.5, 0}}});
  gt.lanes.push_back({0, 1, 0, {{0, 1.75, 0}, {10, 1.75, 0}}});
  const std::string gt_path = temp_path("gt.json");
  write_gt(gt_path, gt);
  const GtMap back = read_gt(gt_path);
  REQUIRE(back.lines.size() == 2);
  CHECK(back.lines[1].type == MarkingType::kRoadedge);
  CHECK(back.lanes.at(0).centerline == gt.lanes[0].centerline);

  MapSnapshot s;
  s.frame = 4;
  s.timestamp = 0.4;
  s.pose = Pose::from_yaw(0.1, Vec3(3, 0, 0));
  s.instances.push_back({7, MarkingType::kLaneline, {{0, 0, 0}, {4, 0, 0}}, 20});
  s.stats.timings.total_ms = 1.25;
  std::ostringstream plain;
  write_snapshot(plain, s);
  CHECK(plain.str().find("timings_ms") == std::string::npos);
  std::ostringstream timed;
  write_snapshot(timed, s, SnapshotWriteOptions{true});
  CHECK(timed.str().find("timings_ms") != std::string::npos);

  const std::string snap_path = temp_path("snap.jsonl");
  write_text(snap_path, plain.str());
  const auto snaps = read_snapshots(snap_path);
  REQUIRE(snaps.size() == 1);
  CHECK(snaps[0].frame == 4);
  CHECK(snaps[0].instances.at(0).id == 7);
  CHECK(snaps[0].instances[0].voxel_count == 20);
  CHECK(snaps[0].instances[0].points == s.instances[0].points);
  std::filesystem::remove(gt_path);
  std::filesystem::remove(snap_path);
}
