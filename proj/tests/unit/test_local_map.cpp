#include <cmath>
#include <sstream>

#include "doctest.h"
#include "roadfuse/eval.hpp"
#include "roadfuse/io.hpp"
#include "roadfuse/local_map.hpp"
#include "roadfuse/sim.hpp"
#include "support/oracles.hpp"

using namespace roadfuse;

namespace {

std::vector<FrameInput> clean_stream(ScenarioKind kind, std::size_t frames) {
  ScenarioSpec spec;
  spec.kind = kind;
  spec.frames = frames;
  return render_stream(build_scenario(spec), NoiseSpec{});
}

}  // namespace

TEST_CASE("timestamps must strictly increase") {
  LocalMap map;
  FrameInput f;
  f.timestamp = 1.0;
  map.process_frame(f);
  CHECK_THROWS_AS(map.process_frame(f), OrderingError);
  f.timestamp = 0.5;
  CHECK_THROWS_AS(map.process_frame(f), OrderingError);
  f.timestamp = 1.5;
  CHECK_NOTHROW(map.process_frame(f));
  CHECK(map.frames_processed() == 2);
}

TEST_CASE("degenerate and filtered detections are counted, not fused") {
  LocalMap map;
  FrameInput f;
  f.detections.push_back({{{1, 0, 0}, {1, 0, 0}}, 1.0, MarkingType::kLaneline});
  f.detections.push_back({{{1, 0, 0}, {5, 0, 0}}, 0.1, MarkingType::kLaneline});
  f.detections.push_back({{{1, 0, 0}, {5, 0, 0}}, 0.9, MarkingType::kLaneline});
  const MapSnapshot s = map.process_frame(f);
  CHECK(s.stats.detections_in == 3);
  CHECK(s.stats.detections_kept == 1);
  CHECK(s.warnings.size() == 1);
  CHECK(s.stats.voxel_count > 0);
}

TEST_CASE("clip_to_window keeps the longest inside piece") {
  const Pose pose = Pose::from_yaw(0.5, Vec3(10, 5, 0));
  const MapWindow window;
  // Body frame: in, out (lateral 20), back in for longer.
  const Polyline body{{0, 0, 0}, {5, 0, 0}, {5, 20, 0}, {8, 20, 0}, {8, 0, 0}, {25, 0, 0}};
  Polyline world;
  for (const Vec3& p : body) {
    world.push_back(pose.apply(p));
  }
  const Polyline clipped = clip_to_window(world, pose, window);
  REQUIRE(clipped.size() >= 2);
  const Vec3 a = pose.inverse().apply(clipped.front());
  const Vec3 b = pose.inverse().apply(clipped.back());
  CHECK(a.x() == doctest::Approx(8.0));
  CHECK(a.y() == doctest::Approx(15.0));
  CHECK(b.x() == doctest::Approx(25.0));
  CHECK(b.y() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(clip_to_window({pose.apply(Vec3(50, 0, 0)), pose.apply(Vec3(60, 0, 0))}, pose, window)
            .empty());
}

TEST_CASE("noiseless straight road converges to the true lines") {
  const auto frames = clean_stream(ScenarioKind::kStraight, 40);
  ScenarioSpec spec;
  spec.frames = 40;
  const Scenario scenario = build_scenario(spec);
  LocalMap map;
  std::vector<MapSnapshot> snaps;
  for (const FrameInput& f : frames) {
    snaps.push_back(map.process_frame(f));
  }
  const MapSnapshot& last = snaps.back();
  CHECK(last.instances.size() == 3);
  CHECK(last.layout.lanes.size() == 2);
  CHECK(last.layout.sections.size() == 1);
  // Each instance lies on a GT line (offsets 3.5, 0, -3.5 in world y).
  const Pose to_world = last.origin;
  for (const SnapshotInstance& inst : last.instances) {
    double worst = 0.0;
    for (const Vec3& p : inst.points) {
      const Vec3 w = to_world.apply(p);
      const double y = w.y();
      worst = std::max(worst, std::min({std::abs(y - 3.5), std::abs(y), std::abs(y + 3.5)}));
    }
    CHECK(worst < 0.15);
  }
  const EvalResult r =
      evaluate_snapshots(std::span<const MapSnapshot>(snaps).subspan(20),
                         scenario.gt.typed_lines(), EvalConfig{});
  CHECK(r.total.total.fp == 0);
  CHECK(r.total.total.fn == 0);
}

TEST_CASE("retention bounds the map while driving") {
  const auto frames = clean_stream(ScenarioKind::kStraight, 0);
  LocalMap map;
  std::size_t peak = 0;
  std::size_t evicted = 0;
  for (const FrameInput& f : frames) {
    const MapSnapshot s = map.process_frame(f);
    peak = std::max(peak, s.stats.voxel_count);
    evicted += s.stats.evicted_voxels;
    // Nothing outside the retention box survives eviction.
    for (const VoxelRecord& rec : map.voxels().dump()) {
      const Vec3 local = s.pose.inverse().apply(rec.center);
      CHECK(local.x() > -10.0 - 1.7);
      CHECK(local.x() < 45.0 + 1.7);
    }
  }
  CHECK(evicted > 0);
  // Retention box is 55 m long; three lines at roughly one voxel row each.
  CHECK(peak < 3 * 2 * 60 / 0.2);
}

TEST_CASE("layout can be switched off") {
  LocalMapConfig cfg;
  cfg.layout_enabled = false;
  LocalMap map(cfg);
  MapSnapshot last;
  for (const FrameInput& f : clean_stream(ScenarioKind::kStraight, 30)) {
    last = map.process_frame(f);
  }
  CHECK_FALSE(last.instances.empty());
  CHECK(last.layout.boundaries.empty());
  CHECK(last.layout.lanes.empty());
}

TEST_CASE("reliability latch on a repeated laneline") {
  LocalMap map;  // alpha_n = 10
  FrameInput f;
  f.pose = Pose::from_yaw(0.0, Vec3(0, 0, 0.33));
  f.detections.push_back({{{2, 1, -0.33}, {8, 1, -0.33}, {14, 1, -0.33}}, 1.0,
                          MarkingType::kLaneline});
  for (int k = 0; k < 10; ++k) {
    f.timestamp = 0.1 * k;
    CHECK(map.process_frame(f).stats.instance_count == 0);
  }
  f.timestamp = 1.0;
  const MapSnapshot s = map.process_frame(f);
  CHECK(s.stats.instance_count == 1);
  REQUIRE(s.instances.size() == 1);
  CHECK(s.instances[0].type == MarkingType::kLaneline);
}

TEST_CASE("an empty frame only evicts") {
  const auto frames = clean_stream(ScenarioKind::kCurve, 25);
  LocalMap map;
  for (const FrameInput& f : frames) {
    map.process_frame(f);
  }
  const auto before = map.voxels().dump();
  const std::size_t instances = map.instances().size();
  FrameInput empty;
  empty.timestamp = frames.back().timestamp + 0.1;
  empty.pose = frames.back().pose;  // same box, so nothing leaves it
  const MapSnapshot s = map.process_frame(empty);
  CHECK(s.stats.evicted_voxels == 0);
  CHECK(map.voxels().dump() == before);
  CHECK(map.instances().size() == instances);
}

TEST_CASE("snapshot geometry stays in the window and replays identically") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kSplit;
  spec.frames = 120;
  NoiseSpec noise;
  noise.dropout = 0.3;
  noise.jitter_sigma = 0.15;
  noise.outlier_rate = 0.05;
  const auto frames = render_stream(build_scenario(spec), noise);
  LocalMap a;
  LocalMap b;
  const MapWindow window = a.config().window;
  const double slack = a.config().voxel.voxel_size;
  std::size_t points = 0;
  for (const FrameInput& f : frames) {
    const MapSnapshot sa = a.process_frame(f);
    const MapSnapshot sb = b.process_frame(f);
    std::ostringstream ta;
    std::ostringstream tb;
    write_snapshot(ta, sa);
    write_snapshot(tb, sb);
    REQUIRE(ta.str() == tb.str());

    const Pose to_body = sa.pose.inverse();
    auto inside = [&](const Polyline& line) {
      for (const Vec3& p : line) {
        const Vec3 q = to_body.apply(p);
        CHECK(q.x() >= window.longitudinal_min - slack);
        CHECK(q.x() <= window.longitudinal_max + slack);
        CHECK(q.y() >= window.lateral_min - slack);
        CHECK(q.y() <= window.lateral_max + slack);
        ++points;
      }
    };
    for (const SnapshotInstance& inst : sa.instances) {
      inside(inst.points);
    }
    for (const Lane& lane : sa.layout.lanes) {
      inside(lane.centerline);
    }
  }
  CHECK(points > 1000);
}

TEST_CASE("stage timings account for the frame time") {
  ScenarioSpec spec;
  spec.lanes = 4;
  spec.frames = 60;
  NoiseSpec noise;
  noise.jitter_sigma = 0.15;
  noise.fragment_length = 5.5;
  LocalMap map;
  for (const FrameInput& f : render_stream(build_scenario(spec), noise)) {
    const StageTimings t = map.process_frame(f).stats.timings;
    const double sum = t.preprocess_ms + t.integrate_ms + t.reliable_ms + t.cluster_ms +
                       t.layout_ms + t.evict_ms;
    CHECK(sum <= t.total_ms);
    CHECK(sum >= 0.9 * t.total_ms);
  }
}
