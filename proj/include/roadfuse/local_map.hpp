#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roadfuse/detection.hpp"
#include "roadfuse/instance_map.hpp"
#include "roadfuse/road_layout.hpp"
#include "roadfuse/voxel_map.hpp"

namespace roadfuse {

// Body-frame box: lateral along +y (left positive), longitudinal along +x.
struct MapWindow {
  double lateral_min = -15.0;
  double lateral_max = 15.0;
  double longitudinal_min = -5.0;
  double longitudinal_max = 30.0;

  Rect2 rect() const { return {longitudinal_min, longitudinal_max, lateral_min, lateral_max}; }
  bool valid() const { return lateral_min < lateral_max && longitudinal_min < longitudinal_max; }
};

struct LocalMapConfig {
  FilterParams filter;
  VoxelMapParams voxel;
  std::uint32_t alpha_n = 10;
  ClusteringParams clustering;
  PolylineFitParams fit;
  LayoutParams layout;
  // Geometry handed out in snapshots.
  MapWindow window;
  // Voxels whose blocks leave this box are forgotten. Kept wider than the
  // output window so that lines entering the window already carry history.
  MapWindow retention{-20.0, 20.0, -10.0, 45.0};
  bool layout_enabled = true;
};

struct StageTimings {
  double preprocess_ms = 0.0;
  double integrate_ms = 0.0;
  double reliable_ms = 0.0;
  double cluster_ms = 0.0;
  double layout_ms = 0.0;
  double evict_ms = 0.0;
  double total_ms = 0.0;
};

struct MapStats {
  std::size_t detections_in = 0;
  std::size_t detections_kept = 0;
  std::size_t voxel_count = 0;
  std::size_t block_count = 0;
  std::size_t reliable_count = 0;
  std::size_t new_reliable = 0;
  std::size_t instance_count = 0;
  std::size_t evicted_voxels = 0;
  std::uint32_t max_count = 0;  // before eviction
  StageTimings timings;
};

struct SnapshotInstance {
  InstanceId id = 0;
  MarkingType type = MarkingType::kLaneline;
  Polyline points;  // frame g, clipped to the window
  std::size_t voxel_count = 0;
};

struct MapSnapshot {
  std::size_t frame = 0;
  double timestamp = 0.0;
  Pose pose;    // body -> g
  Pose origin;  // g -> world (pose of the first frame)
  std::vector<SnapshotInstance> instances;
  RoadLayout layout;
  MapStats stats;
  std::vector<std::string> warnings;
};

class OrderingError : public DataError {
 public:
  using DataError::DataError;
};

// Per-frame pipeline: preprocessing, voxel fusion, reliable extraction,
// clustering, windowed snapshot with layout, then eviction.
class LocalMap {
 public:
  explicit LocalMap(LocalMapConfig config = {});

  // Throws OrderingError unless timestamps strictly increase.
  MapSnapshot process_frame(const FrameInput& frame);

  const SemanticVoxelMap& voxels() const { return voxels_; }
  const InstanceMap& instances() const { return instances_; }
  const LocalMapConfig& config() const { return config_; }
  std::size_t frames_processed() const { return frames_; }

 private:
  MapSnapshot snapshot(const FrameInput& frame, const Pose& pose_g) const;

  LocalMapConfig config_;
  SemanticVoxelMap voxels_;
  InstanceMap instances_;
  std::optional<Pose> origin_;
  std::optional<double> last_timestamp_;
  std::size_t frames_ = 0;
};

// Body-frame pieces of `line` inside `window`, mapped back through `pose`.
// Returns the longest piece, or an empty polyline when none survives.
Polyline clip_to_window(const Polyline& line, const Pose& pose, const MapWindow& window);

}  // namespace roadfuse
