#include "roadfuse/local_map.hpp"

#include <chrono>

#include "roadfuse/logging.hpp"

namespace roadfuse {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

Polyline clip_to_window(const Polyline& line, const Pose& pose, const MapWindow& window) {
  const Pose to_body = pose.inverse();
  Polyline body;
  body.reserve(line.size());
  for (const Vec3& p : line) {
    body.push_back(to_body.apply(p));
  }
  const Rect2 rect = window.rect();
  if (body.size() == 1) {
    return rect.contains(body.front()) ? line : Polyline{};
  }
  Polyline best;
  double best_length = -1.0;
  for (Polyline& piece : clip_polyline(body, rect)) {
    const double length = polyline_length(piece);
    if (length > best_length) {
      best_length = length;
      best = std::move(piece);
    }
  }
  for (Vec3& p : best) {
    p = pose.apply(p);
  }
  return best;
}

LocalMap::LocalMap(LocalMapConfig config)
    : config_(config), voxels_(config.voxel), instances_(config.clustering, config.fit) {}

MapSnapshot LocalMap::process_frame(const FrameInput& frame) {
  if (last_timestamp_ && !(frame.timestamp > *last_timestamp_)) {
    throw OrderingError("frame timestamp " + std::to_string(frame.timestamp) +
                        " does not follow " + std::to_string(*last_timestamp_));
  }
  const auto frame_start = Clock::now();
  last_timestamp_ = frame.timestamp;
  if (!origin_) {
    origin_ = frame.pose;
  }
  const Pose pose_g = origin_->inverse().compose(frame.pose);
  std::vector<std::string> warnings;
  StageTimings timings;

  auto t = Clock::now();
  std::vector<RawDetection> parsed;
  parsed.reserve(frame.detections.size());
  for (const RawDetection& detection : frame.detections) {
    RawDetection copy = detection;
    if (sanitize_detection(copy)) {
      parsed.push_back(std::move(copy));
    } else {
      warnings.push_back("detection with fewer than 2 distinct points skipped");
    }
  }
  const auto kept = transform_to_reference(filter_detections(parsed, config_.filter), pose_g);
  timings.preprocess_ms = elapsed_ms(t);

  t = Clock::now();
  std::vector<VoxelHandle> touched;
  for (const RawDetection& detection : kept) {
    const auto handles = voxels_.integrate(detection);
    voxels_.update_co_observation(handles);
    touched.insert(touched.end(), handles.begin(), handles.end());
  }
  timings.integrate_ms = elapsed_ms(t);

  t = Clock::now();
  const auto reliable = voxels_.extract_new_reliable(touched, config_.alpha_n);
  const std::uint32_t max_count = voxels_.max_count();
  timings.reliable_ms = elapsed_ms(t);

  t = Clock::now();
  InstanceUpdate update = instances_.update(reliable, voxels_);
  timings.cluster_ms = elapsed_ms(t);
  for (std::string& w : update.warnings) {
    warnings.push_back(std::move(w));
  }

  t = Clock::now();
  MapSnapshot snap = snapshot(frame, pose_g);
  timings.layout_ms = elapsed_ms(t);
  snap.stats.max_count = max_count;

  t = Clock::now();
  const EvictionResult evicted =
      voxels_.evict_outside(OrientedRect{pose_g, config_.retention.rect()});
  instances_.remove_voxels(evicted.removed_handles);
  timings.evict_ms = elapsed_ms(t);

  snap.frame = frames_++;
  snap.stats.detections_in = frame.detections.size();
  snap.stats.detections_kept = kept.size();
  snap.stats.new_reliable = reliable.size();
  snap.stats.evicted_voxels = evicted.removed_voxels;
  snap.stats.voxel_count = voxels_.voxel_count();
  snap.stats.block_count = voxels_.block_count();
  snap.stats.reliable_count = voxels_.reliable_count();
  snap.stats.instance_count = instances_.size();
  timings.total_ms = elapsed_ms(frame_start);
  snap.stats.timings = timings;
  snap.warnings = std::move(warnings);
  for (const std::string& w : snap.warnings) {
    log().debug("frame {}: {}", snap.frame, w);
  }
  return snap;
}

MapSnapshot LocalMap::snapshot(const FrameInput& frame, const Pose& pose_g) const {
  MapSnapshot snap;
  snap.timestamp = frame.timestamp;
  snap.pose = pose_g;
  snap.origin = *origin_;
  std::vector<InstanceLine> lines;
  for (const auto& [id, instance] : instances_.instances()) {
    Polyline clipped = clip_to_window(instance.polyline, pose_g, config_.window);
    if (clipped.empty()) {
      continue;
    }
    if (clipped.size() >= 2) {
      lines.push_back({id, instance.type, clipped});
    }
    snap.instances.push_back({id, instance.type, std::move(clipped), instance.voxels.size()});
  }
  if (config_.layout_enabled) {
    const Vec3 heading = pose_g.rotation * Vec3::UnitX();
    snap.layout = build_road_layout(std::span<const InstanceLine>(lines), config_.layout, heading);
  }
  return snap;
}

}  // namespace roadfuse
