#include "roadfuse/detection.hpp"

#include <algorithm>

namespace roadfuse {

namespace {
constexpr double kCoincidentDistance = 1e-6;
}  // namespace

double max_turn_angle(std::span<const Vec3> points) {
  double worst = 0.0;
  Vec3 previous = Vec3::Zero();
  bool have_previous = false;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const Vec3 d = points[i] - points[i - 1];
    if (d.norm() <= kCoincidentDistance) {
      continue;
    }
    if (have_previous) {
      worst = std::max(worst, angle_between(previous, d));
    }
    previous = d;
    have_previous = true;
  }
  return worst;
}

std::vector<RawDetection> filter_detections(std::span<const RawDetection> detections,
                                            const FilterParams& params) {
  if (!params.enabled) {
    return {detections.begin(), detections.end()};
  }
  std::vector<RawDetection> kept;
  kept.reserve(detections.size());
  for (const auto& detection : detections) {
    if (detection.confidence < params.min_confidence) {
      continue;
    }
    if (max_turn_angle(detection.points) > params.max_turn_angle) {
      continue;
    }
    kept.push_back(detection);
  }
  return kept;
}

std::vector<RawDetection> transform_to_reference(std::span<const RawDetection> detections,
                                                 const Pose& pose) {
  std::vector<RawDetection> out(detections.begin(), detections.end());
  for (auto& detection : out) {
    for (auto& p : detection.points) {
      p = pose.apply(p);
    }
  }
  return out;
}

bool sanitize_detection(RawDetection& detection) {
  Polyline cleaned;
  cleaned.reserve(detection.points.size());
  for (const auto& p : detection.points) {
    if (cleaned.empty() || (p - cleaned.back()).norm() > kCoincidentDistance) {
      cleaned.push_back(p);
    }
  }
  detection.points = std::move(cleaned);
  return detection.points.size() >= 2;
}

}  // namespace roadfuse
