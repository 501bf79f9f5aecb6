#pragma once

#include <numbers>
#include <span>
#include <vector>

#include "roadfuse/types.hpp"

namespace roadfuse {

struct FilterParams {
  double min_confidence = 0.3;
  // Per interior vertex, radians.
  double max_turn_angle = std::numbers::pi / 4.0;
  // false disables both the confidence and the zigzag rule.
  bool enabled = true;
};

// Largest angle between consecutive segment directions; zero-length
// segments are skipped. 0 for lines with fewer than three vertices.
double max_turn_angle(std::span<const Vec3> points);

// Keeps detections with confidence >= min_confidence whose every interior
// turn angle is <= max_turn_angle. Order preserved, points untouched.
std::vector<RawDetection> filter_detections(std::span<const RawDetection> detections,
                                            const FilterParams& params);

// p -> R p + t for every point; confidence and type unchanged.
std::vector<RawDetection> transform_to_reference(std::span<const RawDetection> detections,
                                                 const Pose& pose);

// Drops consecutive points closer than 1e-6 m. Returns false (and leaves
// the detection with < 2 points) when fewer than two distinct points remain.
bool sanitize_detection(RawDetection& detection);

}  // namespace roadfuse
