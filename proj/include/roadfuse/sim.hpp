#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadfuse/local_map.hpp"
#include "roadfuse/types.hpp"

namespace roadfuse {

enum class ScenarioKind : std::uint8_t { kStraight, kCurve, kMerge, kSplit, kIntersection };

std::string_view to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario_kind(std::string_view name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kStraight;
  int lanes = 2;
  double lane_width = 3.5;
  double length = 200.0;
  double curvature = 0.01;  // curve only, 1/m, positive turns left
  std::uint64_t seed = 1;
  double speed = 8.0;       // m/s
  double rate_hz = 10.0;
  // Height of the vehicle body frame above the road surface (rear-axle
  // center of a passenger car).
  double body_height = 0.33;
  // 0 drives as far as the road allows.
  std::size_t frames = 0;
};

struct NoiseSpec {
  double dropout = 0.0;       // per detection per frame
  double jitter_sigma = 0.0;  // in-plane, per vertex
  // Jittered detections are first resampled to evenly spaced vertices at
  // most this far apart; detector output is sparse, and jitter on dense
  // vertices reads as a zigzag. Unused when jitter_sigma is 0.
  double vertex_spacing = 2.0;
  double outlier_rate = 0.0;  // chance per frame of one false line
  double confidence_min = 1.0;
  double confidence_max = 1.0;
  double outlier_confidence_min = 0.2;
  double outlier_confidence_max = 0.9;
  // Cut visible lines into pieces of this length (0 keeps them whole).
  double fragment_length = 0.0;
  MapWindow range{-20.0, 20.0, -10.0, 45.0};
};

struct GtLine {
  std::uint32_t id = 0;
  MarkingType type = MarkingType::kLaneline;
  Polyline points;  // world frame
};

struct GtLane {
  std::uint32_t id = 0;
  std::uint32_t left = 0;   // GtLine ids
  std::uint32_t right = 0;
  Polyline centerline;
};

struct GtMap {
  std::vector<GtLine> lines;
  std::vector<GtLane> lanes;

  std::vector<TypedLine> typed_lines() const;
};

struct Scenario {
  ScenarioSpec spec;
  GtMap gt;
  std::vector<Pose> trajectory;  // body -> world
  std::vector<double> timestamps;
};

// Throws ConfigError for unsupported or inconsistent specs.
Scenario build_scenario(const ScenarioSpec& spec);

// Throws ConfigError when a probability or range is out of bounds.
void validate(const NoiseSpec& noise);

std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t frame);

// One frame of detections seen from `pose`, body frame. Fully determined
// by the arguments; the timestamp is left at 0.
FrameInput render_frame(const GtMap& gt, const Pose& pose, const NoiseSpec& noise,
                        std::uint64_t seed);

std::vector<FrameInput> render_stream(const Scenario& scenario, const NoiseSpec& noise);

}  // namespace roadfuse
