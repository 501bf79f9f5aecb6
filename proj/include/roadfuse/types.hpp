#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roadfuse/geometry.hpp"

namespace roadfuse {

// Order matters: it is the tie-break order for dominant-type selection.
enum class MarkingType : std::uint8_t { kLaneline = 0, kRoadedge = 1, kStopline = 2 };

inline constexpr std::size_t kMarkingTypeCount = 3;
inline constexpr std::array<MarkingType, kMarkingTypeCount> kAllMarkingTypes = {
    MarkingType::kLaneline, MarkingType::kRoadedge, MarkingType::kStopline};

constexpr std::size_t index_of(MarkingType type) { return static_cast<std::size_t>(type); }

std::string_view to_string(MarkingType type);
std::optional<MarkingType> parse_marking_type(std::string_view name);

// One polyline from the detector, body frame until transformed.
struct RawDetection {
  Polyline points;
  double confidence = 1.0;
  MarkingType type = MarkingType::kLaneline;
};

struct FrameInput {
  double timestamp = 0.0;
  Pose pose;  // body -> world
  std::vector<RawDetection> detections;
};

// A typed polyline without confidence (groundtruth and evaluation input).
struct TypedLine {
  MarkingType type = MarkingType::kLaneline;
  Polyline points;
};

// Failure classes, mapped to distinct CLI exit codes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace roadfuse
