#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "roadfuse/types.hpp"

namespace roadfuse {

struct LayoutParams {
  double width_min = 2.5;
  double width_max = 4.5;
  double width_variation_max = 0.8;
  double min_lane_length = 5.0;
  double endpoint_dist_max = 3.0;
  double endpoint_angle_max = std::numbers::pi / 6.0;
  double section_angle_max = std::numbers::pi / 4.0;
  double linkage_gap_max = 3.0;
  double linkage_angle_max = std::numbers::pi / 6.0;
  // Spacing of right-boundary samples when measuring lane width.
  double width_sample_step = 0.5;
  // Spacing of the points tested for mutual overlap.
  double overlap_sample_step = 1.0;
};

// Vectorized marking handed to layout generation.
struct InstanceLine {
  std::uint64_t id = 0;
  MarkingType type = MarkingType::kLaneline;
  Polyline polyline;
};

struct LaneBoundary {
  std::uint32_t id = 0;  // index into the boundary list
  std::vector<std::uint64_t> sources;
  MarkingType kind = MarkingType::kLaneline;  // laneline or roadedge
  Polyline polyline;
};

struct RoadSection {
  std::uint32_t id = 0;
  std::vector<std::uint32_t> boundaries;  // left to right
  Vec3 direction = Vec3::UnitX();
};

struct Lane {
  std::uint32_t id = 0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  // Arclength interval on the left boundary.
  double range_begin = 0.0;
  double range_end = 0.0;
  Polyline centerline;
};

enum class LinkageCue : std::uint8_t { kSharedBoundary, kGeometricAlignment };

struct LaneLinkage {
  std::uint32_t predecessor = 0;
  std::uint32_t successor = 0;
  LinkageCue cue = LinkageCue::kSharedBoundary;

  friend bool operator==(const LaneLinkage&, const LaneLinkage&) = default;
};

struct RoadLayout {
  std::vector<LaneBoundary> boundaries;
  std::vector<RoadSection> sections;
  std::vector<Lane> lanes;
  std::vector<LaneLinkage> linkages;
};

// Chains laneline and roadedge instances whose facing endpoints are close
// and similarly directed. Stoplines are ignored. Polylines are first
// oriented along `heading`; candidate joins are accepted greedily by
// ascending endpoint gap, so the result does not depend on input order.
std::vector<LaneBoundary> build_lane_boundaries(std::span<const InstanceLine> instances,
                                                const LayoutParams& params,
                                                const Vec3& heading = Vec3::UnitX());

// Connected components (depth-first search) of the graph linking
// similarly directed, mutually overlapping boundaries. Each section lists
// its boundaries left to right with respect to `heading`. Boundary ids must
// equal their indices.
std::vector<RoadSection> group_road_sections(std::span<const LaneBoundary> boundaries,
                                             const LayoutParams& params,
                                             const Vec3& heading = Vec3::UnitX());

// True when the boundaries are similarly directed and each has at least
// one sample that projects orthogonally onto a segment of the other.
bool boundaries_connected(const LaneBoundary& a, const LaneBoundary& b,
                          const LayoutParams& params);

// Orders `ids` by the signed lateral offset (positive to the right) of each
// boundary's arclength midpoint from the axis through the midpoints' mean
// along `direction`. Ties resolve by id.
std::vector<std::uint32_t> sort_boundaries_left_to_right(std::span<const std::uint32_t> ids,
                                                         std::span<const LaneBoundary> boundaries,
                                                         const Vec3& direction);

// Lanes from (b_i, b_i+1) and (b_i, b_i+2) pairs of a left-to-right sorted
// boundary list. Boundary polylines must share the driving direction.
std::vector<Lane> generate_lanes(std::span<const std::uint32_t> sorted,
                                 std::span<const LaneBoundary> boundaries,
                                 const LayoutParams& params, std::uint32_t first_lane_id = 0);

std::vector<LaneLinkage> generate_linkages(std::span<const Lane> lanes,
                                           std::span<const LaneBoundary> boundaries,
                                           const LayoutParams& params);

// Full chain: boundaries, sections, lanes per section, linkages.
RoadLayout build_road_layout(std::span<const InstanceLine> instances, const LayoutParams& params,
                             const Vec3& heading = Vec3::UnitX());

// Layout from already-built boundaries (ids must equal their indices).
RoadLayout build_road_layout(std::vector<LaneBoundary> boundaries, const LayoutParams& params,
                             const Vec3& heading = Vec3::UnitX());

}  // namespace roadfuse
