#pragma once

#include <array>
#include <optional>
#include <span>

#include "roadfuse/geometry.hpp"

namespace roadfuse {

struct PolylineFitParams {
  // lambda2 / lambda1 below this takes the single-axis path.
  double eigen_ratio_threshold = 0.1;
  double segment_length_primary = 5.0;
  double segment_length_quadrant = 2.0;
};

struct PrincipalAxes {
  Vec3 mean = Vec3::Zero();
  // Descending eigenvalues of the population covariance and their unit
  // eigenvectors. Each axis is signed so its largest-magnitude component
  // is positive.
  std::array<double, 3> eigenvalues{};
  std::array<Vec3, 3> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
};

PrincipalAxes principal_axes(std::span<const Vec3> points);

// Groups the centers along the principal components and connects one
// total-least-squares line per group. nullopt when fewer than two distinct
// centers exist.
//
// Elongated clouds (lambda2 / lambda1 < threshold) are cut into
// segment_length_primary slices along PC1. Otherwise the cloud is split
// into the four (PC1, PC2) quadrants about the mean, each sliced along its
// own principal axis with segment_length_quadrant, and the quadrant pieces
// are chained in angular order starting after the widest angular gap.
std::optional<Polyline> estimate_polyline(std::span<const Vec3> centers,
                                          const PolylineFitParams& params);

}  // namespace roadfuse
