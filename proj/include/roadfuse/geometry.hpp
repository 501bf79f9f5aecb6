#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <vector>

namespace roadfuse {

using Vec3 = Eigen::Vector3d;
using Polyline = std::vector<Vec3>;

// Rigid body-to-reference transform: p_ref = rotation * p_body + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  // Rotation about +z by `yaw` radians.
  static Pose from_yaw(double yaw, const Vec3& translation);

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  // (*this) ∘ inner, i.e. apply inner first.
  Pose compose(const Pose& inner) const;
  Pose inverse() const;
  // Heading of the body x axis in the reference xy plane.
  double yaw() const;
  bool is_valid(double tolerance = 1e-6) const;
};

double polyline_length(std::span<const Vec3> line);

// Cumulative arclength at each vertex; front() == 0.
std::vector<double> cumulative_arclength(std::span<const Vec3> line);

// Point at arclength `s` (clamped to [0, length]).
Vec3 point_at_arclength(std::span<const Vec3> line, std::span<const double> cumulative,
                        double s);

// Points at arclength 0, step, 2*step, ... plus the final endpoint.
// A single-point line yields that point.
Polyline resample_polyline(std::span<const Vec3> line, double step);

struct SegmentProjection {
  Vec3 point;
  double distance = 0.0;
  double arclength = 0.0;  // along the polyline the segment belongs to
  std::size_t segment = 0;
  Vec3 direction = Vec3::UnitX();  // unit direction of that segment
};

// Nearest orthogonal projection of `p` that falls inside some segment
// (parameter in [0, 1]). nullopt when no segment admits one.
std::optional<SegmentProjection> project_orthogonal(std::span<const Vec3> line,
                                                    std::span<const double> cumulative,
                                                    const Vec3& p);

// Nearest point on the polyline (clamped to segment ends).
SegmentProjection project_nearest(std::span<const Vec3> line,
                                  std::span<const double> cumulative, const Vec3& p);

// Unit direction of the first / last non-degenerate segment.
Vec3 start_direction(std::span<const Vec3> line);
Vec3 end_direction(std::span<const Vec3> line);

// Angle in [0, pi] between two vectors; 0 when either is zero.
double angle_between(const Vec3& a, const Vec3& b);

// Axis-aligned rectangle in the xy plane; z is unbounded.
struct Rect2 {
  double min_x = 0.0;
  double max_x = 0.0;
  double min_y = 0.0;
  double max_y = 0.0;

  bool empty() const { return !(min_x < max_x && min_y < max_y); }
  bool contains(const Vec3& p) const {
    return p.x() >= min_x && p.x() <= max_x && p.y() >= min_y && p.y() <= max_y;
  }
};

// Pieces of `line` inside `rect` (xy only), in order. Exact segment
// clipping, so piece endpoints lie on the rectangle boundary.
std::vector<Polyline> clip_polyline(std::span<const Vec3> line, const Rect2& rect);

// Rectangle expressed in the local frame of `frame` (frame maps local to
// the enclosing frame). Used for vehicle-centered windows.
struct OrientedRect {
  Pose frame;
  Rect2 local;

  bool contains(const Vec3& p) const { return local.contains(frame.inverse().apply(p)); }
  // Separating-axis test against an axis-aligned square in the enclosing
  // frame's xy plane.
  bool intersects_square(double min_x, double min_y, double side) const;
};

}  // namespace roadfuse
