#include "roadfuse/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace roadfuse {

namespace {
constexpr double kDegenerateLength = 1e-12;
}  // namespace

Pose Pose::from_yaw(double yaw, const Vec3& translation) {
  Pose pose;
  pose.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  pose.translation = translation;
  return pose;
}

Pose Pose::compose(const Pose& inner) const {
  Pose out;
  out.rotation = rotation * inner.rotation;
  out.translation = rotation * inner.translation + translation;
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

double Pose::yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

bool Pose::is_valid(double tolerance) const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    return false;
  }
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tolerance) {
    return false;
  }
  return std::abs(rotation.determinant() - 1.0) <= tolerance;
}

double polyline_length(std::span<const Vec3> line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    total += (line[i] - line[i - 1]).norm();
  }
  return total;
}

std::vector<double> cumulative_arclength(std::span<const Vec3> line) {
  std::vector<double> s(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) {
    s[i] = s[i - 1] + (line[i] - line[i - 1]).norm();
  }
  return s;
}

Vec3 point_at_arclength(std::span<const Vec3> line, std::span<const double> cumulative,
                        double s) {
  if (line.empty()) {
    return Vec3::Zero();
  }
  if (line.size() == 1 || s <= 0.0) {
    return line.front();
  }
  if (s >= cumulative.back()) {
    return line.back();
  }
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
  const std::size_t hi = static_cast<std::size_t>(it - cumulative.begin());
  const std::size_t lo = hi - 1;
  const double span = cumulative[hi] - cumulative[lo];
  if (span <= kDegenerateLength) {
    return line[lo];
  }
  const double t = (s - cumulative[lo]) / span;
  return line[lo] + t * (line[hi] - line[lo]);
}

Polyline resample_polyline(std::span<const Vec3> line, double step) {
  Polyline out;
  if (line.empty()) {
    return out;
  }
  const auto cumulative = cumulative_arclength(line);
  const double length = cumulative.back();
  const auto count = static_cast<std::size_t>(std::floor(length / step + 1e-9));
  out.reserve(count + 2);
  for (std::size_t k = 0; k <= count; ++k) {
    out.push_back(point_at_arclength(line, cumulative, static_cast<double>(k) * step));
  }
  // The final endpoint, unless the last sample already sits on it.
  if (length - static_cast<double>(count) * step > 1e-9) {
    out.push_back(line.back());
  }
  return out;
}

std::optional<SegmentProjection> project_orthogonal(std::span<const Vec3> line,
                                                    std::span<const double> cumulative,
                                                    const Vec3& p) {
  std::optional<SegmentProjection> best;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec3 d = line[i + 1] - line[i];
    const double len2 = d.squaredNorm();
    if (len2 <= kDegenerateLength) {
      continue;
    }
    const double t = (p - line[i]).dot(d) / len2;
    if (t < 0.0 || t > 1.0) {
      continue;
    }
    const Vec3 q = line[i] + t * d;
    const double dist = (p - q).norm();
    if (!best || dist < best->distance) {
      const double len = std::sqrt(len2);
      best = SegmentProjection{q, dist, cumulative[i] + t * len, i, d / len};
    }
  }
  return best;
}

SegmentProjection project_nearest(std::span<const Vec3> line,
                                  std::span<const double> cumulative, const Vec3& p) {
  SegmentProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  if (line.size() == 1) {
    best.point = line.front();
    best.distance = (p - line.front()).norm();
    return best;
  }
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec3 d = line[i + 1] - line[i];
    const double len2 = d.squaredNorm();
    if (len2 <= kDegenerateLength) {
      continue;
    }
    const double t = std::clamp((p - line[i]).dot(d) / len2, 0.0, 1.0);
    const Vec3 q = line[i] + t * d;
    const double dist = (p - q).norm();
    if (dist < best.distance) {
      const double len = std::sqrt(len2);
      best = SegmentProjection{q, dist, cumulative[i] + t * len, i, d / len};
    }
  }
  if (!std::isfinite(best.distance) && !line.empty()) {
    best.point = line.front();
    best.distance = (p - line.front()).norm();
  }
  return best;
}

Vec3 start_direction(std::span<const Vec3> line) {
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec3 d = line[i] - line[0];
    if (d.norm() > kDegenerateLength) {
      return d.normalized();
    }
  }
  return Vec3::Zero();
}

Vec3 end_direction(std::span<const Vec3> line) {
  for (std::size_t i = line.size(); i-- > 1;) {
    const Vec3 d = line.back() - line[i - 1];
    if (d.norm() > kDegenerateLength) {
      return d.normalized();
    }
  }
  return Vec3::Zero();
}

double angle_between(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= kDegenerateLength || nb <= kDegenerateLength) {
    return 0.0;
  }
  // atan2 form stays accurate near 0 and pi.
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

std::vector<Polyline> clip_polyline(std::span<const Vec3> line, const Rect2& rect) {
  std::vector<Polyline> pieces;
  if (line.empty() || rect.empty()) {
    return pieces;
  }
  if (line.size() == 1) {
    if (rect.contains(line.front())) {
      pieces.push_back({line.front()});
    }
    return pieces;
  }
  Polyline current;
  auto flush = [&]() {
    if (!current.empty()) {
      pieces.push_back(std::move(current));
      current.clear();
    }
  };
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec3& a = line[i];
    const Vec3& b = line[i + 1];
    const Vec3 d = b - a;
    // Liang-Barsky on the xy projection.
    double t0 = 0.0;
    double t1 = 1.0;
    bool visible = true;
    const std::array<double, 4> p = {-d.x(), d.x(), -d.y(), d.y()};
    const std::array<double, 4> q = {a.x() - rect.min_x, rect.max_x - a.x(),
                                     a.y() - rect.min_y, rect.max_y - a.y()};
    for (int k = 0; k < 4 && visible; ++k) {
      if (p[k] == 0.0) {
        if (q[k] < 0.0) {
          visible = false;
        }
        continue;
      }
      const double r = q[k] / p[k];
      if (p[k] < 0.0) {
        t0 = std::max(t0, r);
      } else {
        t1 = std::min(t1, r);
      }
      if (t0 > t1) {
        visible = false;
      }
    }
    if (!visible) {
      flush();
      continue;
    }
    const Vec3 enter = t0 <= 0.0 ? a : Vec3(a + t0 * d);
    const Vec3 exit = t1 >= 1.0 ? b : Vec3(a + t1 * d);
    if (current.empty() || t0 > 0.0) {
      flush();
      current.push_back(enter);
    }
    if ((exit - current.back()).norm() > kDegenerateLength) {
      current.push_back(exit);
    }
    if (t1 < 1.0) {
      flush();
    }
  }
  flush();
  return pieces;
}

bool OrientedRect::intersects_square(double min_x, double min_y, double side) const {
  if (local.empty()) {
    return false;
  }
  const Eigen::Vector2d ux(frame.rotation(0, 0), frame.rotation(1, 0));
  const Eigen::Vector2d uy(frame.rotation(0, 1), frame.rotation(1, 1));
  const Eigen::Vector2d origin(frame.translation.x(), frame.translation.y());
  const std::array<Eigen::Vector2d, 4> rect_corners = {
      origin + local.min_x * ux + local.min_y * uy, origin + local.max_x * ux + local.min_y * uy,
      origin + local.max_x * ux + local.max_y * uy, origin + local.min_x * ux + local.max_y * uy};
  const std::array<Eigen::Vector2d, 4> square_corners = {
      Eigen::Vector2d(min_x, min_y), Eigen::Vector2d(min_x + side, min_y),
      Eigen::Vector2d(min_x + side, min_y + side), Eigen::Vector2d(min_x, min_y + side)};
  const std::array<Eigen::Vector2d, 4> axes = {Eigen::Vector2d::UnitX(), Eigen::Vector2d::UnitY(),
                                               ux, uy};
  for (const auto& axis : axes) {
    double a_min = std::numeric_limits<double>::infinity();
    double a_max = -a_min;
    double b_min = a_min;
    double b_max = -a_min;
    for (const auto& c : rect_corners) {
      const double v = c.dot(axis);
      a_min = std::min(a_min, v);
      a_max = std::max(a_max, v);
    }
    for (const auto& c : square_corners) {
      const double v = c.dot(axis);
      b_min = std::min(b_min, v);
      b_max = std::max(b_max, v);
    }
    if (a_max < b_min || b_max < a_min) {
      return false;
    }
  }
  return true;
}

}  // namespace roadfuse
