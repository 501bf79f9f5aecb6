#include "roadfuse/polyline_fit.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

namespace roadfuse {

namespace {

constexpr double kDegenerateVariance = 1e-18;
// A group whose own principal axis strays more than 60 degrees from the
// slicing axis is too short across to orient itself.
constexpr double kMinGroupAlignment = 0.5;

Vec3 canonical_sign(const Vec3& v) {
  Eigen::Index largest = 0;
  v.cwiseAbs().maxCoeff(&largest);
  return v[largest] < 0.0 ? Vec3(-v) : v;
}

using Group = std::vector<Vec3>;

// Consecutive slices of `points` along `axis`; slices with a single point
// are folded into a neighbor so that every group can be fitted.
std::vector<Group> slice_along(std::span<const Vec3> points, const Vec3& axis,
                               double segment_length) {
  double t_min = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    t_min = std::min(t_min, p.dot(axis));
  }
  std::map<long long, Group> buckets;
  for (const auto& p : points) {
    const auto index = static_cast<long long>(std::floor((p.dot(axis) - t_min) / segment_length));
    buckets[index].push_back(p);
  }
  std::vector<Group> groups;
  groups.reserve(buckets.size());
  for (auto& [index, group] : buckets) {
    groups.push_back(std::move(group));
  }
  std::size_t i = 0;
  while (i < groups.size()) {
    if (groups[i].size() >= 2 || groups.size() == 1) {
      ++i;
      continue;
    }
    if (i > 0) {
      groups[i - 1].insert(groups[i - 1].end(), groups[i].begin(), groups[i].end());
    } else {
      groups[1].insert(groups[1].begin(), groups[0].begin(), groups[0].end());
    }
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(i));
    if (i > 0) {
      --i;
    }
  }
  return groups;
}

Polyline fit_along_axis(std::span<const Vec3> points, const Vec3& axis, double segment_length) {
  const std::vector<Group> groups = slice_along(points, axis, segment_length);
  std::vector<Vec3> starts;
  std::vector<Vec3> ends;
  for (const Group& group : groups) {
    const PrincipalAxes pa = principal_axes(group);
    Vec3 dir = pa.axes[0];
    if (pa.eigenvalues[0] <= kDegenerateVariance || std::abs(dir.dot(axis)) < kMinGroupAlignment) {
      dir = axis;
    }
    if (dir.dot(axis) < 0.0) {
      dir = -dir;
    }
    double s_min = std::numeric_limits<double>::infinity();
    double s_max = -s_min;
    for (const auto& p : group) {
      const double s = (p - pa.mean).dot(dir);
      s_min = std::min(s_min, s);
      s_max = std::max(s_max, s);
    }
    starts.push_back(pa.mean + s_min * dir);
    ends.push_back(pa.mean + s_max * dir);
  }
  Polyline line;
  line.reserve(groups.size() + 1);
  line.push_back(starts.front());
  for (std::size_t k = 0; k + 1 < groups.size(); ++k) {
    line.push_back(0.5 * (ends[k] + starts[k + 1]));
  }
  line.push_back(ends.back());
  return line;
}

Polyline fit_quadrants(std::span<const Vec3> points, const PrincipalAxes& axes,
                       double segment_length) {
  std::array<Group, 4> quadrants;
  for (const auto& p : points) {
    const Vec3 r = p - axes.mean;
    const int q = (r.dot(axes.axes[0]) >= 0.0 ? 1 : 0) + (r.dot(axes.axes[1]) >= 0.0 ? 2 : 0);
    quadrants[q].push_back(p);
  }

  struct Piece {
    double angle;
    Polyline line;
  };
  std::vector<Piece> pieces;
  for (const Group& group : quadrants) {
    if (group.empty()) {
      continue;
    }
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : group) {
      centroid += p;
    }
    centroid /= static_cast<double>(group.size());
    const Vec3 r = centroid - axes.mean;
    const double angle = std::atan2(r.dot(axes.axes[1]), r.dot(axes.axes[0]));
    if (group.size() == 1) {
      pieces.push_back({angle, {group.front()}});
      continue;
    }
    const PrincipalAxes local = principal_axes(group);
    const Vec3 axis = local.eigenvalues[0] > kDegenerateVariance ? local.axes[0] : axes.axes[0];
    pieces.push_back({angle, fit_along_axis(group, axis, segment_length)});
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& a, const Piece& b) { return a.angle < b.angle; });

  // Start the chain right after the widest angular gap.
  std::size_t start = 0;
  double widest = -1.0;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const double next = k + 1 < pieces.size() ? pieces[k + 1].angle
                                              : pieces.front().angle + 2.0 * std::numbers::pi;
    const double gap = next - pieces[k].angle;
    if (gap > widest) {
      widest = gap;
      start = (k + 1) % pieces.size();
    }
  }
  std::rotate(pieces.begin(), pieces.begin() + static_cast<std::ptrdiff_t>(start), pieces.end());

  // Orient each piece so that adjacent endpoints meet.
  if (pieces.size() > 1) {
    const Polyline& second = pieces[1].line;
    auto gap_to_second = [&](const Vec3& p) {
      return std::min((p - second.front()).norm(), (p - second.back()).norm());
    };
    Polyline& first = pieces[0].line;
    if (gap_to_second(first.front()) < gap_to_second(first.back())) {
      std::reverse(first.begin(), first.end());
    }
  }
  Polyline chained;
  for (auto& piece : pieces) {
    if (!chained.empty() &&
        (piece.line.back() - chained.back()).norm() < (piece.line.front() - chained.back()).norm()) {
      std::reverse(piece.line.begin(), piece.line.end());
    }
    for (const auto& p : piece.line) {
      if (chained.empty() || (p - chained.back()).norm() > 1e-12) {
        chained.push_back(p);
      }
    }
  }
  return chained;
}

}  // namespace

PrincipalAxes principal_axes(std::span<const Vec3> points) {
  PrincipalAxes result;
  if (points.empty()) {
    return result;
  }
  for (const auto& p : points) {
    result.mean += p;
  }
  result.mean /= static_cast<double>(points.size());
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Vec3 r = p - result.mean;
    covariance += r * r.transpose();
  }
  covariance /= static_cast<double>(points.size());
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance);
  for (int k = 0; k < 3; ++k) {
    // Eigen sorts ascending.
    result.eigenvalues[k] = std::max(0.0, solver.eigenvalues()[2 - k]);
    result.axes[k] = canonical_sign(solver.eigenvectors().col(2 - k));
  }
  return result;
}

std::optional<Polyline> estimate_polyline(std::span<const Vec3> centers,
                                          const PolylineFitParams& params) {
  if (centers.size() < 2) {
    return std::nullopt;
  }
  const PrincipalAxes axes = principal_axes(centers);
  if (axes.eigenvalues[0] <= kDegenerateVariance) {
    return std::nullopt;
  }
  Polyline line;
  if (axes.eigenvalues[1] / axes.eigenvalues[0] < params.eigen_ratio_threshold) {
    line = fit_along_axis(centers, axes.axes[0], params.segment_length_primary);
  } else {
    line = fit_quadrants(centers, axes, params.segment_length_quadrant);
  }
  if ((line.back() - line.front()).dot(axes.axes[0]) < 0.0) {
    std::reverse(line.begin(), line.end());
  }
  return line;
}

}  // namespace roadfuse
