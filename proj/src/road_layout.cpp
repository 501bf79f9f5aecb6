#include "roadfuse/road_layout.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <optional>
#include <tuple>

namespace roadfuse {

namespace {

Vec3 planar(const Vec3& v) {
  Vec3 out(v.x(), v.y(), 0.0);
  const double n = out.norm();
  return n > 0.0 ? Vec3(out / n) : Vec3::UnitX();
}

// Right-hand normal of a planar direction.
Vec3 right_of(const Vec3& d) { return Vec3(d.y(), -d.x(), 0.0); }

Vec3 overall_direction(const Polyline& line) {
  if (line.size() < 2) {
    return Vec3::UnitX();
  }
  return planar(line.back() - line.front());
}

double undirected_angle(const Vec3& a, const Vec3& b) {
  const double angle = angle_between(a, b);
  return std::min(angle, std::numbers::pi - angle);
}

void orient_along(Polyline& line, const Vec3& heading) {
  if (line.size() >= 2 && (line.back() - line.front()).dot(heading) < 0.0) {
    std::reverse(line.begin(), line.end());
  }
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return false;
    }
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

bool any_projects_onto(const Polyline& from, const Polyline& onto, double step) {
  const auto cumulative = cumulative_arclength(onto);
  for (const Vec3& p : resample_polyline(from, step)) {
    if (project_orthogonal(onto, cumulative, p)) {
      return true;
    }
  }
  return false;
}

struct WidthSample {
  bool valid = false;
  double width = 0.0;
  double left_arclength = 0.0;
  double own_arclength = 0.0;
  Vec3 point;
  Vec3 foot;
};

// Longest run [begin, end) of valid samples whose widths stay within the
// interval and the variation bound. Ties go to the earliest run.
std::pair<std::size_t, std::size_t> longest_window(const std::vector<WidthSample>& samples,
                                                   std::size_t lo, std::size_t hi,
                                                   const LayoutParams& params) {
  std::pair<std::size_t, std::size_t> best{lo, lo};
  double best_length = -1.0;
  std::deque<std::size_t> max_q;
  std::deque<std::size_t> min_q;
  std::size_t begin = lo;
  for (std::size_t end = lo; end < hi; ++end) {
    const WidthSample& s = samples[end];
    if (!s.valid || s.width < params.width_min || s.width > params.width_max) {
      max_q.clear();
      min_q.clear();
      begin = end + 1;
      continue;
    }
    while (!max_q.empty() && samples[max_q.back()].width <= s.width) {
      max_q.pop_back();
    }
    max_q.push_back(end);
    while (!min_q.empty() && samples[min_q.back()].width >= s.width) {
      min_q.pop_back();
    }
    min_q.push_back(end);
    while (samples[max_q.front()].width - samples[min_q.front()].width >
           params.width_variation_max) {
      ++begin;
      if (max_q.front() < begin) {
        max_q.pop_front();
      }
      if (min_q.front() < begin) {
        min_q.pop_front();
      }
    }
    const double length = samples[end].own_arclength - samples[begin].own_arclength;
    if (length > best_length) {
      best_length = length;
      best = {begin, end + 1};
    }
  }
  return best;
}

void collect_windows(const std::vector<WidthSample>& samples, std::size_t lo, std::size_t hi,
                     const LayoutParams& params,
                     std::vector<std::pair<std::size_t, std::size_t>>& out) {
  if (hi <= lo) {
    return;
  }
  const auto [begin, end] = longest_window(samples, lo, hi, params);
  if (end <= begin) {
    return;
  }
  const double length = samples[end - 1].own_arclength - samples[begin].own_arclength;
  if (length < params.min_lane_length) {
    return;
  }
  out.emplace_back(begin, end);
  collect_windows(samples, lo, begin, params, out);
  collect_windows(samples, end, hi, params, out);
}

std::vector<WidthSample> width_samples(const LaneBoundary& left, const LaneBoundary& right,
                                       const LayoutParams& params) {
  const auto left_cumulative = cumulative_arclength(left.polyline);
  const Polyline points = resample_polyline(right.polyline, params.width_sample_step);
  const auto own = cumulative_arclength(points);
  std::vector<WidthSample> samples(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    WidthSample& s = samples[k];
    s.point = points[k];
    s.own_arclength = own[k];
    const auto proj = project_orthogonal(left.polyline, left_cumulative, points[k]);
    if (!proj) {
      continue;
    }
    const double side = (points[k] - proj->point).dot(right_of(planar(proj->direction)));
    if (side <= 0.0) {
      continue;
    }
    s.valid = true;
    s.width = proj->distance;
    s.left_arclength = proj->arclength;
    s.foot = proj->point;
  }
  return samples;
}

struct LaneEnds {
  SegmentProjection start;
  SegmentProjection end;
};

LaneEnds ends_on(const Lane& lane, const Polyline& boundary) {
  const auto cumulative = cumulative_arclength(boundary);
  return {project_nearest(boundary, cumulative, lane.centerline.front()),
          project_nearest(boundary, cumulative, lane.centerline.back())};
}

bool shared_boundary_successor(const Lane& a, const Lane& b, const Polyline& boundary,
                               const LayoutParams& params) {
  const LaneEnds ea = ends_on(a, boundary);
  const LaneEnds eb = ends_on(b, boundary);
  if (!(ea.start.arclength < eb.start.arclength && ea.end.arclength < eb.end.arclength)) {
    return false;
  }
  // Longitudinal gap along the boundary where a ends.
  const double gap = (eb.start.point - ea.end.point).dot(planar(ea.end.direction));
  return std::abs(gap) <= params.linkage_gap_max;
}

bool aligned_successor(const Lane& a, const Lane& b, const LayoutParams& params) {
  const Vec3 a_end = a.centerline.back();
  const Vec3 b_start = b.centerline.front();
  if ((b_start - a_end).norm() > params.linkage_gap_max) {
    return false;
  }
  const Vec3 heading = end_direction(a.centerline);
  if (angle_between(heading, start_direction(b.centerline)) > params.linkage_angle_max) {
    return false;
  }
  return (b_start - a_end).dot(heading) >= 0.0 && (b.centerline.back() - a_end).dot(heading) > 0.0;
}

}  // namespace

std::vector<LaneBoundary> build_lane_boundaries(std::span<const InstanceLine> instances,
                                                const LayoutParams& params, const Vec3& heading) {
  std::vector<InstanceLine> lines;
  for (const InstanceLine& line : instances) {
    if (line.type == MarkingType::kStopline || line.polyline.size() < 2) {
      continue;
    }
    lines.push_back(line);
    orient_along(lines.back().polyline, heading);
  }
  std::sort(lines.begin(), lines.end(),
            [](const InstanceLine& a, const InstanceLine& b) { return a.id < b.id; });

  struct Join {
    double distance;
    std::size_t from;
    std::size_t to;
  };
  std::vector<Join> joins;
  for (std::size_t a = 0; a < lines.size(); ++a) {
    for (std::size_t b = 0; b < lines.size(); ++b) {
      if (a == b || lines[a].type != lines[b].type) {
        continue;
      }
      const Polyline& pa = lines[a].polyline;
      const Polyline& pb = lines[b].polyline;
      const double distance = (pb.front() - pa.back()).norm();
      if (distance > params.endpoint_dist_max) {
        continue;
      }
      const Vec3 dir = end_direction(pa);
      if (angle_between(dir, start_direction(pb)) > params.endpoint_angle_max) {
        continue;
      }
      if ((pb.back() - pa.back()).dot(dir) <= 0.0) {
        continue;
      }
      joins.push_back({distance, a, b});
    }
  }
  std::sort(joins.begin(), joins.end(), [](const Join& x, const Join& y) {
    return std::tie(x.distance, x.from, x.to) < std::tie(y.distance, y.from, y.to);
  });

  std::vector<std::optional<std::size_t>> next(lines.size());
  std::vector<bool> has_prev(lines.size(), false);
  UnionFind chains(lines.size());
  for (const Join& join : joins) {
    if (next[join.from] || has_prev[join.to] || chains.find(join.from) == chains.find(join.to)) {
      continue;
    }
    chains.unite(join.from, join.to);
    next[join.from] = join.to;
    has_prev[join.to] = true;
  }

  std::vector<LaneBoundary> boundaries;
  for (std::size_t head = 0; head < lines.size(); ++head) {
    if (has_prev[head]) {
      continue;
    }
    LaneBoundary boundary;
    boundary.id = static_cast<std::uint32_t>(boundaries.size());
    boundary.kind = lines[head].type;
    for (std::optional<std::size_t> k = head; k; k = next[*k]) {
      boundary.sources.push_back(lines[*k].id);
      for (const Vec3& p : lines[*k].polyline) {
        if (boundary.polyline.empty() || (p - boundary.polyline.back()).norm() > 1e-9) {
          boundary.polyline.push_back(p);
        }
      }
    }
    if (boundary.polyline.size() >= 2) {
      boundaries.push_back(std::move(boundary));
    }
  }
  return boundaries;
}

bool boundaries_connected(const LaneBoundary& a, const LaneBoundary& b,
                          const LayoutParams& params) {
  if (a.polyline.size() < 2 || b.polyline.size() < 2) {
    return false;
  }
  if (undirected_angle(overall_direction(a.polyline), overall_direction(b.polyline)) >
      params.section_angle_max) {
    return false;
  }
  return any_projects_onto(a.polyline, b.polyline, params.overlap_sample_step) &&
         any_projects_onto(b.polyline, a.polyline, params.overlap_sample_step);
}

std::vector<RoadSection> group_road_sections(std::span<const LaneBoundary> boundaries,
                                             const LayoutParams& params, const Vec3& heading) {
  const std::size_t n = boundaries.size();
  std::vector<std::vector<std::size_t>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (boundaries_connected(boundaries[i], boundaries[j], params)) {
        adjacency[i].push_back(j);
        adjacency[j].push_back(i);
      }
    }
  }

  std::vector<RoadSection> sections;
  std::vector<bool> visited(n, false);
  for (std::size_t root = 0; root < n; ++root) {
    if (visited[root]) {
      continue;
    }
    std::vector<std::uint32_t> members;
    std::vector<std::size_t> stack{root};
    visited[root] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      members.push_back(boundaries[v].id);
      for (auto it = adjacency[v].rbegin(); it != adjacency[v].rend(); ++it) {
        if (!visited[*it]) {
          visited[*it] = true;
          stack.push_back(*it);
        }
      }
    }
    std::sort(members.begin(), members.end());

    const Vec3 h = planar(heading);
    Vec3 sum = Vec3::Zero();
    for (const std::uint32_t id : members) {
      Vec3 d = overall_direction(boundaries[id].polyline);
      if (d.dot(h) < 0.0) {
        d = -d;
      }
      sum += d;
    }
    RoadSection section;
    section.id = static_cast<std::uint32_t>(sections.size());
    section.direction = sum.norm() > 0.0 ? planar(sum) : h;
    section.boundaries = sort_boundaries_left_to_right(members, boundaries, section.direction);
    sections.push_back(std::move(section));
  }
  return sections;
}

std::vector<std::uint32_t> sort_boundaries_left_to_right(std::span<const std::uint32_t> ids,
                                                         std::span<const LaneBoundary> boundaries,
                                                         const Vec3& direction) {
  if (ids.empty()) {
    return {};
  }
  std::vector<Vec3> mids;
  Vec3 mean = Vec3::Zero();
  for (const std::uint32_t id : ids) {
    const Polyline& line = boundaries[id].polyline;
    const auto cumulative = cumulative_arclength(line);
    mids.push_back(point_at_arclength(line, cumulative, 0.5 * cumulative.back()));
    mean += mids.back();
  }
  mean /= static_cast<double>(ids.size());
  const Vec3 right = right_of(planar(direction));
  std::vector<std::pair<double, std::uint32_t>> keyed;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    keyed.emplace_back((mids[k] - mean).dot(right), ids[k]);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint32_t> sorted;
  for (const auto& [offset, id] : keyed) {
    sorted.push_back(id);
  }
  return sorted;
}

std::vector<Lane> generate_lanes(std::span<const std::uint32_t> sorted,
                                 std::span<const LaneBoundary> boundaries,
                                 const LayoutParams& params, std::uint32_t first_lane_id) {
  std::vector<Lane> lanes;
  std::uint32_t next_id = first_lane_id;
  for (std::size_t skip = 1; skip <= 2; ++skip) {
    for (std::size_t i = 0; i + skip < sorted.size(); ++i) {
      const LaneBoundary& left = boundaries[sorted[i]];
      const LaneBoundary& right = boundaries[sorted[i + skip]];
      std::vector<WidthSample> samples = width_samples(left, right, params);
      if (skip == 2) {
        for (const Lane& lane : lanes) {
          if (lane.left != left.id) {
            continue;
          }
          for (WidthSample& s : samples) {
            if (s.valid && s.left_arclength >= lane.range_begin &&
                s.left_arclength <= lane.range_end) {
              s.valid = false;
            }
          }
        }
      }
      std::vector<std::pair<std::size_t, std::size_t>> windows;
      collect_windows(samples, 0, samples.size(), params, windows);
      std::sort(windows.begin(), windows.end());
      for (const auto& [begin, end] : windows) {
        Lane lane;
        lane.id = next_id++;
        lane.left = left.id;
        lane.right = right.id;
        lane.range_begin = samples[begin].left_arclength;
        lane.range_end = samples[begin].left_arclength;
        for (std::size_t k = begin; k < end; ++k) {
          lane.range_begin = std::min(lane.range_begin, samples[k].left_arclength);
          lane.range_end = std::max(lane.range_end, samples[k].left_arclength);
          lane.centerline.push_back(0.5 * (samples[k].point + samples[k].foot));
        }
        lanes.push_back(std::move(lane));
      }
    }
  }
  return lanes;
}

std::vector<LaneLinkage> generate_linkages(std::span<const Lane> lanes,
                                           std::span<const LaneBoundary> boundaries,
                                           const LayoutParams& params) {
  std::vector<LaneLinkage> linkages;
  for (const Lane& a : lanes) {
    for (const Lane& b : lanes) {
      if (a.id == b.id || a.centerline.size() < 2 || b.centerline.size() < 2) {
        continue;
      }
      std::optional<LinkageCue> cue;
      for (const auto& [sa, sb] : {std::pair{a.left, b.left}, std::pair{a.right, b.right}}) {
        if (sa == sb && shared_boundary_successor(a, b, boundaries[sa].polyline, params)) {
          cue = LinkageCue::kSharedBoundary;
          break;
        }
      }
      if (!cue && aligned_successor(a, b, params)) {
        cue = LinkageCue::kGeometricAlignment;
      }
      if (cue) {
        linkages.push_back({a.id, b.id, *cue});
      }
    }
  }
  std::sort(linkages.begin(), linkages.end(), [](const LaneLinkage& x, const LaneLinkage& y) {
    return std::tie(x.predecessor, x.successor) < std::tie(y.predecessor, y.successor);
  });
  return linkages;
}

RoadLayout build_road_layout(std::vector<LaneBoundary> boundaries, const LayoutParams& params,
                             const Vec3& heading) {
  RoadLayout layout;
  for (LaneBoundary& boundary : boundaries) {
    orient_along(boundary.polyline, planar(heading));
  }
  layout.boundaries = std::move(boundaries);
  layout.sections = group_road_sections(layout.boundaries, params, heading);
  for (const RoadSection& section : layout.sections) {
    auto lanes = generate_lanes(section.boundaries, layout.boundaries, params,
                                static_cast<std::uint32_t>(layout.lanes.size()));
    layout.lanes.insert(layout.lanes.end(), std::make_move_iterator(lanes.begin()),
                        std::make_move_iterator(lanes.end()));
  }
  layout.linkages = generate_linkages(layout.lanes, layout.boundaries, params);
  return layout;
}

RoadLayout build_road_layout(std::span<const InstanceLine> instances, const LayoutParams& params,
                             const Vec3& heading) {
  return build_road_layout(build_lane_boundaries(instances, params, heading), params, heading);
}

}  // namespace roadfuse
