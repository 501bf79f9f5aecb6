#include "roadfuse/sim.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "roadfuse/detection.hpp"

namespace roadfuse {

namespace {

constexpr double kRoadStart = -30.0;
constexpr double kVertexSpacing = 1.0;
constexpr double kCurveLeadIn = 20.0;
constexpr double kSplitTaper = 20.0;
constexpr double kIntersectionGap = 25.0;
constexpr double kCrossRoadReach = 30.0;
constexpr double kMinPieceLength = 0.5;

// Centerline of the road: straight along +x, or a straight lead-in followed
// by a constant-curvature arc.
struct ReferencePath {
  double curvature = 0.0;

  double heading(double s) const {
    return curvature == 0.0 || s <= kCurveLeadIn ? 0.0 : curvature * (s - kCurveLeadIn);
  }
  Vec3 point(double s, double offset) const {
    Vec3 base;
    if (curvature == 0.0 || s <= kCurveLeadIn) {
      base = Vec3(s, 0.0, 0.0);
    } else {
      const double th = heading(s);
      base = Vec3(kCurveLeadIn + std::sin(th) / curvature, (1.0 - std::cos(th)) / curvature, 0.0);
    }
    const double th = heading(s);
    return base + offset * Vec3(-std::sin(th), std::cos(th), 0.0);
  }
};

using OffsetFn = std::function<double(double)>;

OffsetFn constant(double d) {
  return [d](double) { return d; };
}

// d0 before s0, d1 after s0 + taper, linear in between.
OffsetFn ramp(double d0, double d1, double s0, double taper) {
  return [=](double s) {
    if (s <= s0) {
      return d0;
    }
    if (s >= s0 + taper) {
      return d1;
    }
    return d0 + (d1 - d0) * (s - s0) / taper;
  };
}

Polyline trace(const ReferencePath& path, const OffsetFn& offset, double s_a, double s_b,
               std::vector<double> breaks = {}) {
  std::vector<double> stations;
  for (double s = s_a; s < s_b - 1e-9; s += kVertexSpacing) {
    stations.push_back(s);
  }
  stations.push_back(s_b);
  for (const double b : breaks) {
    if (b > s_a && b < s_b) {
      stations.push_back(b);
    }
  }
  std::sort(stations.begin(), stations.end());
  Polyline line;
  for (const double s : stations) {
    const Vec3 p = path.point(s, offset(s));
    if (line.empty() || (p - line.back()).norm() > 1e-6) {
      line.push_back(p);
    }
  }
  return line;
}

// Straight segment across the road at station s, between two offsets.
Polyline across(const ReferencePath& path, double s, double d_from, double d_to) {
  Polyline line;
  const int steps = static_cast<int>(std::ceil(std::abs(d_to - d_from) / kVertexSpacing));
  for (int k = 0; k <= steps; ++k) {
    line.push_back(path.point(s, d_from + (d_to - d_from) * k / steps));
  }
  return line;
}

struct Builder {
  ReferencePath path;
  GtMap gt;

  std::uint32_t line(MarkingType type, Polyline points) {
    const auto id = static_cast<std::uint32_t>(gt.lines.size());
    gt.lines.push_back({id, type, std::move(points)});
    return id;
  }
  void lane(std::uint32_t left, std::uint32_t right, const OffsetFn& fl, const OffsetFn& fr,
            double s_a, double s_b, std::vector<double> breaks = {}) {
    const auto mid = [&](double s) { return 0.5 * (fl(s) + fr(s)); };
    gt.lanes.push_back({static_cast<std::uint32_t>(gt.lanes.size()), left, right,
                        trace(path, mid, s_a, s_b, std::move(breaks))});
  }
};

void validate(const ScenarioSpec& spec) {
  if (spec.lanes < 1 || spec.lanes > 6) {
    throw ConfigError("lanes must be in [1, 6]");
  }
  if (!(spec.lane_width >= 2.5 && spec.lane_width <= 4.5)) {
    throw ConfigError("lane_width must be in [2.5, 4.5]");
  }
  if (!(spec.length >= 60.0)) {
    throw ConfigError("length must be at least 60 m");
  }
  if (!(spec.speed > 0.0) || !(spec.rate_hz > 0.0)) {
    throw ConfigError("speed and rate_hz must be positive");
  }
  if (spec.kind == ScenarioKind::kCurve) {
    if (spec.curvature == 0.0 ||
        1.0 / std::abs(spec.curvature) <= spec.lanes * spec.lane_width) {
      throw ConfigError("curve needs a nonzero curvature with radius above the road width");
    }
  }
}

Polyline even_vertices(const Polyline& line, double max_spacing) {
  const auto cumulative = cumulative_arclength(line);
  const double length = cumulative.back();
  const auto segments = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / max_spacing)));
  Polyline out;
  for (std::size_t k = 0; k <= segments; ++k) {
    out.push_back(point_at_arclength(line, cumulative, length * static_cast<double>(k) / segments));
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kStraight:
      return "straight";
    case ScenarioKind::kCurve:
      return "curve";
    case ScenarioKind::kMerge:
      return "merge";
    case ScenarioKind::kSplit:
      return "split";
    case ScenarioKind::kIntersection:
      return "intersection";
  }
  return "straight";
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) {
  for (const ScenarioKind kind : {ScenarioKind::kStraight, ScenarioKind::kCurve,
                                  ScenarioKind::kMerge, ScenarioKind::kSplit,
                                  ScenarioKind::kIntersection}) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  return std::nullopt;
}

std::vector<TypedLine> GtMap::typed_lines() const {
  std::vector<TypedLine> out;
  out.reserve(lines.size());
  for (const GtLine& line : lines) {
    out.push_back({line.type, line.points});
  }
  return out;
}

Scenario build_scenario(const ScenarioSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  Builder b;
  b.path.curvature = spec.kind == ScenarioKind::kCurve ? spec.curvature : 0.0;
  const int n = spec.lanes;
  const double w = spec.lane_width;
  const double end = spec.length;
  std::vector<double> d(n + 1);
  for (int j = 0; j <= n; ++j) {
    d[j] = (0.5 * n - j) * w;
  }
  auto kind_of = [n](int j) {
    return j == 0 || j == n ? MarkingType::kRoadedge : MarkingType::kLaneline;
  };

  switch (spec.kind) {
    case ScenarioKind::kStraight:
    case ScenarioKind::kCurve: {
      std::vector<std::uint32_t> ids;
      for (int j = 0; j <= n; ++j) {
        ids.push_back(b.line(kind_of(j), trace(b.path, constant(d[j]), kRoadStart, end)));
      }
      for (int k = 0; k < n; ++k) {
        b.lane(ids[k], ids[k + 1], constant(d[k]), constant(d[k + 1]), kRoadStart, end);
      }
      break;
    }
    case ScenarioKind::kSplit:
    case ScenarioKind::kMerge: {
      const double s0 = 0.4 * end + std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
      const double s1 = s0 + kSplitTaper;
      const bool split = spec.kind == ScenarioKind::kSplit;
      const OffsetFn edge =
          split ? ramp(d[n], d[n] - w, s0, kSplitTaper) : ramp(d[n] - w, d[n], s0, kSplitTaper);
      std::vector<std::uint32_t> ids;
      for (int j = 0; j < n; ++j) {
        ids.push_back(b.line(kind_of(j), trace(b.path, constant(d[j]), kRoadStart, end)));
      }
      const std::uint32_t edge_id =
          b.line(MarkingType::kRoadedge, trace(b.path, edge, kRoadStart, end, {s0, s1}));
      const std::uint32_t extra_id =
          split ? b.line(MarkingType::kLaneline, trace(b.path, constant(d[n]), s1, end))
                : b.line(MarkingType::kLaneline, trace(b.path, constant(d[n]), kRoadStart, s0));
      for (int k = 0; k + 1 < n; ++k) {
        b.lane(ids[k], ids[k + 1], constant(d[k]), constant(d[k + 1]), kRoadStart, end);
      }
      const OffsetFn last = constant(d[n - 1]);
      if (split) {
        b.lane(ids[n - 1], edge_id, last, edge, kRoadStart, s0);
        b.lane(ids[n - 1], extra_id, last, constant(d[n]), s1, end);
        b.lane(extra_id, edge_id, constant(d[n]), edge, s1, end);
      } else {
        b.lane(ids[n - 1], extra_id, last, constant(d[n]), kRoadStart, s0);
        b.lane(extra_id, edge_id, constant(d[n]), edge, kRoadStart, s0);
        b.lane(ids[n - 1], edge_id, last, edge, s1, end);
      }
      break;
    }
    case ScenarioKind::kIntersection: {
      const double s_a = 0.5 * end + std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
      const double s_b = s_a + kIntersectionGap;
      for (const auto& [from, to] : {std::pair{kRoadStart, s_a}, std::pair{s_b, end}}) {
        std::vector<std::uint32_t> ids;
        for (int j = 0; j <= n; ++j) {
          ids.push_back(b.line(kind_of(j), trace(b.path, constant(d[j]), from, to)));
        }
        for (int k = 0; k < n; ++k) {
          b.lane(ids[k], ids[k + 1], constant(d[k]), constant(d[k + 1]), from, to);
        }
      }
      b.line(MarkingType::kStopline, across(b.path, s_a - 1.0, d[0], d[n]));
      for (const double s : {s_a + 2.5, s_b - 2.5}) {
        b.line(MarkingType::kRoadedge, across(b.path, s, d[0], d[0] + kCrossRoadReach));
        b.line(MarkingType::kRoadedge, across(b.path, s, d[n], d[n] - kCrossRoadReach));
      }
      break;
    }
  }

  Scenario scenario;
  scenario.spec = spec;
  scenario.gt = std::move(b.gt);
  const int ego = (n - 1) / 2;
  const double ego_offset = 0.5 * (d[ego] + d[ego + 1]);
  const double step = spec.speed / spec.rate_hz;
  std::size_t frames = spec.frames;
  if (frames == 0) {
    frames = static_cast<std::size_t>(std::floor((end - 50.0) / step)) + 1;
  } else if (static_cast<double>(frames - 1) * step > end) {
    throw ConfigError("trajectory of " + std::to_string(frames) + " frames runs off the road");
  }
  for (std::size_t k = 0; k < frames; ++k) {
    const double s = static_cast<double>(k) * step;
    scenario.trajectory.push_back(Pose::from_yaw(
        b.path.heading(s), b.path.point(s, ego_offset) + Vec3(0.0, 0.0, spec.body_height)));
    scenario.timestamps.push_back(static_cast<double>(k) / spec.rate_hz);
  }
  return scenario;
}

void validate(const NoiseSpec& noise) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(noise.dropout) || !unit(noise.outlier_rate)) {
    throw ConfigError("dropout and outlier_rate must be in [0, 1]");
  }
  if (!(noise.jitter_sigma >= 0.0) || !(noise.fragment_length >= 0.0) ||
      !(noise.vertex_spacing >= 0.0)) {
    throw ConfigError("jitter_sigma, vertex_spacing and fragment_length must be nonnegative");
  }
  if (!unit(noise.confidence_min) || !unit(noise.confidence_max) ||
      noise.confidence_min > noise.confidence_max || !unit(noise.outlier_confidence_min) ||
      !unit(noise.outlier_confidence_max) ||
      noise.outlier_confidence_min > noise.outlier_confidence_max) {
    throw ConfigError("confidence bounds must satisfy 0 <= min <= max <= 1");
  }
  if (!noise.range.valid()) {
    throw ConfigError("detection range must have min < max on both axes");
  }
}

std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t frame) {
  return splitmix64(splitmix64(seed) ^ frame);
}

FrameInput render_frame(const GtMap& gt, const Pose& pose, const NoiseSpec& noise,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, noise.jitter_sigma > 0.0 ? noise.jitter_sigma : 1.0);
  auto draw = [&](double lo, double hi) { return lo < hi ? lo + (hi - lo) * unit(rng) : lo; };

  FrameInput frame;
  frame.pose = pose;
  const Pose to_body = pose.inverse();
  const Rect2 range = noise.range.rect();

  auto emit = [&](Polyline points, MarkingType type, double confidence) {
    RawDetection detection{std::move(points), confidence, type};
    if (sanitize_detection(detection)) {
      frame.detections.push_back(std::move(detection));
    }
  };

  for (const GtLine& line : gt.lines) {
    Polyline body;
    for (const Vec3& p : line.points) {
      body.push_back(to_body.apply(p));
    }
    std::vector<Polyline> fragments;
    for (Polyline& piece : clip_polyline(body, range)) {
      const auto cumulative = cumulative_arclength(piece);
      const double length = cumulative.back();
      if (length < kMinPieceLength) {
        continue;
      }
      if (noise.fragment_length <= 0.0 || length <= noise.fragment_length) {
        fragments.push_back(std::move(piece));
        continue;
      }
      for (double s = 0.0; s < length - kMinPieceLength; s += noise.fragment_length) {
        const double e = std::min(length, s + noise.fragment_length);
        Polyline fragment{point_at_arclength(piece, cumulative, s)};
        for (std::size_t k = 0; k < piece.size(); ++k) {
          if (cumulative[k] > s && cumulative[k] < e) {
            fragment.push_back(piece[k]);
          }
        }
        fragment.push_back(point_at_arclength(piece, cumulative, e));
        fragments.push_back(std::move(fragment));
      }
    }
    for (Polyline& fragment : fragments) {
      if (unit(rng) < noise.dropout) {
        continue;
      }
      if (noise.jitter_sigma > 0.0) {
        if (noise.vertex_spacing > 0.0) {
          fragment = even_vertices(fragment, noise.vertex_spacing);
        }
        for (Vec3& p : fragment) {
          p.x() += jitter(rng);
          p.y() += jitter(rng);
        }
      }
      emit(std::move(fragment), line.type, draw(noise.confidence_min, noise.confidence_max));
    }
  }

  if (unit(rng) < noise.outlier_rate) {
    const bool zigzag = unit(rng) < 0.5;
    const Vec3 start(draw(range.min_x + 5.0, range.max_x - 15.0),
                     draw(range.min_y + 2.0, range.max_y - 2.0), 0.0);
    const MarkingType type = unit(rng) < 0.5 ? MarkingType::kLaneline : MarkingType::kRoadedge;
    Polyline points;
    if (zigzag) {
      for (int k = 0; k < 6; ++k) {
        points.push_back(start + Vec3(2.0 * k, k % 2 == 0 ? -1.0 : 1.0, 0.0));
      }
    } else {
      const double heading = draw(-std::numbers::pi, std::numbers::pi);
      const double length = draw(5.0, 15.0);
      const Vec3 dir(std::cos(heading), std::sin(heading), 0.0);
      for (double s = 0.0; s < length; s += kVertexSpacing) {
        points.push_back(start + s * dir);
      }
      points.push_back(start + length * dir);
    }
    emit(std::move(points), type, draw(noise.outlier_confidence_min, noise.outlier_confidence_max));
  }
  return frame;
}

std::vector<FrameInput> render_stream(const Scenario& scenario, const NoiseSpec& noise) {
  validate(noise);
  std::vector<FrameInput> frames;
  frames.reserve(scenario.trajectory.size());
  for (std::size_t k = 0; k < scenario.trajectory.size(); ++k) {
    FrameInput frame = render_frame(scenario.gt, scenario.trajectory[k], noise,
                                    frame_seed(scenario.spec.seed, k));
    frame.timestamp = scenario.timestamps[k];
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace roadfuse
