#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "roadfuse/road_layout.hpp"
#include "support/oracles.hpp"

using namespace roadfuse;

namespace {

Polyline segment(double x0, double y0, double x1, double y1, double step = 1.0) {
  Polyline line;
  const Vec3 a(x0, y0, 0.0);
  const Vec3 b(x1, y1, 0.0);
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
  for (int k = 0; k <= n; ++k) {
    line.push_back(a + (b - a) * (static_cast<double>(k) / n));
  }
  return line;
}

LaneBoundary boundary(std::uint32_t id, Polyline line, MarkingType kind = MarkingType::kLaneline) {
  return LaneBoundary{id, {id}, kind, std::move(line)};
}

Lane lane_on(std::uint32_t id, std::uint32_t left, std::uint32_t right, Polyline centerline) {
  Lane lane;
  lane.id = id;
  lane.left = left;
  lane.right = right;
  lane.centerline = std::move(centerline);
  return lane;
}

}  // namespace

TEST_CASE("collinear pieces chain regardless of order and orientation") {
  const LayoutParams params;
  std::vector<InstanceLine> lines{
      {7, MarkingType::kLaneline, segment(21, 0, 40, 0)},
      {3, MarkingType::kLaneline, segment(20, 0.2, 0, 0)},  // reversed
      {9, MarkingType::kRoadedge, segment(21, 3, 40, 3)},
      {4, MarkingType::kRoadedge, segment(0, 3, 15, 3)},    // gap of 6 m
      {5, MarkingType::kStopline, segment(41, -3, 41, 3)},
  };
  const auto a = build_lane_boundaries(lines, params);
  std::reverse(lines.begin(), lines.end());
  const auto b = build_lane_boundaries(lines, params);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].id == k);
    CHECK(a[k].sources == b[k].sources);
    CHECK(a[k].polyline == b[k].polyline);
  }
  CHECK(a[0].sources == std::vector<std::uint64_t>{3, 7});
  CHECK(a[0].kind == MarkingType::kLaneline);
  CHECK(a[0].polyline.front().x() == doctest::Approx(0.0));
  CHECK(a[0].polyline.back().x() == doctest::Approx(40.0));
  CHECK(a[1].sources == std::vector<std::uint64_t>{4});
  CHECK(a[2].sources == std::vector<std::uint64_t>{9});
}

TEST_CASE("sharp turns and backward pieces do not chain") {
  const LayoutParams params;
  const std::vector<InstanceLine> lines{
      {1, MarkingType::kLaneline, segment(0, 0, 20, 0)},
      {2, MarkingType::kLaneline, segment(21, 0, 21 + 10 * std::cos(0.7), 10 * std::sin(0.7))},
  };
  CHECK(build_lane_boundaries(lines, params).size() == 2);
  // A three-way tie at one endpoint keeps one successor only.
  const std::vector<InstanceLine> fork{
      {1, MarkingType::kLaneline, segment(0, 0, 20, 0)},
      {2, MarkingType::kLaneline, segment(21, 0, 40, 0)},
      {3, MarkingType::kLaneline, segment(21, 0.5, 40, 0.5)},
  };
  const auto out = build_lane_boundaries(fork, params);
  REQUIRE(out.size() == 2);
  CHECK(out[0].sources == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("sections equal union-find components of the overlap graph") {
  const LayoutParams params;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<LaneBoundary> bs;
    const int n = 3 + trial % 6;
    for (int k = 0; k < n; ++k) {
      const double x0 = 80.0 * u(rng);
      const double len = 5.0 + 30.0 * u(rng);
      const double heading = u(rng) < 0.3 ? 1.2 * (u(rng) - 0.5) * 3.0 : 0.2 * (u(rng) - 0.5);
      const double y0 = 20.0 * u(rng);
      bs.push_back(boundary(static_cast<std::uint32_t>(k),
                            segment(x0, y0, x0 + len * std::cos(heading),
                                    y0 + len * std::sin(heading))));
    }
    oracle::UnionFind uf(bs.size());
    for (std::size_t i = 0; i < bs.size(); ++i) {
      for (std::size_t j = i + 1; j < bs.size(); ++j) {
        if (boundaries_connected(bs[i], bs[j], params)) {
          uf.unite(i, j);
        }
      }
    }
    std::map<std::size_t, std::set<std::uint32_t>> expected;
    for (std::size_t i = 0; i < bs.size(); ++i) {
      expected[uf.find(i)].insert(static_cast<std::uint32_t>(i));
    }
    std::set<std::set<std::uint32_t>> want;
    for (const auto& [root, members] : expected) {
      want.insert(members);
    }
    std::set<std::set<std::uint32_t>> got;
    for (const RoadSection& s : group_road_sections(bs, params)) {
      got.insert(std::set<std::uint32_t>(s.boundaries.begin(), s.boundaries.end()));
      CHECK(s.boundaries.size() ==
            std::set<std::uint32_t>(s.boundaries.begin(), s.boundaries.end()).size());
    }
    CHECK(got == want);
  }
}

TEST_CASE("connection needs mutual projection and similar direction") {
  const LayoutParams params;
  const LaneBoundary a = boundary(0, segment(0, 0, 30, 0));
  CHECK(boundaries_connected(a, boundary(1, segment(10, 3.5, 50, 3.5)), params));
  CHECK(boundaries_connected(a, boundary(1, segment(50, 3.5, 10, 3.5)), params));  // reversed
  CHECK_FALSE(boundaries_connected(a, boundary(1, segment(31, 3.5, 60, 3.5)), params));
  CHECK_FALSE(boundaries_connected(a, boundary(1, segment(10, -10, 10, 10)), params));
}

TEST_CASE("left to right order matches a comparator oracle") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double heading = 3.0 * u(rng);
    const Vec3 dir(std::cos(heading), std::sin(heading), 0.0);
    const Vec3 left(-dir.y(), dir.x(), 0.0);
    std::vector<LaneBoundary> bs;
    std::vector<std::uint32_t> ids;
    std::vector<double> offsets;
    for (int k = 0; k < 6; ++k) {
      const double off = std::round(10.0 * u(rng)) * 0.5;  // ties are possible
      const Vec3 a = off * left;
      const Vec3 b = a + 20.0 * dir;
      bs.push_back(boundary(static_cast<std::uint32_t>(k), {a, b}));
      ids.push_back(static_cast<std::uint32_t>(5 - k));
      offsets.push_back(off);
    }
    std::vector<std::uint32_t> want(ids);
    std::stable_sort(want.begin(), want.end(), [&](std::uint32_t x, std::uint32_t y) {
      if (std::abs(offsets[x] - offsets[y]) > 1e-6) {
        return offsets[x] > offsets[y];  // larger left offset first
      }
      return x < y;
    });
    CHECK(sort_boundaries_left_to_right(ids, bs, dir) == want);
  }
}

TEST_CASE("three parallel boundaries give two lanes with centered lines") {
  const LayoutParams params;
  const std::vector<LaneBoundary> bs{boundary(0, segment(0, 3.5, 50, 3.5)),
                                     boundary(1, segment(0, 0, 50, 0)),
                                     boundary(2, segment(0, -3.5, 50, -3.5))};
  const std::vector<std::uint32_t> sorted{0, 1, 2};
  const auto lanes = generate_lanes(sorted, bs, params);
  REQUIRE(lanes.size() == 2);
  CHECK(lanes[0].left == 0);
  CHECK(lanes[0].right == 1);
  CHECK(lanes[1].left == 1);
  CHECK(lanes[1].right == 2);
  for (const Lane& lane : lanes) {
    CHECK(lane.range_begin == doctest::Approx(0.0));
    CHECK(lane.range_end == doctest::Approx(50.0));
    const double y = 0.5 * (bs[lane.left].polyline[0].y() + bs[lane.right].polyline[0].y());
    for (const Vec3& p : lane.centerline) {
      CHECK(p.y() == doctest::Approx(y));
    }
  }
}

TEST_CASE("lane width interval and variation bound") {
  const LayoutParams params;
  // Too narrow everywhere.
  std::vector<LaneBoundary> narrow{boundary(0, segment(0, 0, 50, 0)),
                                   boundary(1, segment(0, -2, 50, -2))};
  CHECK(generate_lanes(std::vector<std::uint32_t>{0, 1}, narrow, params).empty());

  // Widens from 3 to 4 m over 100 m: the 0.8 m variation cap splits it.
  std::vector<LaneBoundary> flare{boundary(0, segment(0, 0, 100, 0)),
                                  boundary(1, segment(0, -3, 100, -4))};
  const auto lanes = generate_lanes(std::vector<std::uint32_t>{0, 1}, flare, params);
  REQUIRE(lanes.size() == 2);
  for (const Lane& lane : lanes) {
    const double w0 = 3.0 + lane.range_begin / 100.0;
    const double w1 = 3.0 + lane.range_end / 100.0;
    CHECK(w1 - w0 <= 0.8 + 1e-9);
    CHECK(lane.range_end - lane.range_begin >= 5.0);
  }
  // The longest admissible run spans 80 m of the 100 m flare.
  const double longest = std::max(lanes[0].range_end - lanes[0].range_begin,
                                   lanes[1].range_end - lanes[1].range_begin);
  CHECK(longest == doctest::Approx(80.0).epsilon(0.01));
  CHECK(lanes[0].range_end < lanes[1].range_begin);

  // Left boundary shorter than the right one: only the overlap counts.
  std::vector<LaneBoundary> partial{boundary(0, segment(20, 0, 40, 0)),
                                    boundary(1, segment(0, -3.5, 100, -3.5))};
  const auto p = generate_lanes(std::vector<std::uint32_t>{0, 1}, partial, params);
  REQUIRE(p.size() == 1);
  CHECK(p[0].centerline.front().x() == doctest::Approx(20.0));
  CHECK(p[0].centerline.back().x() == doctest::Approx(40.0));
}

TEST_CASE("skip pair survives when the inner pair makes no lane") {
  const LayoutParams params;
  const std::vector<LaneBoundary> bs{boundary(0, segment(0, 0, 40, 0)),
                                     boundary(1, segment(0, -1, 40, -1)),
                                     boundary(2, segment(0, -3.5, 40, -3.5))};
  const auto lanes = generate_lanes(std::vector<std::uint32_t>{0, 1, 2}, bs, params);
  REQUIRE(lanes.size() == 2);
  CHECK(std::pair{lanes[0].left, lanes[0].right} == std::pair{1u, 2u});
  CHECK(std::pair{lanes[1].left, lanes[1].right} == std::pair{0u, 2u});
}

TEST_CASE("linkage cues") {
  const LayoutParams params;
  const std::vector<LaneBoundary> bs{boundary(0, segment(0, 1.75, 100, 1.75)),
                                     boundary(1, segment(0, -1.75, 40, -1.75)),
                                     boundary(2, segment(42, -1.75, 100, -1.75)),
                                     boundary(3, segment(0, 5.25, 100, 5.25))};
  SUBCASE("shared left boundary") {
    const std::vector<Lane> lanes{lane_on(0, 0, 1, segment(0, 0, 40, 0)),
                                  lane_on(1, 0, 2, segment(42, 0, 100, 0))};
    const auto links = generate_linkages(lanes, bs, params);
    REQUIRE(links.size() == 1);
    CHECK(links[0] == LaneLinkage{0, 1, LinkageCue::kSharedBoundary});
  }
  SUBCASE("geometric alignment without a shared boundary") {
    const std::vector<Lane> lanes{lane_on(0, 3, 1, segment(0, 0, 40, 0)),
                                  lane_on(1, 0, 2, segment(42, 0.3, 100, 0.3))};
    const auto links = generate_linkages(lanes, bs, params);
    REQUIRE(links.size() == 1);
    CHECK(links[0] == LaneLinkage{0, 1, LinkageCue::kGeometricAlignment});
  }
  SUBCASE("too far, too sharp, or side by side") {
    const std::vector<Lane> far{lane_on(0, 3, 1, segment(0, 0, 40, 0)),
                                lane_on(1, 0, 2, segment(44, 0, 100, 0))};
    CHECK(generate_linkages(far, bs, params).empty());
    const std::vector<Lane> sharp{lane_on(0, 3, 1, segment(0, 0, 40, 0)),
                                  lane_on(1, 0, 2, segment(41, 0, 71, 30))};
    CHECK(generate_linkages(sharp, bs, params).empty());
    const std::vector<Lane> parallel{lane_on(0, 0, 1, segment(0, 0, 100, 0)),
                                     lane_on(1, 3, 0, segment(0, 3.5, 100, 3.5))};
    CHECK(generate_linkages(parallel, bs, params).empty());
  }
}

TEST_CASE("full layout of a straight three lane road") {
  std::vector<InstanceLine> lines;
  for (int k = 0; k < 4; ++k) {
    const MarkingType type = k == 0 || k == 3 ? MarkingType::kRoadedge : MarkingType::kLaneline;
    // Each boundary observed as two pieces with a small gap.
    lines.push_back({static_cast<std::uint64_t>(2 * k), type,
                     segment(0, 5.25 - 3.5 * k, 24, 5.25 - 3.5 * k)});
    lines.push_back({static_cast<std::uint64_t>(2 * k + 1), type,
                     segment(25.5, 5.25 - 3.5 * k, 60, 5.25 - 3.5 * k)});
  }
  const RoadLayout layout = build_road_layout(lines, LayoutParams{});
  CHECK(layout.boundaries.size() == 4);
  REQUIRE(layout.sections.size() == 1);
  CHECK(layout.sections[0].boundaries == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(layout.lanes.size() == 3);
  CHECK(layout.linkages.empty());
}

TEST_CASE("split layout: widths in range and linkages acyclic") {
  const LayoutParams params;
  Polyline stepped = segment(0, -1.75, 50, -1.75);
  for (const Polyline& piece : {segment(50, -1.75, 52, -5.25, 0.5), segment(52, -5.25, 100, -5.25)}) {
    stepped.insert(stepped.end(), piece.begin() + 1, piece.end());
  }
  const std::vector<LaneBoundary> split{
      boundary(0, segment(0, 1.75, 100, 1.75), MarkingType::kRoadedge),
      boundary(1, segment(50, -1.75, 100, -1.75)),
      boundary(2, stepped, MarkingType::kRoadedge)};
  const RoadLayout layout = build_road_layout(split, params);
  REQUIRE(layout.lanes.size() == 3);

  for (const Lane& lane : layout.lanes) {
    const Polyline& left = split[lane.left].polyline;
    const Polyline& right = split[lane.right].polyline;
    // Width measured afresh at centerline samples well inside the lane.
    for (std::size_t k = 1; k + 1 < lane.centerline.size(); ++k) {
      const Vec3& c = lane.centerline[k];
      const double w = oracle::point_polyline_distance(c, left) +
                       oracle::point_polyline_distance(c, right);
      CHECK(w >= params.width_min - 0.05);
      CHECK(w <= params.width_max + 0.05);
    }
  }

  // Kahn's algorithm must consume every lane.
  std::map<std::uint32_t, int> indegree;
  std::multimap<std::uint32_t, std::uint32_t> next;
  for (const Lane& lane : layout.lanes) indegree[lane.id] = 0;
  for (const LaneLinkage& l : layout.linkages) {
    CHECK(l.predecessor != l.successor);
    ++indegree[l.successor];
    next.emplace(l.predecessor, l.successor);
  }
  std::vector<std::uint32_t> ready;
  for (const auto& [id, n] : indegree) {
    if (n == 0) ready.push_back(id);
  }
  std::size_t consumed = 0;
  while (!ready.empty()) {
    const std::uint32_t id = ready.back();
    ready.pop_back();
    ++consumed;
    auto [lo, hi] = next.equal_range(id);
    for (auto it = lo; it != hi; ++it) {
      if (--indegree[it->second] == 0) ready.push_back(it->second);
    }
  }
  CHECK(consumed == layout.lanes.size());
  CHECK(layout.linkages.size() == 2);
}
