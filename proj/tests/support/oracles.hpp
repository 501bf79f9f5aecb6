#pragma once

// Slow, independent reference implementations used by the tests. None of
// these call into the library except for plain data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "roadfuse/types.hpp"

namespace oracle {

using roadfuse::Polyline;
using roadfuse::Vec3;

inline double angle(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    return 0.0;
  }
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// 4x4 homogeneous matrix of a rotation + translation.
inline Eigen::Matrix4d homogeneous(const Eigen::Matrix3d& r, const Vec3& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return m;
}

inline Vec3 apply(const Eigen::Matrix4d& m, const Vec3& p) {
  const Eigen::Vector4d h = m * Eigen::Vector4d(p.x(), p.y(), p.z(), 1.0);
  return h.head<3>();
}

inline double length(const Polyline& line) {
  double total = 0.0;
  for (std::size_t k = 1; k < line.size(); ++k) {
    total += (line[k] - line[k - 1]).norm();
  }
  return total;
}

// Walks the polyline and emits a point every `step` of arclength, plus the
// final vertex when it is not already the last emitted point.
inline Polyline walk_samples(const Polyline& line, double step) {
  Polyline out;
  if (line.empty()) {
    return out;
  }
  out.push_back(line.front());
  double next = step;
  double travelled = 0.0;
  for (std::size_t k = 1; k < line.size(); ++k) {
    const Vec3 a = line[k - 1];
    const Vec3 b = line[k];
    const double seg = (b - a).norm();
    while (seg > 0.0 && next <= travelled + seg + 1e-12) {
      const double t = std::clamp((next - travelled) / seg, 0.0, 1.0);
      out.push_back(a + t * (b - a));
      next += step;
    }
    travelled += seg;
  }
  if ((out.back() - line.back()).norm() > 1e-9) {
    out.push_back(line.back());
  }
  return out;
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) {
    return (p - a).norm();
  }
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

inline double point_polyline_distance(const Vec3& p, const Polyline& line) {
  if (line.size() == 1) {
    return (p - line.front()).norm();
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < line.size(); ++k) {
    best = std::min(best, point_segment_distance(p, line[k - 1], line[k]));
  }
  return best;
}

// Symmetric Hausdorff distance between two polylines, measured on dense
// samples of each against the other's segments.
inline double hausdorff(const Polyline& a, const Polyline& b, double step = 0.05) {
  double worst = 0.0;
  for (const Vec3& p : walk_samples(a, step)) {
    worst = std::max(worst, point_polyline_distance(p, b));
  }
  for (const Vec3& p : walk_samples(b, step)) {
    worst = std::max(worst, point_polyline_distance(p, a));
  }
  return worst;
}

// Matched count and mean nearest distance of prediction samples against GT
// samples, by exhaustive nearest neighbor.
struct DenseScore {
  std::size_t matched = 0;
  std::size_t gt_samples = 0;
  double chamfer = 0.0;
};

inline DenseScore dense_score(const Polyline& pred, const Polyline& gt, double interval,
                              double radius) {
  const Polyline ps = walk_samples(pred, interval);
  const Polyline gs = walk_samples(gt, interval);
  DenseScore s;
  s.gt_samples = gs.size();
  double sum = 0.0;
  for (const Vec3& p : ps) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& g : gs) {
      best = std::min(best, (p - g).norm());
    }
    if (best < radius) {
      ++s.matched;
      sum += best;
    }
  }
  if (s.matched > 0) {
    s.chamfer = sum / static_cast<double>(s.matched);
  }
  return s;
}

// Best one-to-one assignment by exhaustive search: most pairs first, then
// the largest weight sum. allowed[i][j] false forbids the pair.
struct Assignment {
  std::size_t pairs = 0;
  double weight = 0.0;
  std::vector<int> row_to_col;  // -1 when unassigned
};

inline Assignment exhaustive_assignment(const std::vector<std::vector<bool>>& allowed,
                                        const std::vector<std::vector<double>>& weight) {
  const std::size_t rows = allowed.size();
  const std::size_t cols = rows == 0 ? 0 : allowed.front().size();
  Assignment best;
  best.row_to_col.assign(rows, -1);
  std::vector<int> current(rows, -1);
  std::vector<bool> used(cols, false);
  auto better = [](std::size_t n, double w, const Assignment& b) {
    return n > b.pairs || (n == b.pairs && w > b.weight + 1e-12);
  };
  auto recurse = [&](auto&& self, std::size_t row, std::size_t n, double w) -> void {
    if (row == rows) {
      if (better(n, w, best)) {
        best.pairs = n;
        best.weight = w;
        best.row_to_col = current;
      }
      return;
    }
    current[row] = -1;
    self(self, row + 1, n, w);
    for (std::size_t c = 0; c < cols; ++c) {
      if (!used[c] && allowed[row][c]) {
        used[c] = true;
        current[row] = static_cast<int>(c);
        self(self, row + 1, n + 1, w + weight[row][c]);
        used[c] = false;
        current[row] = -1;
      }
    }
  };
  recurse(recurse, 0, 0, 0.0);
  return best;
}

// Cyclic Jacobi eigenvalue iteration for a symmetric 3x3 matrix. Returns
// eigenvalues in descending order with matching unit eigenvectors.
inline std::pair<std::array<double, 3>, std::array<Vec3, 3>> jacobi_eigen(Eigen::Matrix3d a) {
  Eigen::Matrix3d v = Eigen::Matrix3d::Identity();
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off < 1e-30) {
      break;
    }
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a(p, q)) < 1e-300) {
          continue;
        }
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::Matrix3d j = Eigen::Matrix3d::Identity();
        j(p, p) = c;
        j(q, q) = c;
        j(p, q) = s;
        j(q, p) = -s;
        a = j.transpose() * a * j;
        v = v * j;
      }
    }
  }
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
  std::array<double, 3> values{};
  std::array<Vec3, 3> vectors{};
  for (int k = 0; k < 3; ++k) {
    values[k] = a(order[k], order[k]);
    vectors[k] = v.col(order[k]).normalized();
  }
  return {values, vectors};
}

// Plain disjoint-set forest with path halving.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent_[std::max(a, b)] = std::min(a, b);
    }
  }

 private:
  std::vector<std::size_t> parent_;
};

// Integer voxel coordinates of a point.
inline std::array<std::int64_t, 3> voxel_of(const Vec3& p, double size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / size)),
          static_cast<std::int64_t>(std::floor(p.y() / size)),
          static_cast<std::int64_t>(std::floor(p.z() / size))};
}

// Set of voxels met by points along every segment spaced at most `step`.
inline std::set<std::array<std::int64_t, 3>> rasterize(const Polyline& line, double size,
                                                        double step) {
  std::set<std::array<std::int64_t, 3>> out;
  if (line.size() == 1) {
    out.insert(voxel_of(line.front(), size));
  }
  for (std::size_t k = 1; k < line.size(); ++k) {
    const Vec3 a = line[k - 1];
    const Vec3 b = line[k];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
    for (int i = 0; i <= n; ++i) {
      out.insert(voxel_of(a + (b - a) * (static_cast<double>(i) / n), size));
    }
  }
  return out;
}

}  // namespace oracle
