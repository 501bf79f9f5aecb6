#include "roadfuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <absl/container/flat_hash_map.h>

namespace roadfuse {

namespace {

// Uniform xy grid over GT samples with cells as wide as the match radius,
// so the nearest sample within the radius lies in the 3x3 neighborhood.
class SampleGrid {
 public:
  SampleGrid(std::span<const Vec3> samples, double cell) : samples_(samples), cell_(cell) {
    for (std::size_t k = 0; k < samples.size(); ++k) {
      cells_[key(cell_index(samples[k].x()), cell_index(samples[k].y()))].push_back(k);
    }
  }

  // Nearest sample distance, or infinity when none lies within one cell.
  double nearest(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    const std::int64_t cx = cell_index(p.x());
    const std::int64_t cy = cell_index(p.y());
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) {
          continue;
        }
        for (const std::size_t k : it->second) {
          best = std::min(best, (samples_[k] - p).norm());
        }
      }
    }
    return best;
  }

 private:
  std::int64_t cell_index(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
  }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^ (static_cast<std::uint64_t>(y) & 0xffffffffu);
  }

  std::span<const Vec3> samples_;
  double cell_;
  absl::flat_hash_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

PairScore score_with_grid(std::span<const Vec3> pred, std::size_t gt_count, const SampleGrid& grid,
                          const MatchConfig& cfg) {
  PairScore score;
  score.gt_samples = gt_count;
  double sum = 0.0;
  for (const Vec3& p : pred) {
    const double d = grid.nearest(p);
    if (d < cfg.match_radius) {
      ++score.matched;
      sum += d;
    }
  }
  if (score.matched > 0) {
    score.chamfer = sum / static_cast<double>(score.matched);
  }
  if (gt_count > 0) {
    score.fraction = static_cast<double>(score.matched) / static_cast<double>(gt_count);
  }
  return score;
}

struct Box {
  double min_x, max_x, min_y, max_y;
  bool near(const Box& o, double margin) const {
    return min_x <= o.max_x + margin && o.min_x <= max_x + margin && min_y <= o.max_y + margin &&
           o.min_y <= max_y + margin;
  }
};

Box box_of(std::span<const Vec3> points) {
  Box b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec3& p : points) {
    b.min_x = std::min(b.min_x, p.x());
    b.max_x = std::max(b.max_x, p.x());
    b.min_y = std::min(b.min_y, p.y());
    b.max_y = std::max(b.max_y, p.y());
  }
  return b;
}

// Added to every candidate weight so that any assignment with more pairs
// outweighs one with fewer, whatever the fractions.
constexpr double kCardinalityWeight = 1e6;

}  // namespace

Polyline sample_polyline(std::span<const Vec3> line, double interval) {
  return resample_polyline(line, interval);
}

PairScore score_pair(std::span<const Vec3> pred_samples, std::span<const Vec3> gt_samples,
                     const MatchConfig& cfg) {
  const SampleGrid grid(gt_samples, cfg.match_radius);
  return score_with_grid(pred_samples, gt_samples.size(), grid, cfg);
}

std::optional<double> MetricsSummary::precision() const {
  if (tp + fp == 0) {
    return std::nullopt;
  }
  return 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> MetricsSummary::recall() const {
  if (tp + fn == 0) {
    return std::nullopt;
  }
  return 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::optional<double> MetricsSummary::f1() const {
  const auto p = precision();
  const auto r = recall();
  if (!p && !r) {
    return std::nullopt;
  }
  if (!p || !r || *p + *r == 0.0) {
    return 0.0;
  }
  return 2.0 * *p * *r / (*p + *r);
}

std::optional<double> MetricsSummary::acd() const {
  if (tp == 0) {
    return std::nullopt;
  }
  return chamfer_sum / static_cast<double>(tp);
}

MetricsSummary& MetricsSummary::operator+=(const MetricsSummary& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  chamfer_sum += other.chamfer_sum;
  return *this;
}

MetricsReport& MetricsReport::operator+=(const MetricsReport& other) {
  for (std::size_t t = 0; t < kMarkingTypeCount; ++t) {
    per_type[t] += other.per_type[t];
  }
  total += other.total;
  return *this;
}

std::vector<std::pair<std::size_t, std::size_t>> max_weight_assignment(
    const std::vector<std::vector<double>>& weight) {
  const std::size_t rows = weight.size();
  const std::size_t cols = rows == 0 ? 0 : weight.front().size();
  if (rows == 0 || cols == 0) {
    return {};
  }
  // Square min-cost problem; forbidden and padding cells cost 0 and are
  // discarded afterwards.
  const std::size_t n = std::max(rows, cols);
  auto cost = [&](std::size_t i, std::size_t j) {
    if (i < rows && j < cols && weight[i][j] > 0.0) {
      return -weight[i][j];
    }
    return 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);  // column -> row, 1-based
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) {
          continue;
        }
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = match[j] - 1;
    if (i < rows && j - 1 < cols && weight[i][j - 1] > 0.0) {
      pairs.emplace_back(i, j - 1);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

MatchResult match_and_score(std::span<const TypedLine> predicted, std::span<const TypedLine> gt,
                            const MatchConfig& cfg) {
  MatchResult result;
  std::vector<Polyline> pred_samples;
  std::vector<Box> pred_boxes;
  for (const TypedLine& line : predicted) {
    pred_samples.push_back(sample_polyline(line.points, cfg.sample_interval));
    pred_boxes.push_back(box_of(pred_samples.back()));
  }

  for (const MarkingType type : kAllMarkingTypes) {
    std::vector<std::size_t> preds;
    std::vector<std::size_t> gts;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
      if (predicted[k].type == type) {
        preds.push_back(k);
      }
    }
    for (std::size_t k = 0; k < gt.size(); ++k) {
      if (gt[k].type == type) {
        gts.push_back(k);
      }
    }
    std::vector<std::vector<double>> weight(preds.size(), std::vector<double>(gts.size(), 0.0));
    std::vector<std::vector<PairScore>> scores(preds.size(), std::vector<PairScore>(gts.size()));
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const Polyline gt_samples = sample_polyline(gt[gts[g]].points, cfg.sample_interval);
      const Box gt_box = box_of(gt_samples);
      const SampleGrid grid(gt_samples, cfg.match_radius);
      for (std::size_t p = 0; p < preds.size(); ++p) {
        if (!pred_boxes[preds[p]].near(gt_box, cfg.match_radius)) {
          continue;
        }
        const PairScore s = score_with_grid(pred_samples[preds[p]], gt_samples.size(), grid, cfg);
        scores[p][g] = s;
        if (s.fraction > cfg.tp_fraction) {
          weight[p][g] = kCardinalityWeight + s.fraction;
        }
      }
    }
    MetricsSummary& summary = result.report.per_type[index_of(type)];
    for (const auto& [p, g] : max_weight_assignment(weight)) {
      const PairScore& s = scores[p][g];
      result.matches.push_back({preds[p], gts[g], s.fraction, s.chamfer});
      ++summary.tp;
      summary.chamfer_sum += s.chamfer;
    }
    summary.fp = preds.size() - summary.tp;
    summary.fn = gts.size() - summary.tp;
    result.report.total += summary;
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.gt < b.gt; });
  return result;
}

std::vector<TypedLine> window_lines(std::span<const TypedLine> lines, const Pose& to_body,
                                    const MapWindow& window, double min_line_length) {
  std::vector<TypedLine> out;
  const Rect2 rect = window.rect();
  for (const TypedLine& line : lines) {
    if (line.points.size() < 2) {
      continue;
    }
    Polyline body;
    body.reserve(line.points.size());
    for (const Vec3& p : line.points) {
      body.push_back(to_body.apply(p));
    }
    for (Polyline& piece : clip_polyline(body, rect)) {
      if (polyline_length(piece) >= min_line_length) {
        out.push_back({line.type, std::move(piece)});
      }
    }
  }
  return out;
}

namespace {

void accumulate(EvalResult& result, std::size_t frame, double timestamp, MetricsReport report,
                const EvalConfig& cfg) {
  if (frame >= cfg.warmup_frames) {
    result.total += report;
  }
  result.frames.push_back({frame, timestamp, std::move(report)});
}

}  // namespace

EvalResult evaluate_snapshots(std::span<const MapSnapshot> snapshots,
                              std::span<const TypedLine> gt_world, const EvalConfig& cfg) {
  EvalResult result;
  for (const MapSnapshot& snap : snapshots) {
    std::vector<TypedLine> fused;
    for (const SnapshotInstance& instance : snap.instances) {
      fused.push_back({instance.type, instance.points});
    }
    const Pose to_body = snap.pose.inverse();
    const Pose world_to_body = snap.origin.compose(snap.pose).inverse();
    const auto pred = window_lines(fused, to_body, cfg.window, cfg.min_line_length);
    const auto gt = window_lines(gt_world, world_to_body, cfg.window, cfg.min_line_length);
    accumulate(result, snap.frame, snap.timestamp, match_and_score(pred, gt, cfg.match).report,
               cfg);
  }
  return result;
}

EvalResult evaluate_raw_frames(std::span<const FrameInput> frames,
                               std::span<const TypedLine> gt_world, const EvalConfig& cfg) {
  EvalResult result;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const FrameInput& frame = frames[k];
    std::vector<TypedLine> raw;
    for (const RawDetection& d : frame.detections) {
      if (d.confidence >= cfg.raw_min_confidence && d.points.size() >= 2) {
        raw.push_back({d.type, d.points});
      }
    }
    const auto pred = window_lines(raw, Pose::identity(), cfg.window, cfg.min_line_length);
    const auto gt = window_lines(gt_world, frame.pose.inverse(), cfg.window, cfg.min_line_length);
    accumulate(result, k, frame.timestamp, match_and_score(pred, gt, cfg.match).report, cfg);
  }
  return result;
}

}  // namespace roadfuse
