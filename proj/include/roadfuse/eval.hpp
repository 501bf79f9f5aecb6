#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "roadfuse/local_map.hpp"
#include "roadfuse/types.hpp"

namespace roadfuse {

struct MatchConfig {
  double sample_interval = 0.1;
  double match_radius = 0.5;
  // A prediction is a true positive when strictly more than this fraction
  // of the GT line's samples are matched.
  double tp_fraction = 0.75;
};

// Points at arclength 0, interval, 2 interval, ... plus the final endpoint.
Polyline sample_polyline(std::span<const Vec3> line, double interval);

struct PairScore {
  std::size_t matched = 0;     // prediction samples within the radius
  std::size_t gt_samples = 0;
  double fraction = 0.0;       // matched / gt_samples
  double chamfer = 0.0;        // mean nearest distance over matched samples
};

// Nearest-GT-sample matching of prediction samples (both pre-sampled).
PairScore score_pair(std::span<const Vec3> pred_samples, std::span<const Vec3> gt_samples,
                     const MatchConfig& cfg);

// Counts with percentages derived on demand. Metrics without a defined
// denominator are nullopt.
struct MetricsSummary {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double chamfer_sum = 0.0;

  std::optional<double> precision() const;  // percent
  std::optional<double> recall() const;     // percent
  std::optional<double> f1() const;         // percent
  std::optional<double> acd() const;        // meters

  MetricsSummary& operator+=(const MetricsSummary& other);
};

struct MetricsReport {
  std::array<MetricsSummary, kMarkingTypeCount> per_type{};
  MetricsSummary total;

  MetricsReport& operator+=(const MetricsReport& other);
};

struct MatchPair {
  std::size_t pred = 0;  // index into the prediction list
  std::size_t gt = 0;    // index into the GT list
  double fraction = 0.0;
  double chamfer = 0.0;
};

struct MatchResult {
  MetricsReport report;
  std::vector<MatchPair> matches;  // sorted by gt index
};

// Per type: every (prediction, GT) pair with fraction > tp_fraction is a
// candidate; a one-to-one assignment with the most true positives is
// chosen, preferring larger total match fraction among those.
MatchResult match_and_score(std::span<const TypedLine> predicted, std::span<const TypedLine> gt,
                            const MatchConfig& cfg);

// Assignment maximizing the total weight over a rows x cols matrix
// (Hungarian method). Entries <= 0 are treated as forbidden. Returns the
// chosen (row, col) pairs sorted by row.
std::vector<std::pair<std::size_t, std::size_t>> max_weight_assignment(
    const std::vector<std::vector<double>>& weight);

struct EvalConfig {
  MatchConfig match;
  MapWindow window;
  // Clipped pieces shorter than this are ignored on both sides.
  double min_line_length = 1.0;
  // Raw detections below this confidence are not scored.
  double raw_min_confidence = 0.3;
  // Leading frames left out of the totals (still listed per frame).
  std::size_t warmup_frames = 0;
};

// Lines mapped through `to_body`, clipped to the window, short pieces
// dropped. Every surviving piece becomes its own line.
std::vector<TypedLine> window_lines(std::span<const TypedLine> lines, const Pose& to_body,
                                    const MapWindow& window, double min_line_length);

struct FrameMetrics {
  std::size_t frame = 0;
  double timestamp = 0.0;
  MetricsReport report;
};

struct EvalResult {
  MetricsReport total;
  std::vector<FrameMetrics> frames;
};

// Fused instances of every snapshot against the world-frame GT, compared
// in the body frame of that snapshot.
EvalResult evaluate_snapshots(std::span<const MapSnapshot> snapshots,
                              std::span<const TypedLine> gt_world, const EvalConfig& cfg);

// Single-frame baseline: each frame's confident detections against GT.
EvalResult evaluate_raw_frames(std::span<const FrameInput> frames,
                               std::span<const TypedLine> gt_world, const EvalConfig& cfg);

}  // namespace roadfuse
