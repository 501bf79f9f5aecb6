#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "roadfuse/eval.hpp"
#include "roadfuse/local_map.hpp"
#include "roadfuse/sim.hpp"

namespace roadfuse {

// Frame streams: one JSON object per line,
//   {"timestamp": t, "pose": [r00 r01 r02 r10 ... r22 tx ty tz],
//    "detections": [{"type": "laneline", "confidence": c, "points": [[x,y,z],...]}]}
// Malformed records throw DataError naming the line; unreadable files
// throw IoError. Detections with fewer than two points are kept here and
// skipped by the pipeline.
std::vector<FrameInput> read_frames(std::istream& in, const std::string& source = "<stream>");
std::vector<FrameInput> read_frames(const std::string& path);
void write_frame(std::ostream& out, const FrameInput& frame);
void write_frames(const std::string& path, const std::vector<FrameInput>& frames);

// Groundtruth: {"lines": [{"id", "type", "points"}], "lanes": [{"id", "left", "right",
// "centerline"}]}. Lanes are optional on read.
GtMap read_gt(const std::string& path);
void write_gt(const std::string& path, const GtMap& gt);

struct SnapshotWriteOptions {
  // Wall-clock stage timings vary run to run; off keeps files reproducible.
  bool timings = false;
};

void write_snapshot(std::ostream& out, const MapSnapshot& snapshot,
                    const SnapshotWriteOptions& options = {});
// Restores frame, timestamp, poses and instances (layout and stats are
// not read back).
std::vector<MapSnapshot> read_snapshots(const std::string& path);

std::string metrics_json(const EvalResult& result, const std::string& label = "");
void write_text(const std::string& path, const std::string& text);

}  // namespace roadfuse
