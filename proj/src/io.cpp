#include "roadfuse/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace roadfuse {

namespace {

using json = nlohmann::json;

json point_json(const Vec3& p) { return json::array({p.x(), p.y(), p.z()}); }

json polyline_json(const Polyline& line) {
  json out = json::array();
  for (const Vec3& p : line) {
    out.push_back(point_json(p));
  }
  return out;
}

json pose_json(const Pose& pose) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out.push_back(pose.rotation(r, c));
    }
  }
  for (int k = 0; k < 3; ++k) {
    out.push_back(pose.translation[k]);
  }
  return out;
}

const json& field(const json& object, const char* name) {
  if (!object.is_object() || !object.contains(name)) {
    throw DataError(std::string("missing field '") + name + "'");
  }
  return object.at(name);
}

double number(const json& value, const char* what) {
  if (!value.is_number()) {
    throw DataError(std::string(what) + " must be a number");
  }
  return value.get<double>();
}

Polyline parse_polyline(const json& value) {
  if (!value.is_array()) {
    throw DataError("points must be an array");
  }
  Polyline line;
  for (const json& p : value) {
    if (!p.is_array() || p.size() != 3) {
      throw DataError("each point must be [x, y, z]");
    }
    line.emplace_back(number(p[0], "coordinate"), number(p[1], "coordinate"),
                      number(p[2], "coordinate"));
  }
  return line;
}

Pose parse_pose(const json& value) {
  if (!value.is_array() || value.size() != 12) {
    throw DataError("pose must hold 12 numbers");
  }
  Pose pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      pose.rotation(r, c) = number(value[3 * r + c], "pose entry");
    }
  }
  for (int k = 0; k < 3; ++k) {
    pose.translation[k] = number(value[9 + k], "pose entry");
  }
  if (!pose.is_valid()) {
    throw DataError("pose rotation is not orthonormal with determinant +1");
  }
  return pose;
}

MarkingType parse_type(const json& value) {
  const auto type =
      value.is_string() ? parse_marking_type(value.get<std::string>()) : std::nullopt;
  if (!type) {
    throw DataError("type must be laneline, roadedge or stopline");
  }
  return *type;
}

FrameInput parse_frame(const json& record) {
  FrameInput frame;
  frame.timestamp = number(field(record, "timestamp"), "timestamp");
  frame.pose = parse_pose(field(record, "pose"));
  const json& detections = field(record, "detections");
  if (!detections.is_array()) {
    throw DataError("detections must be an array");
  }
  for (const json& d : detections) {
    RawDetection detection;
    detection.type = parse_type(field(d, "type"));
    detection.confidence = number(field(d, "confidence"), "confidence");
    detection.points = parse_polyline(field(d, "points"));
    frame.detections.push_back(std::move(detection));
  }
  return frame;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  return out;
}

json parse_document(std::istream& in, const std::string& path) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const MetricsSummary& s) {
  return {{"tp", s.tp},
          {"fp", s.fp},
          {"fn", s.fn},
          {"precision", optional_number(s.precision())},
          {"recall", optional_number(s.recall())},
          {"f1", optional_number(s.f1())},
          {"acd", optional_number(s.acd())}};
}

json report_json(const MetricsReport& r) {
  json per_type = json::object();
  for (const MarkingType type : kAllMarkingTypes) {
    per_type[std::string(to_string(type))] = summary_json(r.per_type[index_of(type)]);
  }
  return {{"total", summary_json(r.total)}, {"per_type", per_type}};
}

}  // namespace

std::vector<FrameInput> read_frames(std::istream& in, const std::string& source) {
  std::vector<FrameInput> frames;
  std::string line;
  std::size_t number_of_line = 0;
  while (std::getline(in, line)) {
    ++number_of_line;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      frames.push_back(parse_frame(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(source + ":" + std::to_string(number_of_line) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(number_of_line) + ": " + e.what());
    }
  }
  return frames;
}

std::vector<FrameInput> read_frames(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_frames(in, path);
}

void write_frame(std::ostream& out, const FrameInput& frame) {
  json detections = json::array();
  for (const RawDetection& d : frame.detections) {
    detections.push_back({{"type", to_string(d.type)},
                          {"confidence", d.confidence},
                          {"points", polyline_json(d.points)}});
  }
  const json record = {
      {"timestamp", frame.timestamp}, {"pose", pose_json(frame.pose)}, {"detections", detections}};
  out << record.dump() << '\n';
}

void write_frames(const std::string& path, const std::vector<FrameInput>& frames) {
  std::ofstream out = open_out(path);
  for (const FrameInput& frame : frames) {
    write_frame(out, frame);
  }
}

GtMap read_gt(const std::string& path) {
  std::ifstream in = open_in(path);
  const json root = parse_document(in, path);
  GtMap gt;
  try {
    for (const json& l : field(root, "lines")) {
      gt.lines.push_back({field(l, "id").get<std::uint32_t>(), parse_type(field(l, "type")),
                          parse_polyline(field(l, "points"))});
    }
    if (root.contains("lanes")) {
      for (const json& l : root.at("lanes")) {
        gt.lanes.push_back({field(l, "id").get<std::uint32_t>(),
                            field(l, "left").get<std::uint32_t>(),
                            field(l, "right").get<std::uint32_t>(),
                            parse_polyline(field(l, "centerline"))});
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  return gt;
}

void write_gt(const std::string& path, const GtMap& gt) {
  json lines = json::array();
  for (const GtLine& l : gt.lines) {
    lines.push_back({{"id", l.id}, {"type", to_string(l.type)}, {"points", polyline_json(l.points)}});
  }
  json lanes = json::array();
  for (const GtLane& l : gt.lanes) {
    lanes.push_back({{"id", l.id},
                     {"left", l.left},
                     {"right", l.right},
                     {"centerline", polyline_json(l.centerline)}});
  }
  std::ofstream out = open_out(path);
  out << json{{"lines", lines}, {"lanes", lanes}}.dump() << '\n';
}

void write_snapshot(std::ostream& out, const MapSnapshot& s, const SnapshotWriteOptions& options) {
  json instances = json::array();
  for (const SnapshotInstance& i : s.instances) {
    instances.push_back({{"id", i.id},
                         {"type", to_string(i.type)},
                         {"voxel_count", i.voxel_count},
                         {"points", polyline_json(i.points)}});
  }
  json boundaries = json::array();
  for (const LaneBoundary& b : s.layout.boundaries) {
    boundaries.push_back({{"id", b.id},
                          {"kind", to_string(b.kind)},
                          {"sources", b.sources},
                          {"points", polyline_json(b.polyline)}});
  }
  json sections = json::array();
  for (const RoadSection& sec : s.layout.sections) {
    sections.push_back({{"id", sec.id}, {"boundaries", sec.boundaries}});
  }
  json lanes = json::array();
  for (const Lane& l : s.layout.lanes) {
    lanes.push_back({{"id", l.id},
                     {"left", l.left},
                     {"right", l.right},
                     {"range", {l.range_begin, l.range_end}},
                     {"centerline", polyline_json(l.centerline)}});
  }
  json linkages = json::array();
  for (const LaneLinkage& k : s.layout.linkages) {
    linkages.push_back(
        {{"from", k.predecessor},
         {"to", k.successor},
         {"cue", k.cue == LinkageCue::kSharedBoundary ? "shared_boundary" : "geometric"}});
  }
  json stats = {{"detections_in", s.stats.detections_in},
                {"detections_kept", s.stats.detections_kept},
                {"voxels", s.stats.voxel_count},
                {"blocks", s.stats.block_count},
                {"reliable", s.stats.reliable_count},
                {"new_reliable", s.stats.new_reliable},
                {"instances", s.stats.instance_count},
                {"evicted", s.stats.evicted_voxels},
                {"max_count", s.stats.max_count}};
  if (options.timings) {
    const StageTimings& t = s.stats.timings;
    stats["timings_ms"] = {{"preprocess", t.preprocess_ms}, {"integrate", t.integrate_ms},
                           {"reliable", t.reliable_ms},     {"cluster", t.cluster_ms},
                           {"layout", t.layout_ms},         {"evict", t.evict_ms},
                           {"total", t.total_ms}};
  }
  const json record = {{"frame", s.frame},
                       {"timestamp", s.timestamp},
                       {"pose", pose_json(s.pose)},
                       {"origin", pose_json(s.origin)},
                       {"instances", instances},
                       {"layout",
                        {{"boundaries", boundaries},
                         {"sections", sections},
                         {"lanes", lanes},
                         {"linkages", linkages}}},
                       {"stats", stats}};
  out << record.dump() << '\n';
}

std::vector<MapSnapshot> read_snapshots(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<MapSnapshot> snapshots;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const json record = json::parse(line);
      MapSnapshot s;
      s.frame = field(record, "frame").get<std::size_t>();
      s.timestamp = number(field(record, "timestamp"), "timestamp");
      s.pose = parse_pose(field(record, "pose"));
      s.origin = parse_pose(field(record, "origin"));
      for (const json& i : field(record, "instances")) {
        s.instances.push_back({field(i, "id").get<InstanceId>(), parse_type(field(i, "type")),
                               parse_polyline(field(i, "points")),
                               field(i, "voxel_count").get<std::size_t>()});
      }
      snapshots.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_number) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return snapshots;
}

std::string metrics_json(const EvalResult& result, const std::string& label) {
  json frames = json::array();
  for (const FrameMetrics& f : result.frames) {
    const MetricsSummary& t = f.report.total;
    frames.push_back({{"frame", f.frame},
                      {"timestamp", f.timestamp},
                      {"tp", t.tp},
                      {"fp", t.fp},
                      {"fn", t.fn},
                      {"f1", optional_number(t.f1())},
                      {"acd", optional_number(t.acd())}});
  }
  json root = report_json(result.total);
  if (!label.empty()) {
    root["label"] = label;
  }
  root["frames"] = frames;
  return root.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) {
    throw IoError("failed writing " + path);
  }
}

}  // namespace roadfuse
