#include "roadfuse/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <variant>

#include "json.hpp"

namespace roadfuse {

namespace {

using json = nlohmann::json;
using FieldRef = std::variant<double*, std::uint32_t*, std::uint64_t*, int*, bool*,
                              ScenarioKind*>;
static_assert(std::is_same_v<std::size_t, std::uint64_t>);

template <typename T>
struct Field {
  std::string name;
  std::function<FieldRef(T&)> ref;
};

template <typename T>
const Field<T>* find_field(const std::vector<Field<T>>& fields, std::string_view name) {
  for (const auto& f : fields) {
    if (f.name == name) {
      return &f;
    }
  }
  return nullptr;
}

template <typename U>
void read_unsigned(const json& value, U* out, const std::string& name) {
  if (!value.is_number_integer() ||
      (!value.is_number_unsigned() && value.get<std::int64_t>() < 0)) {
    throw ConfigError(name + ": expected a nonnegative integer");
  }
  *out = value.get<U>();
}

void read_value(const json& value, FieldRef ref, const std::string& name) {
  std::visit(
      [&](auto* out) {
        using V = std::remove_pointer_t<decltype(out)>;
        if constexpr (std::is_same_v<V, double>) {
          if (!value.is_number()) {
            throw ConfigError(name + ": expected a number");
          }
          *out = value.get<double>();
        } else if constexpr (std::is_same_v<V, bool>) {
          if (!value.is_boolean()) {
            throw ConfigError(name + ": expected true or false");
          }
          *out = value.get<bool>();
        } else if constexpr (std::is_same_v<V, int>) {
          if (!value.is_number_integer()) {
            throw ConfigError(name + ": expected an integer");
          }
          *out = value.get<int>();
        } else if constexpr (std::is_same_v<V, ScenarioKind>) {
          const auto kind = value.is_string() ? parse_scenario_kind(value.get<std::string>())
                                              : std::nullopt;
          if (!kind) {
            throw ConfigError(name +
                              ": expected one of straight, curve, merge, split, intersection");
          }
          *out = *kind;
        } else {
          read_unsigned(value, out, name);
        }
      },
      ref);
}

json write_value(FieldRef ref) {
  return std::visit(
      [](auto* in) -> json {
        using V = std::remove_pointer_t<decltype(in)>;
        if constexpr (std::is_same_v<V, ScenarioKind>) {
          return std::string(to_string(*in));
        } else {
          return *in;
        }
      },
      ref);
}

template <typename T>
void apply_object(const json& object, T& target, const std::vector<Field<T>>& fields,
                  const std::string& context) {
  if (!object.is_object()) {
    throw ConfigError(context + ": expected a JSON object");
  }
  for (const auto& [key, value] : object.items()) {
    const Field<T>* field = find_field(fields, key);
    if (field == nullptr) {
      throw ConfigError(context + ": unknown key '" + key + "'");
    }
    read_value(value, field->ref(target), key);
  }
}

template <typename T>
json to_object(T& target, const std::vector<Field<T>>& fields) {
  json object = json::object();
  for (const auto& f : fields) {
    object[f.name] = write_value(f.ref(target));
  }
  return object;
}

const std::vector<Field<RunConfig>>& run_fields() {
  static const std::vector<Field<RunConfig>> fields = {
      {"voxel_size", [](RunConfig& c) -> FieldRef { return &c.map.voxel.voxel_size; }},
      {"bucket_count", [](RunConfig& c) -> FieldRef { return &c.map.voxel.bucket_count; }},
      {"filter_enabled", [](RunConfig& c) -> FieldRef { return &c.map.filter.enabled; }},
      {"min_confidence", [](RunConfig& c) -> FieldRef { return &c.map.filter.min_confidence; }},
      {"max_turn_angle", [](RunConfig& c) -> FieldRef { return &c.map.filter.max_turn_angle; }},
      {"alpha_n", [](RunConfig& c) -> FieldRef { return &c.map.alpha_n; }},
      {"beta_p", [](RunConfig& c) -> FieldRef { return &c.map.clustering.beta_p; }},
      {"beta_n", [](RunConfig& c) -> FieldRef { return &c.map.clustering.beta_n; }},
      {"beta_r", [](RunConfig& c) -> FieldRef { return &c.map.clustering.beta_r; }},
      {"eigen_ratio_threshold",
       [](RunConfig& c) -> FieldRef { return &c.map.fit.eigen_ratio_threshold; }},
      {"segment_length_primary",
       [](RunConfig& c) -> FieldRef { return &c.map.fit.segment_length_primary; }},
      {"segment_length_quadrant",
       [](RunConfig& c) -> FieldRef { return &c.map.fit.segment_length_quadrant; }},
      {"window_lateral_min", [](RunConfig& c) -> FieldRef { return &c.map.window.lateral_min; }},
      {"window_lateral_max", [](RunConfig& c) -> FieldRef { return &c.map.window.lateral_max; }},
      {"window_longitudinal_min",
       [](RunConfig& c) -> FieldRef { return &c.map.window.longitudinal_min; }},
      {"window_longitudinal_max",
       [](RunConfig& c) -> FieldRef { return &c.map.window.longitudinal_max; }},
      {"retention_lateral_min",
       [](RunConfig& c) -> FieldRef { return &c.map.retention.lateral_min; }},
      {"retention_lateral_max",
       [](RunConfig& c) -> FieldRef { return &c.map.retention.lateral_max; }},
      {"retention_longitudinal_min",
       [](RunConfig& c) -> FieldRef { return &c.map.retention.longitudinal_min; }},
      {"retention_longitudinal_max",
       [](RunConfig& c) -> FieldRef { return &c.map.retention.longitudinal_max; }},
      {"layout_enabled", [](RunConfig& c) -> FieldRef { return &c.map.layout_enabled; }},
      {"width_min", [](RunConfig& c) -> FieldRef { return &c.map.layout.width_min; }},
      {"width_max", [](RunConfig& c) -> FieldRef { return &c.map.layout.width_max; }},
      {"width_variation_max",
       [](RunConfig& c) -> FieldRef { return &c.map.layout.width_variation_max; }},
      {"min_lane_length", [](RunConfig& c) -> FieldRef { return &c.map.layout.min_lane_length; }},
      {"endpoint_dist_max",
       [](RunConfig& c) -> FieldRef { return &c.map.layout.endpoint_dist_max; }},
      {"endpoint_angle_max",
       [](RunConfig& c) -> FieldRef { return &c.map.layout.endpoint_angle_max; }},
      {"section_angle_max",
       [](RunConfig& c) -> FieldRef { return &c.map.layout.section_angle_max; }},
      {"linkage_gap_max", [](RunConfig& c) -> FieldRef { return &c.map.layout.linkage_gap_max; }},
      {"linkage_angle_max",
       [](RunConfig& c) -> FieldRef { return &c.map.layout.linkage_angle_max; }},
      {"width_sample_step",
       [](RunConfig& c) -> FieldRef { return &c.map.layout.width_sample_step; }},
      {"overlap_sample_step",
       [](RunConfig& c) -> FieldRef { return &c.map.layout.overlap_sample_step; }},
      {"sample_interval", [](RunConfig& c) -> FieldRef { return &c.eval.match.sample_interval; }},
      {"match_radius", [](RunConfig& c) -> FieldRef { return &c.eval.match.match_radius; }},
      {"tp_fraction", [](RunConfig& c) -> FieldRef { return &c.eval.match.tp_fraction; }},
      {"eval_min_line_length",
       [](RunConfig& c) -> FieldRef { return &c.eval.min_line_length; }},
      {"raw_min_confidence",
       [](RunConfig& c) -> FieldRef { return &c.eval.raw_min_confidence; }},
      {"warmup_frames", [](RunConfig& c) -> FieldRef { return &c.eval.warmup_frames; }},
  };
  return fields;
}

const std::vector<Field<ScenarioSpec>>& scenario_fields() {
  static const std::vector<Field<ScenarioSpec>> fields = {
      {"kind", [](ScenarioSpec& s) -> FieldRef { return &s.kind; }},
      {"lanes", [](ScenarioSpec& s) -> FieldRef { return &s.lanes; }},
      {"lane_width", [](ScenarioSpec& s) -> FieldRef { return &s.lane_width; }},
      {"length", [](ScenarioSpec& s) -> FieldRef { return &s.length; }},
      {"curvature", [](ScenarioSpec& s) -> FieldRef { return &s.curvature; }},
      {"seed", [](ScenarioSpec& s) -> FieldRef { return &s.seed; }},
      {"speed", [](ScenarioSpec& s) -> FieldRef { return &s.speed; }},
      {"rate_hz", [](ScenarioSpec& s) -> FieldRef { return &s.rate_hz; }},
      {"body_height", [](ScenarioSpec& s) -> FieldRef { return &s.body_height; }},
      {"frames", [](ScenarioSpec& s) -> FieldRef { return &s.frames; }},
  };
  return fields;
}

const std::vector<Field<NoiseSpec>>& noise_fields() {
  static const std::vector<Field<NoiseSpec>> fields = {
      {"dropout", [](NoiseSpec& n) -> FieldRef { return &n.dropout; }},
      {"jitter_sigma", [](NoiseSpec& n) -> FieldRef { return &n.jitter_sigma; }},
      {"vertex_spacing", [](NoiseSpec& n) -> FieldRef { return &n.vertex_spacing; }},
      {"outlier_rate", [](NoiseSpec& n) -> FieldRef { return &n.outlier_rate; }},
      {"confidence_min", [](NoiseSpec& n) -> FieldRef { return &n.confidence_min; }},
      {"confidence_max", [](NoiseSpec& n) -> FieldRef { return &n.confidence_max; }},
      {"outlier_confidence_min",
       [](NoiseSpec& n) -> FieldRef { return &n.outlier_confidence_min; }},
      {"outlier_confidence_max",
       [](NoiseSpec& n) -> FieldRef { return &n.outlier_confidence_max; }},
      {"fragment_length", [](NoiseSpec& n) -> FieldRef { return &n.fragment_length; }},
      {"range_lateral_min", [](NoiseSpec& n) -> FieldRef { return &n.range.lateral_min; }},
      {"range_lateral_max", [](NoiseSpec& n) -> FieldRef { return &n.range.lateral_max; }},
      {"range_longitudinal_min",
       [](NoiseSpec& n) -> FieldRef { return &n.range.longitudinal_min; }},
      {"range_longitudinal_max",
       [](NoiseSpec& n) -> FieldRef { return &n.range.longitudinal_max; }},
  };
  return fields;
}

json parse_json(std::string_view text, const std::string& context) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(context + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw ConfigError(message);
  }
}

bool inside(const MapWindow& inner, const MapWindow& outer) {
  return outer.lateral_min <= inner.lateral_min && inner.lateral_max <= outer.lateral_max &&
         outer.longitudinal_min <= inner.longitudinal_min &&
         inner.longitudinal_max <= outer.longitudinal_max;
}

}  // namespace

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : run_fields()) {
    keys.push_back(f.name);
  }
  return keys;
}

void validate(const RunConfig& c) {
  const auto& m = c.map;
  require(m.voxel.voxel_size > 0.0, "voxel_size must be positive");
  require(m.filter.min_confidence >= 0.0 && m.filter.min_confidence <= 1.0,
          "min_confidence must be in [0, 1]");
  require(m.filter.max_turn_angle > 0.0 && m.filter.max_turn_angle < std::numbers::pi,
          "max_turn_angle must be in (0, pi)");
  require(m.clustering.beta_p > 0.0 && m.clustering.beta_p <= 1.0, "beta_p must be in (0, 1]");
  require(m.clustering.beta_n >= 1, "beta_n must be at least 1");
  require(m.clustering.beta_r > 0.0 && m.clustering.beta_r <= 1.0, "beta_r must be in (0, 1]");
  require(m.fit.eigen_ratio_threshold > 0.0 && m.fit.eigen_ratio_threshold < 1.0,
          "eigen_ratio_threshold must be in (0, 1)");
  require(m.fit.segment_length_quadrant > 0.0 &&
              m.fit.segment_length_quadrant <= m.fit.segment_length_primary,
          "segment lengths must satisfy 0 < quadrant <= primary");
  require(m.window.valid(), "window needs min < max on both axes");
  require(m.retention.valid(), "retention box needs min < max on both axes");
  require(inside(m.window, m.retention), "retention box must contain the window");
  const auto& l = m.layout;
  require(l.width_min > 0.0 && l.width_min < l.width_max, "need 0 < width_min < width_max");
  for (const double v : {l.width_variation_max, l.min_lane_length, l.endpoint_dist_max,
                         l.linkage_gap_max, l.width_sample_step, l.overlap_sample_step}) {
    require(v > 0.0, "layout distances must be positive");
  }
  for (const double a : {l.endpoint_angle_max, l.section_angle_max, l.linkage_angle_max}) {
    require(a > 0.0 && a <= std::numbers::pi, "layout angles must be in (0, pi]");
  }
  const auto& e = c.eval;
  require(e.match.sample_interval > 0.0 && e.match.match_radius > 0.0,
          "sample_interval and match_radius must be positive");
  require(e.match.tp_fraction > 0.0 && e.match.tp_fraction <= 1.0,
          "tp_fraction must be in (0, 1]");
  require(e.min_line_length >= 0.0, "eval_min_line_length must be nonnegative");
}

RunConfig parse_run_config(std::string_view json_text) {
  RunConfig config;
  apply_object(parse_json(json_text, "config"), config, run_fields(), "config");
  config.eval.window = config.map.window;
  validate(config);
  return config;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

std::string dump_run_config(const RunConfig& config) {
  RunConfig copy = config;
  return to_object(copy, run_fields()).dump(2) + "\n";
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  const Field<RunConfig>* field = find_field(run_fields(), key);
  if (field == nullptr) {
    throw ConfigError("unknown key '" + key + "'");
  }
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  read_value(value, field->ref(config), key);
  config.eval.window = config.map.window;
  validate(config);
}

void apply_window(RunConfig& config, std::string_view spec) {
  std::vector<double> values;
  std::stringstream in{std::string(spec)};
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw ConfigError("window value '" + item + "' is not a number");
    }
  }
  if (values.size() != 4) {
    throw ConfigError("window needs lat_min,lat_max,lon_min,lon_max");
  }
  config.map.window = {values[0], values[1], values[2], values[3]};
  config.eval.window = config.map.window;
  validate(config);
}

SimulationSpec parse_simulation_spec(std::string_view json_text) {
  const json root = parse_json(json_text, "simulation spec");
  SimulationSpec spec;
  require(root.is_object(), "simulation spec: expected a JSON object");
  for (const auto& [key, value] : root.items()) {
    if (key == "scenario") {
      apply_object(value, spec.scenario, scenario_fields(), "scenario");
    } else if (key == "noise") {
      apply_object(value, spec.noise, noise_fields(), "noise");
    } else {
      throw ConfigError("simulation spec: unknown key '" + key + "'");
    }
  }
  validate(spec.noise);
  return spec;
}

SimulationSpec load_simulation_spec(const std::string& path) {
  return parse_simulation_spec(read_file(path));
}

std::string dump_simulation_spec(const SimulationSpec& spec) {
  SimulationSpec copy = spec;
  json root;
  root["scenario"] = to_object(copy.scenario, scenario_fields());
  root["noise"] = to_object(copy.noise, noise_fields());
  return root.dump(2) + "\n";
}

}  // namespace roadfuse
