#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "roadfuse/eval.hpp"
#include "roadfuse/local_map.hpp"
#include "roadfuse/sim.hpp"

namespace roadfuse {

// Every tunable of a run. Serialized as one flat JSON object; angles are
// in radians.
struct RunConfig {
  LocalMapConfig map;
  EvalConfig eval;
};

// Names of all keys accepted by the flat representation, in dump order.
std::vector<std::string> run_config_keys();

// Starts from defaults and applies the keys present. Unknown keys, wrong
// value types and failed validation throw ConfigError.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);

// Flat JSON of the effective configuration; parses back to the same values.
std::string dump_run_config(const RunConfig& config);

// "key=value" with the value parsed as JSON (bare words fall back to
// strings). Throws ConfigError.
void apply_override(RunConfig& config, std::string_view assignment);

// "lat_min,lat_max,lon_min,lon_max" for the output window.
void apply_window(RunConfig& config, std::string_view spec);

void validate(const RunConfig& config);

struct SimulationSpec {
  ScenarioSpec scenario;
  NoiseSpec noise;
};

// {"scenario": {...}, "noise": {...}}; both sections optional, unknown keys
// rejected.
SimulationSpec parse_simulation_spec(std::string_view json_text);
SimulationSpec load_simulation_spec(const std::string& path);
std::string dump_simulation_spec(const SimulationSpec& spec);

}  // namespace roadfuse
