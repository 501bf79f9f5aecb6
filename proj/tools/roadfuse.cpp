#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "roadfuse/config.hpp"
#include "roadfuse/eval.hpp"
#include "roadfuse/io.hpp"
#include "roadfuse/local_map.hpp"
#include "roadfuse/logging.hpp"
#include "roadfuse/sim.hpp"

using namespace roadfuse;

namespace {

enum ExitCode { kOk = 0, kConfigFailure = 2, kIoFailure = 3, kDataFailure = 4 };

struct ConfigOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string window;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run configuration");
    app->add_option("--set", overrides, "key=value override (repeatable)");
    app->add_option("--window", window, "output window lat_min,lat_max,lon_min,lon_max");
  }

  RunConfig resolve() const {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    config.eval.window = config.map.window;
    for (const std::string& o : overrides) {
      apply_override(config, o);
    }
    if (!window.empty()) {
      apply_window(config, window);
    }
    validate(config);
    return config;
  }
};

std::vector<MapSnapshot> run_pipeline(const std::vector<FrameInput>& frames,
                                      const RunConfig& config) {
  LocalMap map(config.map);
  std::vector<MapSnapshot> snapshots;
  snapshots.reserve(frames.size());
  for (const FrameInput& frame : frames) {
    snapshots.push_back(map.process_frame(frame));
  }
  return snapshots;
}

std::string fmt_opt(const std::optional<double>& v, int precision = 2) {
  if (!v) {
    return "n/a";
  }
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.*f", precision, *v);
  return buffer;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) {
    return 0.0;
  }
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

int cmd_simulate(const std::string& spec_path, const std::string& kind,
                 std::optional<std::uint64_t> seed, std::optional<std::size_t> frames,
                 const std::string& frames_out, const std::string& gt_out) {
  SimulationSpec spec = spec_path.empty() ? SimulationSpec{} : load_simulation_spec(spec_path);
  if (!kind.empty()) {
    const auto parsed = parse_scenario_kind(kind);
    if (!parsed) {
      throw ConfigError("unknown scenario kind '" + kind + "'");
    }
    spec.scenario.kind = *parsed;
  }
  if (seed) {
    spec.scenario.seed = *seed;
  }
  if (frames) {
    spec.scenario.frames = *frames;
  }
  const Scenario scenario = build_scenario(spec.scenario);
  const auto stream = render_stream(scenario, spec.noise);
  write_frames(frames_out, stream);
  write_gt(gt_out, scenario.gt);
  log().info("wrote {} frames and {} GT lines", stream.size(), scenario.gt.lines.size());
  return kOk;
}

int cmd_run(const RunConfig& config, const std::string& input, const std::string& output,
            bool timings, const std::string& dump_config) {
  const auto frames = read_frames(input);
  std::ofstream out(output, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + output);
  }
  LocalMap map(config.map);
  for (const FrameInput& frame : frames) {
    write_snapshot(out, map.process_frame(frame), {timings});
  }
  if (!dump_config.empty()) {
    write_text(dump_config, dump_run_config(config));
  }
  return kOk;
}

int cmd_eval(const RunConfig& config, const std::string& input, const std::string& gt_path,
             bool raw, const std::string& output, const std::string& label) {
  const GtMap gt = read_gt(gt_path);
  const auto gt_lines = gt.typed_lines();
  const EvalResult result = raw ? evaluate_raw_frames(read_frames(input), gt_lines, config.eval)
                                : evaluate_snapshots(read_snapshots(input), gt_lines, config.eval);
  const std::string text = metrics_json(result, label);
  if (output.empty()) {
    const MetricsSummary& t = result.total.total;
    std::cout << "P " << fmt_opt(t.precision()) << "  R " << fmt_opt(t.recall()) << "  F1 "
              << fmt_opt(t.f1()) << "  ACD " << fmt_opt(t.acd(), 4) << "  (TP " << t.tp
              << ", FP " << t.fp << ", FN " << t.fn << ")\n";
  } else {
    write_text(output, text);
  }
  return kOk;
}

int cmd_profile(const RunConfig& config, const std::string& input, const std::string& output) {
  const auto frames = read_frames(input);
  const auto snapshots = run_pipeline(frames, config);
  std::map<std::string, std::vector<double>> stages;
  const std::vector<std::string> order = {"preprocess", "integrate", "reliable", "cluster",
                                          "layout",     "evict",     "total"};
  for (const MapSnapshot& s : snapshots) {
    const StageTimings& t = s.stats.timings;
    stages["preprocess"].push_back(t.preprocess_ms);
    stages["integrate"].push_back(t.integrate_ms);
    stages["reliable"].push_back(t.reliable_ms);
    stages["cluster"].push_back(t.cluster_ms);
    stages["layout"].push_back(t.layout_ms);
    stages["evict"].push_back(t.evict_ms);
    stages["total"].push_back(t.total_ms);
  }
  nlohmann::json report = nlohmann::json::object();
  std::printf("%-12s %10s %10s %10s   (ms over %zu frames)\n", "stage", "mean", "p50", "p99",
              snapshots.size());
  for (const std::string& name : order) {
    const auto& v = stages[name];
    double mean = 0.0;
    for (const double x : v) {
      mean += x;
    }
    mean = v.empty() ? 0.0 : mean / static_cast<double>(v.size());
    const double p50 = percentile(v, 0.5);
    const double p99 = percentile(v, 0.99);
    std::printf("%-12s %10.2f %10.2f %10.2f\n", name.c_str(), mean, p50, p99);
    report[name] = {{"mean", mean}, {"p50", p50}, {"p99", p99}};
  }
  if (!output.empty()) {
    write_text(output, report.dump(2) + "\n");
  }
  return kOk;
}

// "key=v1,v2,..." -> (key, [v1, v2, ...])
std::pair<std::string, std::vector<std::string>> parse_vary(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw ConfigError("--vary expects key=v1,v2,...");
  }
  std::vector<std::string> values;
  std::stringstream in(text.substr(eq + 1));
  std::string item;
  while (std::getline(in, item, ',')) {
    values.push_back(item);
  }
  return {text.substr(0, eq), values};
}

int cmd_ablate(const RunConfig& base, const std::string& input, const std::string& gt_path,
               const std::vector<std::string>& vary, bool raw_baseline,
               const std::string& output) {
  const auto frames = read_frames(input);
  const auto gt_lines = read_gt(gt_path).typed_lines();
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const std::string& v : vary) {
    axes.push_back(parse_vary(v));
  }
  std::vector<std::vector<std::string>> grid{{}};
  for (const auto& [key, values] : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& row : grid) {
      for (const std::string& value : values) {
        auto extended = row;
        extended.push_back(key + "=" + value);
        next.push_back(std::move(extended));
      }
    }
    grid = std::move(next);
  }

  std::ostringstream table;
  table << "setting,precision,recall,f1,acd,tp,fp,fn\n";
  auto add_row = [&](const std::string& name, const MetricsSummary& t) {
    table << name << ',' << fmt_opt(t.precision()) << ',' << fmt_opt(t.recall()) << ','
          << fmt_opt(t.f1()) << ',' << fmt_opt(t.acd(), 4) << ',' << t.tp << ',' << t.fp << ','
          << t.fn << '\n';
  };
  if (raw_baseline) {
    add_row("raw", evaluate_raw_frames(frames, gt_lines, base.eval).total.total);
  }
  for (const auto& row : grid) {
    RunConfig config = base;
    std::string name;
    for (const std::string& assignment : row) {
      apply_override(config, assignment);
      name += (name.empty() ? "" : " ") + assignment;
    }
    const auto snapshots = run_pipeline(frames, config);
    add_row(name.empty() ? "defaults" : name,
            evaluate_snapshots(snapshots, gt_lines, config.eval).total.total);
  }
  if (output.empty()) {
    std::cout << table.str();
  } else {
    write_text(output, table.str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online temporal fusion of road-marking detections into a local vector map"};
  app.require_subcommand(1);

  ConfigOptions config_options;

  std::string spec_path, kind, frames_out, gt_out;
  std::uint64_t seed = 0;
  std::size_t frame_count = 0;
  auto* simulate = app.add_subcommand("simulate", "generate a scenario and its frame stream");
  simulate->add_option("--spec", spec_path, "JSON scenario and noise spec");
  simulate->add_option("--kind", kind, "straight, curve, merge, split or intersection");
  auto* seed_opt = simulate->add_option("--seed", seed, "scenario seed");
  auto* frames_opt = simulate->add_option("--frames", frame_count, "number of frames");
  simulate->add_option("--output", frames_out, "frame stream (JSONL)")->required();
  simulate->add_option("--gt", gt_out, "groundtruth map (JSON)")->required();

  std::string input, output, gt_path, dump_config, label;
  bool timings = false;
  bool raw = false;
  auto* run = app.add_subcommand("run", "fuse a frame stream into per-frame map snapshots");
  config_options.attach(run);
  run->add_option("--input", input, "frame stream (JSONL)")->required();
  run->add_option("--output", output, "snapshot stream (JSONL)")->required();
  run->add_flag("--timings", timings, "include per-stage timings in snapshots");
  run->add_option("--dump-config", dump_config, "write the effective configuration");

  auto* eval = app.add_subcommand("eval", "score snapshots (or raw frames) against groundtruth");
  config_options.attach(eval);
  eval->add_option("--input", input, "snapshot or frame stream")->required();
  eval->add_option("--gt", gt_path, "groundtruth map")->required();
  eval->add_flag("--raw", raw, "input is a frame stream; score single-frame detections");
  eval->add_option("--output", output, "metrics report (JSON); summary on stdout if omitted");
  eval->add_option("--label", label, "label stored in the report");

  auto* profile = app.add_subcommand("profile", "per-stage timing distribution");
  config_options.attach(profile);
  profile->add_option("--input", input, "frame stream (JSONL)")->required();
  profile->add_option("--output", output, "timing report (JSON)");

  std::vector<std::string> vary;
  bool raw_baseline = false;
  auto* ablate = app.add_subcommand("ablate", "metrics over a parameter grid");
  config_options.attach(ablate);
  ablate->add_option("--input", input, "frame stream (JSONL)")->required();
  ablate->add_option("--gt", gt_path, "groundtruth map")->required();
  ablate->add_option("--vary", vary, "key=v1,v2,... (repeatable; cartesian product)");
  ablate->add_flag("--raw-baseline", raw_baseline, "add a row scoring raw detections");
  ablate->add_option("--output", output, "CSV table; stdout if omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(spec_path, kind,
                          seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
                          frames_opt->count() ? std::optional<std::size_t>(frame_count)
                                              : std::nullopt,
                          frames_out, gt_out);
    }
    const RunConfig config = config_options.resolve();
    if (run->parsed()) {
      return cmd_run(config, input, output, timings, dump_config);
    }
    if (eval->parsed()) {
      return cmd_eval(config, input, gt_path, raw, output, label);
    }
    if (profile->parsed()) {
      return cmd_profile(config, input, output);
    }
    if (ablate->parsed()) {
      return cmd_ablate(config, input, gt_path, vary, raw_baseline, output);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataFailure;
  }
  return kOk;
}
