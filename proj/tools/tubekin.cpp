// tubekin: batch driver for tube kinematics analyses.

#include "tubekin/config.hpp"
#include "tubekin/dataset.hpp"
#include "tubekin/mesh_core.hpp"
#include "tubekin/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace tubekin;

namespace {

struct Common {
  std::string manifest;
  std::string config;
  std::string out;
  std::string grid;
  std::string surfaces;
  std::string threshold;
  bool no_clip = false;
};

PipelineConfig load_config(const Common& c) {
  KeyValues kv = c.config.empty() ? KeyValues::parse("") : KeyValues::load(c.config);
  if (!c.grid.empty()) kv.set("grid", c.grid);
  if (!c.surfaces.empty()) kv.set("surfaces", c.surfaces);
  if (!c.threshold.empty()) kv.set("threshold", c.threshold);
  if (c.no_clip) kv.set("clip", "false");
  PipelineConfig config = pipeline_config(kv);
  kv.reject_unused();
  return config;
}

RunOptions run_options(bool serial, bool verbose) {
  RunOptions o;
  o.policy = serial ? ExecPolicy::serial : ExecPolicy::parallel;
  if (verbose)
    o.on_stage = [](const std::string& stage, double seconds) {
      std::fprintf(stderr, "%-12s %8.2f s\n", stage.c_str(), seconds);
    };
  return o;
}

int cmd_validate(const Common& c, const RunOptions& opt) {
  const PipelineConfig config = load_config(c);
  const DatasetManifest manifest = load_manifest(c.manifest);
  const Dataset data = ingest(manifest, config.surfaces, opt.policy);
  int failures = 0;
  for (SurfaceKind s : config.surfaces) {
    const auto& frames = data.surface(s);
    for (size_t k = 0; k < frames.size(); ++k) {
      const ValidationReport r = validate_topology(frames[k]);
      if (!r.passes) {
        ++failures;
        std::printf("%s frame %zu: FAIL %s\n", to_string(s), k, r.message.c_str());
      }
    }
    if (!frames.empty()) std::printf("%s: %zu frames checked\n", to_string(s), frames.size());
  }
  std::printf("%s\n", failures == 0 ? "ok" : "invalid");
  return failures == 0 ? 0 : 1;
}

int cmd_parameterize(const Common& c, const RunOptions& opt) {
  const PipelineConfig config = load_config(c);
  const DatasetManifest manifest = load_manifest(c.manifest);
  const Dataset data = ingest(manifest, config.surfaces, opt.policy);
  const ParameterizedDataset grids = parameterize_dataset(data, config, opt);
  const OutputSummary s = write_grids(grids, data, c.out);
  std::printf("wrote %zu files to %s\n", s.files.size(), c.out.c_str());
  return 0;
}

int cmd_analyze(const Common& c, const RunOptions& opt) {
  const PipelineConfig config = load_config(c);
  const OutputSummary s = run_pipeline(c.manifest, config, c.out, opt);
  std::ifstream in(std::filesystem::path(c.out) / "table1.txt");
  std::string line;
  while (std::getline(in, line)) std::printf("%s\n", line.c_str());
  if (s.nan_cells > 0) std::fprintf(stderr, "warning: %d NaN cell(s) rendered gray\n", s.nan_cells);
  return 0;
}

int cmd_synth(const std::string& config_path, const std::string& out, const std::string& format, const RunOptions& opt) {
  KeyValues kv = config_path.empty() ? KeyValues::parse("") : KeyValues::load(config_path);
  if (!format.empty()) kv.set("format", format);
  const SynthConfig config = synth_config(kv);
  kv.reject_unused();
  const auto manifest = write_synth_dataset(out, config, opt.policy);
  std::printf("%s\n", manifest.string().c_str());
  return 0;
}

int cmd_report(const std::string& out) {
  const auto path = std::filesystem::path(out) / "summary.json";
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": not found (run analyze first)");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  std::printf("%s\n%s\n", table1_header().c_str(), j.at("table1_row").get<std::string>().c_str());
  return 0;
}

void add_common(CLI::App* app, Common& c, bool analysis_flags) {
  app->add_option("--manifest", c.manifest, "Dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  app->add_option("--surfaces", c.surfaces, "Comma list of outer, inner, lumen");
  if (!analysis_flags) return;
  app->add_option("--grid", c.grid, "Grid size NxM (default 80x50)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deforming tube kinematics from surface mesh sequences"};
  app.require_subcommand(1);
  bool serial = false, verbose = false, quiet = false;
  app.add_flag("--serial", serial, "Run every kernel on one thread");
  app.add_flag("-v,--verbose", verbose, "Print stage timings to stderr");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  Common validate_args, param_args, analyze_args;
  auto* validate = app.add_subcommand("validate", "Load a dataset and check every mesh");
  add_common(validate, validate_args, false);

  auto* parameterize = app.add_subcommand("parameterize", "Write per-frame grids and parameterization quality");
  add_common(parameterize, param_args, true);
  parameterize->add_option("--out", param_args.out, "Output directory")->required();

  auto* analyze = app.add_subcommand("analyze", "Run the full pipeline");
  add_common(analyze, analyze_args, true);
  analyze->add_option("--out", analyze_args.out, "Output directory")->required();
  analyze->add_flag("--no-clip", analyze_args.no_clip, "Eulerian domain only");
  analyze->add_option("--threshold", analyze_args.threshold, "Expansion band: gauss, p75 or both")
      ->check(CLI::IsMember({"gauss", "p75", "both"}));

  std::string synth_config_path, synth_out, synth_format;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and its manifest");
  synth->add_option("--config", synth_config_path, "Generator parameters")->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--format", synth_format, "ply_binary, ply_ascii or obj");

  std::string report_out;
  auto* report = app.add_subcommand("report", "Print the Table-1 row of an analyzed run");
  report->add_option("--out", report_out, "Directory written by analyze")->required();

  CLI11_PARSE(app, argc, argv);
  set_quiet(quiet);
  const RunOptions opt = run_options(serial, verbose);

  try {
    if (*validate) return cmd_validate(validate_args, opt);
    if (*parameterize) return cmd_parameterize(param_args, opt);
    if (*analyze) return cmd_analyze(analyze_args, opt);
    if (*synth) return cmd_synth(synth_config_path, synth_out, synth_format, opt);
    if (*report) return cmd_report(report_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
