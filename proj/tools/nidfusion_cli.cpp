// nidfusion command line: gated surfel fusion runs, tau/alpha sweeps and
// synthetic dataset generation.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nidfusion/dataset_io.hpp"
#include "nidfusion/error.hpp"
#include "nidfusion/evaluation.hpp"
#include "nidfusion/pipeline.hpp"
#include "nidfusion/synth.hpp"

namespace {

using namespace nidfusion;

// Value options whose names map one-to-one onto settings keys.
const std::vector<std::pair<std::string, std::string>> kValueOptions = {
    {"dataset", "Dataset directory (association file, rgb/, depth/)"},
    {"trajectory", "Trajectory file: ts tx ty tz qx qy qz qw"},
    {"association", "Association file name inside the dataset (default associations.txt)"},
    {"tau", "NID fusion threshold in [0,1] (default 0.8)"},
    {"alpha", "RGB weight of the combined NID (default 0.5)"},
    {"bins", "Histogram bins per axis (default 64)"},
    {"histogram-mask", "Histogram pixels: live (default) or covisible"},
    {"depth-min", "Lower depth histogram edge, metres (default 0.4)"},
    {"depth-max", "Upper depth histogram edge, metres (default 8.0)"},
    {"window", "Base active window in frames (default 200)"},
    {"stride", "Pixel subsampling stride for fusion (default 1)"},
    {"force-loop-frames", "Comma-separated frame indices treated as loop closures"},
    {"fx", "Focal length x"},
    {"fy", "Focal length y"},
    {"cx", "Principal point x"},
    {"cy", "Principal point y"},
    {"width", "Image width"},
    {"height", "Image height"},
    {"depth-scale", "Depth counts per metre (default 5000)"},
    {"max-dt", "Max |dt| between frame and pose, seconds (default 0.02)"},
    {"min-support", "Minimum co-visible fraction for a trusted NID (default 0.1)"},
    {"depth-tolerance", "Relative depth agreement tolerance (default 0.05)"},
    {"normal-tolerance", "Normal agreement tolerance, degrees (default 30)"},
    {"normal-step", "Pixel offset of the depth differences used for normals (default 1)"},
    {"loop-agreement", "Depth agreement fraction that triggers a local loop (default 0.8)"},
    {"threads", "Worker threads, 0 = all cores"},
    {"max-frames", "Process at most this many frames"},
};

struct CommonOptions {
  std::map<std::string, std::string> values;
  bool disable_gating = false;
  bool no_loop_detection = false;
  bool no_timings = false;
  std::string config_file;
  std::map<std::string, CLI::Option*> handles;
  CLI::Option* gating_flag = nullptr;
};

void add_common_options(CLI::App& cmd, CommonOptions& o) {
  for (const auto& [name, help] : kValueOptions) {
    o.handles[name] = cmd.add_option("--" + name, o.values[name], help);
  }
  o.gating_flag = cmd.add_flag("--disable-gating", o.disable_gating, "Fuse every frame (same as tau 0)");
  cmd.add_flag("--no-loop-detection", o.no_loop_detection, "Disable local loop detection");
  cmd.add_flag("--no-timings", o.no_timings, "Write zeros in CSV timing columns");
  cmd.add_option("--config", o.config_file, "key = value file mirroring the flags; flags win");
}

PipelineConfig resolve(const CommonOptions& o) {
  Settings settings;
  if (!o.config_file.empty()) settings = parse_settings(read_text_file(o.config_file));
  for (const auto& [name, opt] : o.handles) {
    if (opt->count() > 0) settings[name] = o.values.at(name);
  }
  if (o.disable_gating) settings["disable-gating"] = "true";
  if (o.no_loop_detection) settings["loop-detection"] = "false";
  if (o.no_timings) settings["timings"] = "false";
  return resolve_config(settings);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(pos, end - pos);
    if (!item.empty()) out.push_back(std::stod(item));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

int cmd_run(const CommonOptions& o, const std::string& out_dir) {
  PipelineConfig cfg = resolve(o);
  if (!out_dir.empty()) cfg.out = out_dir;
  if (cfg.out.empty()) throw Error(ErrorKind::InvalidInput, "--out is required");
  const RunReport report = run(cfg);
  write_run_outputs(report, cfg.out, cfg.csv_timings);
  const Summary s = summarize(report);
  std::printf("frames %zu  fused %zu  skipped %zu  dropped %zu  surfels %zu  mean NID %.4f\n",
              s.frames_total, s.frames_fused, s.frames_skipped, report.dropped_frames,
              s.surfel_count, s.mean_nid);
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& taus, const std::string& alphas,
              const std::string& out_file) {
  const PipelineConfig cfg = resolve(o);
  const auto records = parse_association(read_text_file(cfg.dataset / cfg.association));
  const auto trajectory = parse_trajectory(read_text_file(cfg.trajectory));
  const Association assoc = associate_poses(records, trajectory, cfg.max_dt);
  const FrameSource source = [&](std::size_t i) {
    const PosedRecord& pr = assoc.frames[i];
    return PosedFrame{load_frame(cfg.dataset, pr.record, cfg.depth_scale), pr.pose};
  };
  const auto tau_list = parse_list(taus);
  const auto alpha_list = parse_list(alphas);
  const auto rows = emit_sweep(tau_list, alpha_list, cfg, cfg.intrinsics, assoc.frames.size(), source);
  const std::string csv = format_sweep_csv(rows, cfg.csv_timings);
  if (out_file.empty()) {
    std::cout << csv;
  } else {
    write_text_file(out_file, csv);
  }
  return 0;
}

int cmd_synth(const std::string& spec_file, const std::string& out_dir) {
  const auto spec = synth::parse_sequence_spec(read_text_file(spec_file));
  const std::size_t n = synth::synthesize_sequence(spec, out_dir);
  std::printf("wrote %zu frames to %s\n", n, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NID-gated surfel fusion"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_out;
  CLI::App* run_cmd = app.add_subcommand("run", "Fuse a posed RGB-D sequence with NID frame gating");
  add_common_options(*run_cmd, run_opts);
  run_cmd->add_option("--out", run_out, "Output directory (frames.csv, map.ply, summary.txt)");

  CommonOptions sweep_opts;
  std::string taus = "0.7,0.8,0.9";
  std::string alphas = "0.5";
  std::string sweep_out;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a grid of tau x alpha and emit one CSV row each");
  add_common_options(*sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--taus", taus, "Comma-separated thresholds");
  sweep_cmd->add_option("--alphas", alphas, "Comma-separated RGB weights");
  sweep_cmd->add_option("--out", sweep_out, "CSV output file (stdout if omitted)");

  std::string spec_file;
  std::string synth_out;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Render a synthetic dataset from a JSON spec");
  synth_cmd->add_option("--spec", spec_file, "Sequence description (JSON)")->required();
  synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_opts, run_out);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, taus, alphas, sweep_out);
    if (*synth_cmd) return cmd_synth(spec_file, synth_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
