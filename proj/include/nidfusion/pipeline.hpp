#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nidfusion/core_types.hpp"
#include "nidfusion/nid.hpp"
#include "nidfusion/policy.hpp"
#include "nidfusion/renderer.hpp"
#include "nidfusion/surfel_map.hpp"

namespace nidfusion {

struct PipelineConfig {
  std::filesystem::path dataset;
  std::filesystem::path trajectory;
  std::filesystem::path out;
  std::string association = "associations.txt";

  Intrinsics intrinsics;
  double depth_scale = 5000.0;
  double max_dt = 0.02;

  double tau = 0.8;
  bool disable_gating = false;  // equivalent to tau = 0
  NidConfig nid;
  std::int64_t window = 200;

  FusionParams fusion;
  RenderParams render;
  LoopParams loop;
  bool loop_detection = true;
  std::set<std::int64_t> force_loop_frames;

  unsigned threads = 0;         // 0 = hardware concurrency
  bool csv_timings = true;      // false writes zeros in the timing columns
  std::size_t max_frames = 0;   // 0 = whole sequence

  double effective_tau() const { return disable_gating ? 0.0 : tau; }
};

/// Ordered key/value settings; keys are the CLI flag names without dashes.
using Settings = std::map<std::string, std::string>;

/// Parses "key = value" lines ('#' comments). Throws Error(Parse) with the
/// line number on malformed lines.
Settings parse_settings(std::string_view text);

/// Applies one setting. Throws Error(InvalidInput) for unknown keys or values
/// that do not parse.
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);

/// Defaults, then `camera.txt` from the dataset directory if present, then
/// `settings`.
PipelineConfig resolve_config(const Settings& settings);

struct PosedFrame {
  Frame frame;
  Pose pose;
};

/// Supplies frame i of a sequence on demand.
using FrameSource = std::function<PosedFrame(std::size_t)>;

struct RunReport {
  std::vector<FusionDecision> decisions;
  SurfelMap map;
  std::size_t dropped_frames = 0;
  double tau = 0.0;
  double alpha = 0.0;
};

/// Picks the reference score between the active- and inactive-map
/// predictions: the lower combined score among those with enough support,
/// else the active one.
NidScore select_reference_score(const NidScore& active, const std::optional<NidScore>& inactive);

/// Per-frame gated fusion state machine.
class Pipeline {
 public:
  Pipeline(const Intrinsics& intr, const PipelineConfig& config);

  /// Runs one frame through prediction, loop detection, scoring, the fuse/skip
  /// decision and the window update.
  FusionDecision process(const Frame& live, const Pose& pose);

  const SurfelMap& map() const { return map_; }
  SurfelMap release_map() { return std::move(map_); }
  const PolicyState& state() const { return state_; }
  std::int64_t frames_processed() const { return next_index_; }

 private:
  Intrinsics intr_;
  PipelineConfig config_;
  SurfelMap map_;
  PolicyState state_;
  std::int64_t next_index_ = 0;
};

/// Runs `count` frames from `source`. Errors are rethrown with the frame
/// index prefixed.
RunReport run_sequence(const Intrinsics& intr, std::size_t count, const FrameSource& source,
                       const PipelineConfig& config);

/// Loads the dataset and trajectory named in `config` and runs them.
RunReport run(const PipelineConfig& config);

/// Writes frames.csv, map.ply and summary.txt into `dir`.
void write_run_outputs(const RunReport& report, const std::filesystem::path& dir,
                       bool csv_timings = true);

}  // namespace nidfusion
