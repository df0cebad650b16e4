#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nidfusion/pipeline.hpp"

namespace nidfusion {

struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  std::size_t pixels = 0;
};

/// Renders the whole map at each sample pose and aggregates |d_pred - d_live|
/// over co-valid pixels. Throws Error(InvalidInput) for an empty map and
/// Error(NoOverlap) when no sample shares a valid pixel with the rendering.
ErrorStats depth_reprojection_error(const SurfelMap& map, std::span<const PosedFrame> samples,
                                    const Intrinsics& intr, const RenderParams& params = {});

struct Summary {
  double tau = 0.0;
  double alpha = 0.0;
  std::size_t frames_total = 0;
  std::size_t frames_fused = 0;
  std::size_t frames_skipped = 0;
  double fused_fraction = 0.0;
  std::size_t surfel_count = 0;
  double mean_nid = 0.0;
  double mean_nid_ms = 0.0;
  double mean_render_ms = 0.0;
  double mean_fuse_ms = 0.0;
};

/// Throws Error(InvalidInput) for a report with no frames.
Summary summarize(const RunReport& report);

/// "key=value" per line, in declaration order of Summary.
std::string format_summary(const Summary& s);

/// Header: index,nid_rgb,nid_depth,combined,verdict,reason,surfel_count,nid_ms,render_ms,fuse_ms
extern const char* const kFramesCsvHeader;

/// Reals are printed in the shortest form that parses back to the same double,
/// so a re-parse reproduces the report. With `timings` false the timing columns are 0.
std::string format_frames_csv(std::span<const FusionDecision> decisions, bool timings = true);
std::vector<FusionDecision> parse_frames_csv(std::string_view text);
void emit_csv(std::span<const FusionDecision> decisions, const std::filesystem::path& path,
              bool timings = true);

struct SweepRow {
  double tau = 0.0;
  double alpha = 0.0;
  Summary summary;
};

/// Runs the pipeline once per (tau, alpha) pair, tau-major. Every other
/// setting comes from `base`.
std::vector<SweepRow> emit_sweep(std::span<const double> taus, std::span<const double> alphas,
                                 const PipelineConfig& base, const Intrinsics& intr,
                                 std::size_t count, const FrameSource& source);

/// Header: tau,alpha,frames_total,frames_fused,frames_skipped,fused_fraction,
/// surfel_count,mean_nid,mean_nid_ms,mean_render_ms,mean_fuse_ms
extern const char* const kSweepCsvHeader;
std::string format_sweep_csv(std::span<const SweepRow> rows, bool timings = true);

}  // namespace nidfusion
