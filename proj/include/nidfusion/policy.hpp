#pragma once

#include <cstdint>
#include <string_view>

#include "nidfusion/core_types.hpp"
#include "nidfusion/nid.hpp"

namespace nidfusion {

/// Adaptive active-map window: effective = base + frames since last fusion.
struct PolicyState {
  std::int64_t base_window = 200;
  std::int64_t frames_since_fusion = 0;
  std::int64_t effective_window = 200;

  static PolicyState with_base(std::int64_t base) { return {base, 0, base}; }
};

PolicyState advance(const PolicyState& state, bool fused);

enum class Verdict { Fuse, Skip };
enum class Reason { AboveThreshold, LoopClosureOverride, LowSupport, BelowThreshold };

std::string_view to_string(Verdict v);
std::string_view to_string(Reason r);
Verdict parse_verdict(std::string_view s);
Reason parse_reason(std::string_view s);

struct Decision {
  Verdict verdict = Verdict::Fuse;
  Reason reason = Reason::AboveThreshold;
};

/// Fuse when a loop closure fired, when support is too low to trust the
/// score, or when combined >= tau, checked in that order. Throws
/// Error(InvalidInput) for tau outside [0, 1].
Decision decide(const NidScore& score, double tau, bool loop_event);

struct Timings {
  double nid_ms = 0.0;
  double render_ms = 0.0;
  double fuse_ms = 0.0;
};

/// Everything recorded about one processed frame.
struct FusionDecision {
  std::int64_t frame_index = 0;
  NidScore score;
  Verdict verdict = Verdict::Fuse;
  Reason reason = Reason::AboveThreshold;
  Timings timings;
  std::size_t surfel_count = 0;  // map size after this frame
};

struct LoopParams {
  double depth_tolerance = 0.05;  // relative
  double min_agreement = 0.8;     // fraction of co-valid pixels that must agree
  double min_support = 0.1;       // co-valid pixels as a fraction of the image
};

/// True when the inactive-map prediction overlaps enough of the live frame
/// and agrees with it in depth (fraction compared inclusively).
bool detect_local_loop(const Frame& live, const Frame& inactive_pred, const LoopParams& params);

}  // namespace nidfusion
