#include "nidfusion/policy.hpp"

#include <cmath>
#include <string>

#include "nidfusion/error.hpp"

namespace nidfusion {

PolicyState advance(const PolicyState& state, bool fused) {
  PolicyState next = state;
  next.frames_since_fusion = fused ? 0 : state.frames_since_fusion + 1;
  next.effective_window = next.base_window + next.frames_since_fusion;
  return next;
}

std::string_view to_string(Verdict v) { return v == Verdict::Fuse ? "fuse" : "skip"; }

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::AboveThreshold: return "above-threshold";
    case Reason::LoopClosureOverride: return "loop-closure-override";
    case Reason::LowSupport: return "low-support";
    case Reason::BelowThreshold: return "below-threshold";
  }
  return "unknown";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "fuse") return Verdict::Fuse;
  if (s == "skip") return Verdict::Skip;
  throw Error(ErrorKind::Parse, "unknown verdict '" + std::string(s) + "'");
}

Reason parse_reason(std::string_view s) {
  for (Reason r : {Reason::AboveThreshold, Reason::LoopClosureOverride, Reason::LowSupport,
                   Reason::BelowThreshold}) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorKind::Parse, "unknown reason '" + std::string(s) + "'");
}

Decision decide(const NidScore& score, double tau, bool loop_event) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::InvalidInput, "tau must lie in [0, 1]");
  if (loop_event) return {Verdict::Fuse, Reason::LoopClosureOverride};
  if (score.low_support) return {Verdict::Fuse, Reason::LowSupport};
  if (score.combined >= tau) return {Verdict::Fuse, Reason::AboveThreshold};
  return {Verdict::Skip, Reason::BelowThreshold};
}

bool detect_local_loop(const Frame& live, const Frame& inactive_pred, const LoopParams& params) {
  if (!live.depth.same_shape(inactive_pred.depth)) {
    throw Error(ErrorKind::DimensionMismatch, "detect_local_loop: frames differ in size");
  }
  std::size_t covalid = 0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < live.depth.size(); ++i) {
    const double dl = live.depth[i];
    const double dp = inactive_pred.depth[i];
    if (!(dl > 0.0 && dp > 0.0)) continue;
    ++covalid;
    if (std::abs(dl - dp) <= params.depth_tolerance * dl) ++agree;
  }
  if (covalid == 0) return false;
  const double min_pixels = std::floor(params.min_support * static_cast<double>(live.depth.size()));
  if (static_cast<double>(covalid) < min_pixels) return false;
  // Inclusive: agree / covalid >= min_agreement.
  return static_cast<double>(agree) >= params.min_agreement * static_cast<double>(covalid);
}

}  // namespace nidfusion
