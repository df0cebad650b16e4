#include <doctest.h>

#include <algorithm>
#include <string>

#include "nidfusion/error.hpp"
#include "nidfusion/evaluation.hpp"
#include "nidfusion/pipeline.hpp"
#include "nidfusion/synth.hpp"
#include "test_support.hpp"

using namespace nidfusion;

namespace {

const char* const kScene = R"({
  "camera": {"fx": 64, "fy": 64, "cx": 39.5, "cy": 29.5, "width": 80, "height": 60},
  "noise": {"sigma_a": 0.0005, "sigma_b": 0.001, "seed": 5},
  "planes": [
    {"center": [0, 0, 0], "axis_u": [1, 0, 0], "axis_v": [0, 0, 1],
     "texture": {"type": "checker", "period": 0.3}},
    {"center": [0, 1.5, 3], "axis_u": [1, 0, 0], "axis_v": [0, 1, 0],
     "texture": {"type": "noise", "period": 0.2, "seed": 3}}
  ],
  "spheres": [{"center": [0, 0.4, 1.2], "radius": 0.35, "texture": {"type": "stripes", "period": 0.1}}],
  "path": [
    {"type": "orbit", "center": [0, 0, 1.2], "target": [0, 0.4, 1.4], "radius": 1.4, "height": 1.0,
     "start_deg": -130, "end_deg": -50, "frames": 24},
    {"type": "static", "eye": [0, 1.0, -0.2], "target": [0, 0.4, 1.4], "frames": 6}
  ]
})";

synth::SequenceSpec scene() { return synth::parse_sequence_spec(kScene); }

RunReport run_scene(const PipelineConfig& cfg, std::size_t frames = 0) {
  const auto spec = scene();
  return run_sequence(spec.intrinsics, frames ? frames : spec.poses.size(), synth::frame_source(spec), cfg);
}

std::vector<std::int64_t> fused_frames(const RunReport& r) {
  std::vector<std::int64_t> out;
  for (const auto& d : r.decisions) {
    if (d.verdict == Verdict::Fuse) out.push_back(d.frame_index);
  }
  return out;
}

}  // namespace

TEST_CASE("a one-frame sequence fuses once") {
  const RunReport r = run_scene(PipelineConfig{}, 1);
  REQUIRE(r.decisions.size() == 1);
  CHECK(r.decisions[0].verdict == Verdict::Fuse);
  CHECK(r.decisions[0].reason == Reason::LowSupport);
  CHECK_FALSE(r.map.empty());
  CHECK(r.decisions[0].surfel_count == r.map.size());
}

TEST_CASE("every frame is reported once and counts add up") {
  const RunReport r = run_scene(PipelineConfig{});
  const auto spec = scene();
  REQUIRE(r.decisions.size() == spec.poses.size());
  for (std::size_t i = 0; i < r.decisions.size(); ++i) {
    CHECK(r.decisions[i].frame_index == static_cast<std::int64_t>(i));
    if (i > 0) CHECK(r.decisions[i].surfel_count >= r.decisions[i - 1].surfel_count);
  }
  const Summary s = summarize(r);
  CHECK(s.frames_fused + s.frames_skipped == s.frames_total);
}

TEST_CASE("tau zero matches the gating-disabled baseline exactly") {
  PipelineConfig zero;
  zero.tau = 0.0;
  PipelineConfig off;
  off.disable_gating = true;
  const RunReport a = run_scene(zero);
  const RunReport b = run_scene(off);
  CHECK(fused_frames(a).size() == a.decisions.size());
  CHECK(fused_frames(a) == fused_frames(b));
  CHECK(a.map.size() == b.map.size());
  CHECK(format_ply(a.map) == format_ply(b.map));
}

TEST_CASE("fused frames shrink as tau grows when loops are off") {
  std::vector<std::int64_t> previous;
  bool first = true;
  for (double tau : {0.0, 0.3, 0.6, 0.8, 0.95}) {
    PipelineConfig cfg;
    cfg.tau = tau;
    cfg.loop_detection = false;
    const auto fused = fused_frames(run_scene(cfg));
    if (!first) CHECK(fused.size() <= previous.size());
    first = false;
    previous = fused;
  }
}

TEST_CASE("stationary camera stops fusing") {
  auto spec = synth::parse_sequence_spec(
      R"({"camera": {"fx": 64, "fy": 64, "cx": 39.5, "cy": 29.5, "width": 80, "height": 60},
          "planes": [{"center": [0, 0, 2], "axis_u": [1, 0, 0], "axis_v": [0, 1, 0],
                      "texture": {"type": "checker", "period": 0.2}}],
          "path": {"type": "static", "eye": [0.1, 0, 0], "target": [0, 0.2, 2], "frames": 50}})");
  PipelineConfig cfg;
  cfg.tau = 0.8;
  const RunReport r = run_sequence(spec.intrinsics, 50, synth::frame_source(spec), cfg);
  const auto fused = fused_frames(r);
  REQUIRE_FALSE(fused.empty());
  CHECK(fused.size() <= 3);
  CHECK(fused.back() < 3);
  CHECK(r.decisions.back().surfel_count == r.decisions[fused.back()].surfel_count);
  CHECK(r.decisions.back().score.combined < 0.1);
}

TEST_CASE("forced loop frames fuse with the override reason") {
  PipelineConfig cfg;
  cfg.tau = 0.99;
  cfg.loop_detection = false;
  cfg.force_loop_frames = {5, 27};
  const RunReport r = run_scene(cfg);
  CHECK(r.decisions[5].reason == Reason::LoopClosureOverride);
  CHECK(r.decisions[27].reason == Reason::LoopClosureOverride);
  CHECK(r.decisions[27].verdict == Verdict::Fuse);
}

TEST_CASE("reference selection takes the lower supported score") {
  NidScore active;
  active.combined = 0.9;
  active.low_support = false;
  NidScore inactive = active;
  inactive.combined = 0.4;
  CHECK(select_reference_score(active, inactive).combined == 0.4);
  CHECK(select_reference_score(active, std::nullopt).combined == 0.9);
  inactive.low_support = true;
  CHECK(select_reference_score(active, inactive).combined == 0.9);
  active.low_support = true;
  inactive.low_support = false;
  CHECK(select_reference_score(active, inactive).combined == 0.4);
}

TEST_CASE("pipeline errors carry the frame index") {
  const auto spec = scene();
  const auto src = synth::frame_source(spec);
  FrameSource bad = [&](std::size_t i) {
    PosedFrame pf = src(i);
    if (i == 3) pf.frame.depth(0, 0) = -1.0;
    return pf;
  };
  try {
    run_sequence(spec.intrinsics, 6, bad, PipelineConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("frame 3: ", 0) == 0);
    CHECK(e.kind() == ErrorKind::InvalidInput);
  }

  FrameSource wrong_size = [&](std::size_t) { return PosedFrame{Frame(10, 10), Pose::identity()}; };
  try {
    run_sequence(spec.intrinsics, 1, wrong_size, PipelineConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
    CHECK(std::string(e.what()).rfind("frame 0: ", 0) == 0);
  }
}

TEST_CASE("settings parse and apply") {
  const Settings s = parse_settings(
      "# comment\n"
      "tau = 0.7\n"
      "alpha=0.25\n"
      "\n"
      "histogram-mask = covisible\n"
      "force-loop-frames = 3,9\n"
      "loop-detection = false\n");
  PipelineConfig cfg;
  for (const auto& [k, v] : s) apply_setting(cfg, k, v);
  CHECK(cfg.tau == 0.7);
  CHECK(cfg.nid.alpha == 0.25);
  CHECK(cfg.nid.mask == HistogramMask::CoVisible);
  CHECK(cfg.force_loop_frames == std::set<std::int64_t>{3, 9});
  CHECK_FALSE(cfg.loop_detection);

  CHECK_THROWS_AS(parse_settings("tau 0.7\n"), Error);
  CHECK_THROWS_AS(apply_setting(cfg, "nonsense", "1"), Error);
  CHECK_THROWS_AS(apply_setting(cfg, "tau", "abc"), Error);
  CHECK_THROWS_AS(apply_setting(cfg, "bins", "1.5"), Error);
}

TEST_CASE("invalid configurations are rejected up front") {
  const auto spec = scene();
  PipelineConfig cfg;
  cfg.tau = 1.2;
  CHECK_THROWS_AS(Pipeline(spec.intrinsics, cfg), Error);
  cfg = PipelineConfig{};
  cfg.window = 0;
  CHECK_THROWS_AS(Pipeline(spec.intrinsics, cfg), Error);
  cfg = PipelineConfig{};
  CHECK_THROWS_AS(run(cfg), Error);
}
