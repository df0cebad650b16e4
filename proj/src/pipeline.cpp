#include "nidfusion/pipeline.hpp"

#include <chrono>
#include <filesystem>

#include "nidfusion/dataset_io.hpp"
#include "nidfusion/error.hpp"
#include "nidfusion/evaluation.hpp"
#include "nidfusion/parallel.hpp"

namespace nidfusion {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Restores the process-wide worker count when a run finishes.
class ThreadScope {
 public:
  explicit ThreadScope(unsigned threads) : previous_(parallel::thread_count()) {
    if (threads != 0) parallel::set_thread_count(threads);
  }
  ~ThreadScope() { parallel::set_thread_count(previous_); }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  unsigned previous_;
};

}  // namespace

NidScore select_reference_score(const NidScore& active, const std::optional<NidScore>& inactive) {
  if (!inactive || inactive->low_support) return active;
  if (active.low_support) return *inactive;
  return inactive->combined < active.combined ? *inactive : active;
}

Pipeline::Pipeline(const Intrinsics& intr, const PipelineConfig& config)
    : intr_(intr), config_(config), state_(PolicyState::with_base(config.window)) {
  intr_.validate();
  if (config_.window < 1) throw Error(ErrorKind::InvalidInput, "window must be >= 1");
  if (!(config_.tau >= 0.0 && config_.tau <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "tau must lie in [0, 1]");
  }
}

FusionDecision Pipeline::process(const Frame& live, const Pose& pose) {
  live.validate(intr_);
  if (!pose.is_valid(1e-6)) throw Error(ErrorKind::InvalidInput, "pose rotation is not orthonormal");

  const std::int64_t now = next_index_;
  FusionDecision rec;
  rec.frame_index = now;

  auto t0 = Clock::now();
  Partition part = partition(map_, now, state_.effective_window);
  Prediction active = predict_view(map_, part.active, pose, intr_, config_.render);
  std::optional<Prediction> inactive;
  if (!part.inactive.empty()) {
    inactive = predict_view(map_, part.inactive, pose, intr_, config_.render);
  }
  rec.timings.render_ms = elapsed_ms(t0);

  bool loop = config_.force_loop_frames.contains(now);
  if (!loop && config_.loop_detection && inactive) {
    loop = detect_local_loop(live, inactive->frame, config_.loop);
  }

  t0 = Clock::now();
  const NidScore active_score = frame_nid(live, active.frame, config_.nid);
  std::optional<NidScore> inactive_score;
  if (inactive) inactive_score = frame_nid(live, inactive->frame, config_.nid);
  rec.score = select_reference_score(active_score, inactive_score);
  rec.timings.nid_ms = elapsed_ms(t0);

  if (loop && inactive) {
    t0 = Clock::now();
    const auto visible = visibility_ids(map_, part.inactive, pose, intr_, *inactive, config_.render);
    if (reactivate(map_, visible, now) > 0) {
      part = partition(map_, now, state_.effective_window);
      active = predict_view(map_, part.active, pose, intr_, config_.render);
    }
    rec.timings.render_ms += elapsed_ms(t0);
  }

  const Decision d = decide(rec.score, config_.effective_tau(), loop);
  rec.verdict = d.verdict;
  rec.reason = d.reason;

  const bool fused = d.verdict == Verdict::Fuse;
  if (fused) {
    t0 = Clock::now();
    fuse_frame(map_, live, pose, intr_, active, now, config_.fusion);
    rec.timings.fuse_ms = elapsed_ms(t0);
  }
  state_ = advance(state_, fused);
  rec.surfel_count = map_.size();
  ++next_index_;
  return rec;
}

RunReport run_sequence(const Intrinsics& intr, std::size_t count, const FrameSource& source,
                       const PipelineConfig& config) {
  ThreadScope threads(config.threads);
  if (config.max_frames != 0 && config.max_frames < count) count = config.max_frames;

  RunReport report;
  report.tau = config.effective_tau();
  report.alpha = config.nid.alpha;
  Pipeline pipeline(intr, config);
  report.decisions.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    try {
      const PosedFrame pf = source(i);
      report.decisions.push_back(pipeline.process(pf.frame, pf.pose));
    } catch (const Error& e) {
      throw Error(e.kind(), "frame " + std::to_string(i) + ": " + e.what());
    }
  }
  report.map = pipeline.release_map();
  return report;
}

RunReport run(const PipelineConfig& config) {
  if (config.dataset.empty()) throw Error(ErrorKind::InvalidInput, "no dataset directory given");
  if (config.trajectory.empty()) throw Error(ErrorKind::InvalidInput, "no trajectory file given");
  config.intrinsics.validate();

  const auto records = parse_association(read_text_file(config.dataset / config.association));
  const auto trajectory = parse_trajectory(read_text_file(config.trajectory));
  const Association assoc = associate_poses(records, trajectory, config.max_dt);

  const FrameSource source = [&](std::size_t i) {
    const PosedRecord& pr = assoc.frames[i];
    return PosedFrame{load_frame(config.dataset, pr.record, config.depth_scale), pr.pose};
  };
  RunReport report = run_sequence(config.intrinsics, assoc.frames.size(), source, config);
  report.dropped_frames = assoc.dropped;
  return report;
}

void write_run_outputs(const RunReport& report, const std::filesystem::path& dir,
                       bool csv_timings) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "frames.csv", format_frames_csv(report.decisions, csv_timings));
  write_ply(report.map, dir / "map.ply");
  write_text_file(dir / "summary.txt", format_summary(summarize(report)));
}

}  // namespace nidfusion
