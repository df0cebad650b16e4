#include "nidfusion/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "nidfusion/dataset_io.hpp"
#include "nidfusion/error.hpp"

namespace nidfusion {
namespace {

// Shortest text that parses back to the same double.
std::string real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(',', pos);
    out.push_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view token, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorKind::Parse, "csv line " + std::to_string(line_no) + ": bad field '" +
                                      std::string(token) + "'");
  }
  return v;
}

}  // namespace

const char* const kFramesCsvHeader =
    "index,nid_rgb,nid_depth,combined,verdict,reason,surfel_count,nid_ms,render_ms,fuse_ms";

const char* const kSweepCsvHeader =
    "tau,alpha,frames_total,frames_fused,frames_skipped,fused_fraction,surfel_count,mean_nid,"
    "mean_nid_ms,mean_render_ms,mean_fuse_ms";

ErrorStats depth_reprojection_error(const SurfelMap& map, std::span<const PosedFrame> samples,
                                    const Intrinsics& intr, const RenderParams& params) {
  if (map.empty()) throw Error(ErrorKind::InvalidInput, "depth_reprojection_error: empty map");
  const auto ids = map.all_ids();
  std::vector<double> errors;
  for (const PosedFrame& s : samples) {
    const Prediction p = predict_view(map, ids, s.pose, intr, params);
    for (std::size_t i = 0; i < p.frame.depth.size(); ++i) {
      const double dl = s.frame.depth[i];
      const double dp = p.frame.depth[i];
      if (dl > 0.0 && dp > 0.0) errors.push_back(std::abs(dp - dl));
    }
  }
  if (errors.empty()) throw Error(ErrorKind::NoOverlap, "no-overlap: no co-valid pixels in any sample");

  ErrorStats out;
  out.pixels = errors.size();
  double sum = 0.0;
  for (double e : errors) sum += e;
  out.mean = sum / static_cast<double>(errors.size());
  std::sort(errors.begin(), errors.end());
  const std::size_t n = errors.size();
  out.median = n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  out.p95 = errors[std::max<std::size_t>(rank, 1) - 1];
  return out;
}

Summary summarize(const RunReport& report) {
  if (report.decisions.empty()) throw Error(ErrorKind::InvalidInput, "summarize: empty report");
  Summary s;
  s.tau = report.tau;
  s.alpha = report.alpha;
  s.frames_total = report.decisions.size();
  double nid = 0.0, nid_ms = 0.0, render_ms = 0.0, fuse_ms = 0.0;
  for (const auto& d : report.decisions) {
    if (d.verdict == Verdict::Fuse) ++s.frames_fused;
    nid += d.score.combined;
    nid_ms += d.timings.nid_ms;
    render_ms += d.timings.render_ms;
    fuse_ms += d.timings.fuse_ms;
  }
  const double n = static_cast<double>(s.frames_total);
  s.frames_skipped = s.frames_total - s.frames_fused;
  s.fused_fraction = static_cast<double>(s.frames_fused) / n;
  s.surfel_count = report.map.size();
  s.mean_nid = nid / n;
  s.mean_nid_ms = nid_ms / n;
  s.mean_render_ms = render_ms / n;
  s.mean_fuse_ms = fuse_ms / n;
  return s;
}

std::string format_summary(const Summary& s) {
  std::string out;
  out += "tau=" + real(s.tau) + "\n";
  out += "alpha=" + real(s.alpha) + "\n";
  out += "frames_total=" + std::to_string(s.frames_total) + "\n";
  out += "frames_fused=" + std::to_string(s.frames_fused) + "\n";
  out += "frames_skipped=" + std::to_string(s.frames_skipped) + "\n";
  out += "fused_fraction=" + real(s.fused_fraction) + "\n";
  out += "surfel_count=" + std::to_string(s.surfel_count) + "\n";
  out += "mean_nid=" + real(s.mean_nid) + "\n";
  out += "mean_nid_ms=" + real(s.mean_nid_ms) + "\n";
  out += "mean_render_ms=" + real(s.mean_render_ms) + "\n";
  out += "mean_fuse_ms=" + real(s.mean_fuse_ms) + "\n";
  return out;
}

std::string format_frames_csv(std::span<const FusionDecision> decisions, bool timings) {
  std::string out = kFramesCsvHeader;
  out += '\n';
  for (const auto& d : decisions) {
    out += std::to_string(d.frame_index);
    for (double v : {d.score.nid_rgb, d.score.nid_depth, d.score.combined}) out += ',' + real(v);
    out += ',';
    out += to_string(d.verdict);
    out += ',';
    out += to_string(d.reason);
    out += ',' + std::to_string(d.surfel_count);
    for (double v : {d.timings.nid_ms, d.timings.render_ms, d.timings.fuse_ms}) {
      out += ',' + real(timings ? v : 0.0);
    }
    out += '\n';
  }
  return out;
}

std::vector<FusionDecision> parse_frames_csv(std::string_view text) {
  std::vector<FusionDecision> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kFramesCsvHeader) throw Error(ErrorKind::Parse, "csv: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 10) {
      throw Error(ErrorKind::Parse, "csv line " + std::to_string(line_no) + ": expected 10 fields");
    }
    FusionDecision d;
    d.frame_index = parse_field<std::int64_t>(f[0], line_no);
    d.score.nid_rgb = parse_field<double>(f[1], line_no);
    d.score.nid_depth = parse_field<double>(f[2], line_no);
    d.score.combined = parse_field<double>(f[3], line_no);
    d.verdict = parse_verdict(f[4]);
    d.reason = parse_reason(f[5]);
    d.surfel_count = parse_field<std::size_t>(f[6], line_no);
    d.timings.nid_ms = parse_field<double>(f[7], line_no);
    d.timings.render_ms = parse_field<double>(f[8], line_no);
    d.timings.fuse_ms = parse_field<double>(f[9], line_no);
    out.push_back(d);
  }
  if (line_no == 0) throw Error(ErrorKind::Parse, "csv: missing header");
  return out;
}

void emit_csv(std::span<const FusionDecision> decisions, const std::filesystem::path& path,
              bool timings) {
  write_text_file(path, format_frames_csv(decisions, timings));
}

std::vector<SweepRow> emit_sweep(std::span<const double> taus, std::span<const double> alphas,
                                 const PipelineConfig& base, const Intrinsics& intr,
                                 std::size_t count, const FrameSource& source) {
  std::vector<SweepRow> rows;
  rows.reserve(taus.size() * alphas.size());
  for (double tau : taus) {
    for (double alpha : alphas) {
      PipelineConfig cfg = base;
      cfg.tau = tau;
      cfg.disable_gating = false;
      cfg.nid.alpha = alpha;
      const RunReport report = run_sequence(intr, count, source, cfg);
      rows.push_back({tau, alpha, summarize(report)});
    }
  }
  return rows;
}

std::string format_sweep_csv(std::span<const SweepRow> rows, bool timings) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    const Summary& s = r.summary;
    out += real(r.tau) + ',' + real(r.alpha) + ',' + std::to_string(s.frames_total) + ',' +
           std::to_string(s.frames_fused) + ',' + std::to_string(s.frames_skipped) + ',' +
           real(s.fused_fraction) + ',' + std::to_string(s.surfel_count) + ',' + real(s.mean_nid);
    for (double v : {s.mean_nid_ms, s.mean_render_ms, s.mean_fuse_ms}) {
      out += ',' + real(timings ? v : 0.0);
    }
    out += '\n';
  }
  return out;
}

}  // namespace nidfusion
