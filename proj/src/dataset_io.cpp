#include "nidfusion/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include "nidfusion/error.hpp"

namespace nidfusion {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Calls fn(line_number, fields) for every non-comment, non-blank line.
template <typename Fn>
void for_each_data_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    auto fields = split_ws(line);
    if (!fields.empty()) fn(line_no, fields);
    if (end == text.size()) break;
    pos = end + 1;
  }
}

double parse_number(std::string_view token, std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad number '" +
                                      std::string(token) + "'");
  }
  return value;
}

std::string format_ts(double ts) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", ts);
  return buf;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<FrameRecord> parse_association(std::string_view text) {
  std::vector<FrameRecord> records;
  for_each_data_line(text, [&](std::size_t line_no, const auto& f) {
    if (f.size() != 4) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                        std::to_string(f.size()));
    }
    FrameRecord r;
    r.timestamp = parse_number(f[0], line_no);
    r.rgb_path = std::string(f[1]);
    r.depth_timestamp = parse_number(f[2], line_no);
    r.depth_path = std::string(f[3]);
    if (!records.empty() && !(r.timestamp > records.back().timestamp)) {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": timestamps must be strictly increasing");
    }
    records.push_back(std::move(r));
  });
  return records;
}

std::string format_association(const std::vector<FrameRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += format_ts(r.timestamp) + ' ' + r.rgb_path + ' ' + format_ts(r.depth_timestamp) + ' ' +
           r.depth_path + '\n';
  }
  return out;
}

std::vector<TrajectoryEntry> parse_trajectory(std::string_view text, double quat_tolerance) {
  std::vector<TrajectoryEntry> entries;
  for_each_data_line(text, [&](std::size_t line_no, const auto& f) {
    if (f.size() != 8) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 8 fields, got " +
                                        std::to_string(f.size()));
    }
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = parse_number(f[i], line_no);
    const double norm = std::sqrt(v[4] * v[4] + v[5] * v[5] + v[6] * v[6] + v[7] * v[7]);
    if (std::abs(norm - 1.0) > quat_tolerance) {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": quaternion is not unit (norm " +
                      format_real(norm) + ")");
    }
    TrajectoryEntry e;
    e.timestamp = v[0];
    e.pose = Pose::from_quaternion(Vec3(v[1], v[2], v[3]), v[4] / norm, v[5] / norm, v[6] / norm,
                                   v[7] / norm);
    entries.push_back(e);
  });
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return entries;
}

std::string format_trajectory(const std::vector<TrajectoryEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    const Eigen::Quaterniond q(e.pose.rotation);
    const Vec3& t = e.pose.translation;
    out += format_ts(e.timestamp);
    for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
      out += ' ';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

Image<double> depth_from_raw(const RawImage& raw, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorKind::InvalidInput, "depth scale must be positive");
  if (raw.bit_depth != 16 || raw.channels != 1) {
    throw Error(ErrorKind::Format, "depth image must be 16-bit single channel (got " +
                                       std::to_string(raw.bit_depth) + "-bit, " +
                                       std::to_string(raw.channels) + " channel)");
  }
  Image<double> depth(raw.width, raw.height);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    depth[i] = raw.samples[i] == 0 ? 0.0 : raw.samples[i] / scale;
  }
  return depth;
}

Image<double> load_depth(const std::filesystem::path& path, double scale) {
  return depth_from_raw(read_png(path), scale);
}

double luma_intensity(double r, double g, double b, double max_value) {
  return std::clamp((0.299 * r + 0.587 * g + 0.114 * b) / max_value, 0.0, 1.0);
}

Image<double> intensity_from_raw(const RawImage& raw) {
  if (raw.channels < 1 || raw.channels > 4) {
    throw Error(ErrorKind::Format, "unsupported channel count for intensity image");
  }
  const double max = raw.bit_depth == 16 ? 65535.0 : 255.0;
  const bool color = raw.channels >= 3;
  Image<double> out(raw.width, raw.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint16_t* px = raw.samples.data() + i * raw.channels;
    out[i] = color ? luma_intensity(px[0], px[1], px[2], max) : luma_intensity(px[0], px[0], px[0], max);
  }
  return out;
}

Image<double> load_intensity(const std::filesystem::path& path) {
  return intensity_from_raw(read_png(path));
}

Association associate_poses(const std::vector<FrameRecord>& records,
                            const std::vector<TrajectoryEntry>& trajectory, double max_dt) {
  if (trajectory.empty()) throw Error(ErrorKind::EmptyTrajectory, "trajectory is empty");
  Association out;
  for (const auto& r : records) {
    auto it = std::lower_bound(trajectory.begin(), trajectory.end(), r.timestamp,
                               [](const TrajectoryEntry& e, double ts) { return e.timestamp < ts; });
    const TrajectoryEntry* best = nullptr;
    if (it != trajectory.end()) best = &*it;
    if (it != trajectory.begin()) {
      const TrajectoryEntry& prev = *std::prev(it);
      // Ties go to the earlier pose.
      if (!best || std::abs(prev.timestamp - r.timestamp) <= std::abs(best->timestamp - r.timestamp)) {
        best = &prev;
      }
    }
    const double dt = std::abs(best->timestamp - r.timestamp);
    if (dt > max_dt) {
      ++out.dropped;
      continue;
    }
    out.frames.push_back({r, best->pose, dt});
  }
  return out;
}

Frame load_frame(const std::filesystem::path& root, const FrameRecord& record, double depth_scale) {
  Frame f;
  f.timestamp = record.timestamp;
  f.kind = FrameKind::Live;
  f.intensity = load_intensity(root / record.rgb_path);
  f.depth = load_depth(root / record.depth_path, depth_scale);
  if (!f.intensity.same_shape(f.depth)) {
    throw Error(ErrorKind::DimensionMismatch,
                "rgb and depth sizes differ for frame at " + format_ts(record.timestamp));
  }
  return f;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace nidfusion
