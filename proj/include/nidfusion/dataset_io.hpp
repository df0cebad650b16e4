#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nidfusion/core_types.hpp"
#include "nidfusion/png_io.hpp"

namespace nidfusion {

/// One line of a TUM association file: "rgb_ts rgb_path depth_ts depth_path".
/// `timestamp` is the RGB timestamp and is the frame's clock.
struct FrameRecord {
  double timestamp = 0.0;
  std::string rgb_path;
  double depth_timestamp = 0.0;
  std::string depth_path;

  bool operator==(const FrameRecord&) const = default;
};

struct TrajectoryEntry {
  double timestamp = 0.0;
  Pose pose;
};

struct PosedRecord {
  FrameRecord record;
  Pose pose;
  double dt = 0.0;  // |record ts - trajectory ts|
};

struct Association {
  std::vector<PosedRecord> frames;
  std::size_t dropped = 0;
};

constexpr double kDefaultDepthScale = 5000.0;  // counts per metre
constexpr double kDefaultMaxDt = 0.02;         // seconds
constexpr double kDefaultQuaternionTolerance = 1e-2;

/// Parses association text. '#' starts a comment; blank lines are skipped.
/// Throws Error(Parse) naming the 1-based line on malformed input or
/// non-increasing timestamps.
std::vector<FrameRecord> parse_association(std::string_view text);
std::string format_association(const std::vector<FrameRecord>& records);

/// Parses "ts tx ty tz qx qy qz qw" lines. Quaternions whose norm differs from
/// 1 by more than `quat_tolerance` are rejected; the rest are renormalised
/// before conversion. Entries are returned sorted by timestamp.
std::vector<TrajectoryEntry> parse_trajectory(
    std::string_view text, double quat_tolerance = kDefaultQuaternionTolerance);
std::string format_trajectory(const std::vector<TrajectoryEntry>& entries);

/// raw / scale per pixel; raw 0 stays 0. Requires a 16-bit single channel
/// image, otherwise Error(Format).
Image<double> depth_from_raw(const RawImage& raw, double scale = kDefaultDepthScale);
Image<double> load_depth(const std::filesystem::path& path, double scale = kDefaultDepthScale);

/// BT.601 luma (0.299 R + 0.587 G + 0.114 B) / 255. Gray images are taken
/// as R = G = B; alpha is ignored.
Image<double> intensity_from_raw(const RawImage& raw);
double luma_intensity(double r, double g, double b, double max_value = 255.0);
Image<double> load_intensity(const std::filesystem::path& path);

/// Nearest-timestamp pairing. Records further than max_dt from every pose are
/// dropped and counted. Throws Error(EmptyTrajectory) on an empty trajectory.
Association associate_poses(const std::vector<FrameRecord>& records,
                            const std::vector<TrajectoryEntry>& trajectory,
                            double max_dt = kDefaultMaxDt);

/// Loads the RGB and depth images named by `record`, relative to `root`.
Frame load_frame(const std::filesystem::path& root, const FrameRecord& record,
                 double depth_scale = kDefaultDepthScale);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace nidfusion
