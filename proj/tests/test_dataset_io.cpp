#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nidfusion/dataset_io.hpp"
#include "nidfusion/error.hpp"
#include "nidfusion/png_io.hpp"

using namespace nidfusion;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidInput;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "nidfusion_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("association line parses into one record") {
  const auto recs = parse_association(
      "1305031102.175304 rgb/1305031102.175304.png 1305031102.160407 depth/1305031102.160407.png\n");
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].timestamp == doctest::Approx(1305031102.175304).epsilon(1e-15));
  CHECK(recs[0].rgb_path == "rgb/1305031102.175304.png");
  CHECK(recs[0].depth_timestamp == doctest::Approx(1305031102.160407).epsilon(1e-15));
  CHECK(recs[0].depth_path == "depth/1305031102.160407.png");
}

TEST_CASE("association comments and blank lines are skipped") {
  const auto recs = parse_association("# header\n\n1.0 a.png 1.0 b.png\n  \n2.0 c.png 2.0 d.png\n");
  CHECK(recs.size() == 2);
}

TEST_CASE("malformed association lines name the line") {
  try {
    parse_association("1.0 a.png 1.0 b.png\n2.0 c.png 2.0\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(kind_of([] { parse_association("x a.png 1.0 b.png\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_association("2.0 a 2.0 b\n1.0 c 1.0 d\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_association("1.0 a 1.0 b\n1.0 c 1.0 d\n"); }) == ErrorKind::Parse);
}

TEST_CASE("association format round trip") {
  const std::vector<FrameRecord> recs = {{1.5, "rgb/a.png", 1.49, "depth/a.png"},
                                         {2.25, "rgb/b.png", 2.26, "depth/b.png"}};
  CHECK(parse_association(format_association(recs)) == recs);
}

TEST_CASE("trajectory parsing normalises and sorts") {
  const auto traj = parse_trajectory(
      "# ts tx ty tz qx qy qz qw\n"
      "2.0 1 2 3 0 0 0 1.001\n"
      "1.0 0 0 0 0 0 0 1\n");
  REQUIRE(traj.size() == 2);
  CHECK(traj[0].timestamp == 1.0);
  CHECK(traj[1].pose.translation == Vec3(1, 2, 3));
  CHECK(traj[1].pose.is_valid(1e-12));
}

TEST_CASE("trajectory rejects bad quaternions and short lines") {
  CHECK(kind_of([] { parse_trajectory("1.0 0 0 0 0 0 0 2\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_trajectory("1.0 0 0 0 0 0 1\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_trajectory("1.0 0 0 0 0 0 0 1.000002\n", 1e-6); }) == ErrorKind::Parse);
}

TEST_CASE("trajectory format round trip is exact") {
  const auto traj = parse_trajectory("1.25 0.1 -0.2 0.3 0.1 0.2 0.3 0.9273618495495703\n");
  const auto again = parse_trajectory(format_trajectory(traj));
  REQUIRE(again.size() == 1);
  CHECK(again[0].timestamp == traj[0].timestamp);
  CHECK((again[0].pose.translation - traj[0].pose.translation).norm() == 0.0);
  CHECK((again[0].pose.rotation - traj[0].pose.rotation).norm() < 1e-15);
}

TEST_CASE("raw depth 5000 at scale 5000 is one metre; zero stays invalid") {
  RawImage raw{2, 1, 1, 16, {5000, 0}};
  const auto d = depth_from_raw(raw, 5000.0);
  CHECK(d(0, 0) == 1.0);
  CHECK(d(1, 0) == 0.0);
}

TEST_CASE("depth must be single-channel 16-bit") {
  RawImage eight{1, 1, 1, 8, {10}};
  CHECK(kind_of([&] { depth_from_raw(eight); }) == ErrorKind::Format);
  RawImage rgb{1, 1, 3, 16, {1, 2, 3}};
  CHECK(kind_of([&] { depth_from_raw(rgb); }) == ErrorKind::Format);
}

TEST_CASE("luma of mid gray and primaries") {
  CHECK(luma_intensity(128, 128, 128) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  CHECK(luma_intensity(255, 0, 0) == doctest::Approx(0.299));
  CHECK(luma_intensity(0, 255, 0) == doctest::Approx(0.587));
  CHECK(luma_intensity(0, 0, 255) == doctest::Approx(0.114));
  RawImage gray{1, 1, 1, 8, {51}};
  CHECK(intensity_from_raw(gray)(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("png round trip through disk") {
  const auto depth_path = scratch("depth16.png");
  RawImage depth{3, 2, 1, 16, {0, 1, 5000, 65535, 300, 12345}};
  write_png(depth_path, depth);
  const RawImage back = read_png(depth_path);
  CHECK(back.width == 3);
  CHECK(back.bit_depth == 16);
  CHECK(back.samples == depth.samples);
  CHECK(load_depth(depth_path)(2, 0) == 1.0);

  const auto rgb_path = scratch("rgb8.png");
  RawImage rgb{1, 1, 3, 8, {128, 128, 128}};
  write_png(rgb_path, rgb);
  CHECK(load_intensity(rgb_path)(0, 0) == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("missing or corrupt image files raise errors") {
  CHECK(kind_of([] { read_png("/nonexistent/x.png"); }) == ErrorKind::Io);
  const auto bogus = scratch("bogus.png");
  write_text_file(bogus, "not a png");
  CHECK(kind_of([&] { read_png(bogus); }) == ErrorKind::Format);
}

TEST_CASE("pose association picks the nearest timestamp and drops far frames") {
  const auto traj = parse_trajectory(
      "1.00 0 0 0 0 0 0 1\n"
      "1.10 1 0 0 0 0 0 1\n"
      "1.20 2 0 0 0 0 0 1\n");
  const std::vector<FrameRecord> recs = {{1.01, "a", 1.01, "a"},
                                         {1.05, "b", 1.05, "b"},
                                         {1.19, "c", 1.19, "c"},
                                         {1.50, "d", 1.50, "d"}};
  const auto a = associate_poses(recs, traj, 0.02);
  CHECK(a.dropped == 2);
  REQUIRE(a.frames.size() == 2);
  CHECK(a.frames[0].record.rgb_path == "a");
  CHECK(a.frames[0].pose.translation.x() == 0.0);
  CHECK(a.frames[1].pose.translation.x() == 2.0);
  CHECK(a.frames[1].dt == doctest::Approx(0.01));

  // Equidistant goes to the earlier pose.
  const auto tie = associate_poses({{1.05, "t", 1.05, "t"}}, traj, 0.1);
  CHECK(tie.frames[0].pose.translation.x() == 0.0);

  CHECK(kind_of([&] { associate_poses(recs, {}); }) == ErrorKind::EmptyTrajectory);
}

TEST_CASE("comment-only association is empty") {
  CHECK(parse_association("# comment\n").empty());
}

TEST_CASE("full-scale raw depth and luma extremes") {
  RawImage raw{1, 1, 1, 16, {65535}};
  CHECK(depth_from_raw(raw, 5000.0)(0, 0) == doctest::Approx(13.107).epsilon(1e-12));
  CHECK(luma_intensity(255, 255, 255) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(luma_intensity(0, 0, 0) == 0.0);
}

TEST_CASE("exact timestamp match has zero dt") {
  const auto traj = parse_trajectory("3.5 1 2 3 0 0 0 1\n");
  const auto a = associate_poses({{3.5, "x", 3.5, "y"}}, traj);
  REQUIRE(a.frames.size() == 1);
  CHECK(a.frames[0].dt == 0.0);
  CHECK(a.frames[0].pose.translation == Vec3(1, 2, 3));
}
