#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "nidfusion/core_types.hpp"
#include "nidfusion/pipeline.hpp"

namespace nidfusion::synth {

enum class TextureType { Constant, Checker, Stripes, Noise };

/// 2D procedural texture over surface coordinates in metres.
struct Texture {
  TextureType type = TextureType::Constant;
  double period = 0.25;
  double low = 0.2;
  double high = 0.8;
  std::uint64_t seed = 1;

  double sample(double s, double t) const;
};

/// Rectangle spanned by two orthogonal axes through `center`; unbounded when
/// the half extents are absent. Its texture coordinates run along the axes.
struct Plane {
  Vec3 center = Vec3::Zero();
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  std::optional<double> half_u;
  std::optional<double> half_v;
  Texture texture;
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
  Texture texture;
};

struct Scene {
  std::vector<Plane> planes;
  std::vector<Sphere> spheres;
};

struct DepthNoise {
  double sigma_a = 0.0;  // metres
  double sigma_b = 0.0;  // metres per metre^2: sigma(d) = a + b d^2
  std::uint64_t seed = 7;
};

struct SequenceSpec {
  Intrinsics intrinsics{262.5, 262.5, 159.5, 119.5, 320, 240};
  double depth_scale = 5000.0;
  double fps = 30.0;
  double start_time = 0.0;
  DepthNoise noise;
  Scene scene;
  std::vector<Pose> poses;  // one per frame, map-from-camera
};

/// Camera at `eye` looking at `target`; image y points away from `up`.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitY());

/// Parses the JSON sequence description (see README for the schema) and
/// expands its camera path into per-frame poses. Throws Error(Parse).
SequenceSpec parse_sequence_spec(std::string_view json_text);

struct RenderOptions {
  bool noise = true;
  bool quantize = true;  // round to 8-bit intensity and depth_scale depth counts
};

/// Ray-casts frame `index` of the sequence at `pose`. Depth is camera z of
/// the nearest hit; misses and depths beyond the 16-bit range are 0.
Frame render_frame(const SequenceSpec& spec, const Pose& pose, std::size_t index,
                   const RenderOptions& options = {});

/// In-memory frame source over the spec's poses.
FrameSource frame_source(const SequenceSpec& spec, const RenderOptions& options = {});

/// Writes rgb/*.png, depth/*.png, associations.txt, groundtruth.txt and
/// camera.txt under `out`. Returns the number of frames written.
std::size_t synthesize_sequence(const SequenceSpec& spec, const std::filesystem::path& out);

}  // namespace nidfusion::synth
