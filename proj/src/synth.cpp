#include "nidfusion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "nidfusion/dataset_io.hpp"
#include "nidfusion/error.hpp"
#include "nidfusion/parallel.hpp"
#include "nidfusion/png_io.hpp"

namespace nidfusion::synth {
namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

std::int64_t cell(double x) { return static_cast<std::int64_t>(std::floor(x)); }

struct Hit {
  double depth = std::numeric_limits<double>::infinity();
  double intensity = 0.0;
};

void intersect(const Plane& pl, const Vec3& o, const Vec3& dir, Hit& hit) {
  const Vec3 n = pl.axis_u.cross(pl.axis_v);
  const double denom = n.dot(dir);
  if (std::abs(denom) < 1e-12) return;
  const double t = n.dot(pl.center - o) / denom;
  if (!(t > 0.0) || t >= hit.depth) return;
  const Vec3 rel = o + t * dir - pl.center;
  const double s = rel.dot(pl.axis_u);
  const double r = rel.dot(pl.axis_v);
  if (pl.half_u && std::abs(s) > *pl.half_u) return;
  if (pl.half_v && std::abs(r) > *pl.half_v) return;
  hit.depth = t;
  hit.intensity = pl.texture.sample(s, r);
}

void intersect(const Sphere& sp, const Vec3& o, const Vec3& dir, Hit& hit) {
  const Vec3 oc = o - sp.center;
  const double a = dir.squaredNorm();
  const double b = 2.0 * dir.dot(oc);
  const double c = oc.squaredNorm() - sp.radius * sp.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double root = std::sqrt(disc);
  double t = (-b - root) / (2.0 * a);
  if (!(t > 0.0)) t = (-b + root) / (2.0 * a);
  if (!(t > 0.0) || t >= hit.depth) return;
  const Vec3 q = (o + t * dir - sp.center) / sp.radius;
  hit.depth = t;
  hit.intensity = sp.texture.sample(std::atan2(q.z(), q.x()) * sp.radius,
                                    std::asin(std::clamp(q.y(), -1.0, 1.0)) * sp.radius);
}

Vec3 vec3(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::Parse, std::string("sequence spec: missing '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) {
    throw Error(ErrorKind::Parse, std::string("sequence spec: '") + key + "' must be a 3-vector");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Vec3 vec3_or(const json& j, const char* key, const Vec3& fallback) {
  return j.contains(key) ? vec3(j, key) : fallback;
}

Texture parse_texture(const json& j) {
  Texture t;
  const std::string type = j.value("type", "constant");
  if (type == "constant") {
    t.type = TextureType::Constant;
    t.low = t.high = j.value("value", 0.5);
  } else if (type == "checker") {
    t.type = TextureType::Checker;
  } else if (type == "stripes") {
    t.type = TextureType::Stripes;
  } else if (type == "noise") {
    t.type = TextureType::Noise;
  } else {
    throw Error(ErrorKind::Parse, "sequence spec: unknown texture type '" + type + "'");
  }
  t.period = j.value("period", t.period);
  if (t.type != TextureType::Constant) {
    t.low = j.value("low", t.low);
    t.high = j.value("high", t.high);
  }
  t.seed = j.value("seed", t.seed);
  if (!(t.period > 0.0)) throw Error(ErrorKind::Parse, "sequence spec: texture period must be > 0");
  return t;
}

// Appends `count` copies of the pose at position `after` (0-based within
// `segment`) for each dwell entry.
void apply_dwell(const json& j, std::vector<Pose>& segment) {
  if (!j.contains("dwell")) return;
  std::vector<std::pair<std::size_t, std::size_t>> dwell;
  for (const auto& d : j.at("dwell")) dwell.emplace_back(d.at("at").get<std::size_t>(), d.at("frames").get<std::size_t>());
  std::sort(dwell.begin(), dwell.end());
  std::vector<Pose> out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < segment.size(); ++i) {
    out.push_back(segment[i]);
    for (; k < dwell.size() && dwell[k].first == i; ++k) out.insert(out.end(), dwell[k].second, segment[i]);
  }
  if (k != dwell.size()) throw Error(ErrorKind::Parse, "sequence spec: dwell index beyond path");
  segment = std::move(out);
}

std::vector<Pose> expand_segment(const json& j) {
  const std::string type = j.value("type", "");
  const std::size_t frames = j.value("frames", std::size_t{1});
  if (frames == 0) throw Error(ErrorKind::Parse, "sequence spec: path segment with 0 frames");
  const Vec3 up = vec3_or(j, "up", Vec3::UnitY());
  auto fraction = [&](std::size_t i) {
    return frames == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(frames - 1);
  };

  std::vector<Pose> poses;
  if (type == "orbit") {
    const Vec3 center = vec3(j, "center");
    const Vec3 target = vec3_or(j, "target", center);
    const double radius = j.at("radius").get<double>();
    const double height = j.value("height", 0.0);
    const double a0 = j.value("start_deg", 0.0) * std::numbers::pi / 180.0;
    const double a1 = j.value("end_deg", 90.0) * std::numbers::pi / 180.0;
    for (std::size_t i = 0; i < frames; ++i) {
      const double a = a0 + (a1 - a0) * fraction(i);
      const Vec3 eye = center + Vec3(radius * std::cos(a), height, radius * std::sin(a));
      poses.push_back(look_at(eye, target, up));
    }
  } else if (type == "static") {
    poses.assign(frames, look_at(vec3(j, "eye"), vec3(j, "target"), up));
  } else if (type == "linear") {
    const Vec3 from = vec3(j, "from");
    const Vec3 to = vec3(j, "to");
    const Vec3 target = vec3(j, "target");
    for (std::size_t i = 0; i < frames; ++i) {
      poses.push_back(look_at(from + (to - from) * fraction(i), target, up));
    }
  } else {
    throw Error(ErrorKind::Parse, "sequence spec: unknown path type '" + type + "'");
  }
  apply_dwell(j, poses);
  return poses;
}

}  // namespace

double Texture::sample(double s, double t) const {
  switch (type) {
    case TextureType::Constant:
      return low;
    case TextureType::Checker:
      return ((cell(s / period) + cell(t / period)) & 1) == 0 ? high : low;
    case TextureType::Stripes:
      return (cell(s / period) & 1) == 0 ? high : low;
    case TextureType::Noise: {
      const double x = s / period;
      const double y = t / period;
      const std::int64_t ix = cell(x);
      const std::int64_t iy = cell(y);
      const double fx = smooth(x - ix);
      const double fy = smooth(y - iy);
      const double v00 = lattice_value(ix, iy, seed);
      const double v10 = lattice_value(ix + 1, iy, seed);
      const double v01 = lattice_value(ix, iy + 1, seed);
      const double v11 = lattice_value(ix + 1, iy + 1, seed);
      const double v = (v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy;
      return low + (high - low) * v;
    }
  }
  return low;
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) throw Error(ErrorKind::InvalidInput, "look_at: view direction parallel to up");
  x.normalize();
  const Vec3 y = z.cross(x);
  Pose p;
  p.rotation.col(0) = x;
  p.rotation.col(1) = y;
  p.rotation.col(2) = z;
  p.translation = eye;
  return p;
}

SequenceSpec parse_sequence_spec(std::string_view json_text) {
  SequenceSpec spec;
  try {
    const json j = json::parse(json_text);
    if (j.contains("camera")) {
      const json& c = j.at("camera");
      Intrinsics& in = spec.intrinsics;
      in.width = c.value("width", in.width);
      in.height = c.value("height", in.height);
      in.fx = c.value("fx", in.fx);
      in.fy = c.value("fy", in.fy);
      in.cx = c.value("cx", (in.width - 1) / 2.0);
      in.cy = c.value("cy", (in.height - 1) / 2.0);
    }
    spec.intrinsics.validate();
    spec.depth_scale = j.value("depth_scale", spec.depth_scale);
    spec.fps = j.value("fps", spec.fps);
    spec.start_time = j.value("start_time", spec.start_time);
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      spec.noise.sigma_a = n.value("sigma_a", 0.0);
      spec.noise.sigma_b = n.value("sigma_b", 0.0);
      spec.noise.seed = n.value("seed", spec.noise.seed);
    }
    for (const auto& p : j.value("planes", json::array())) {
      Plane pl;
      pl.center = vec3(p, "center");
      pl.axis_u = vec3_or(p, "axis_u", Vec3::UnitX()).normalized();
      pl.axis_v = vec3_or(p, "axis_v", Vec3::UnitY()).normalized();
      if (std::abs(pl.axis_u.dot(pl.axis_v)) > 1e-9) {
        throw Error(ErrorKind::Parse, "sequence spec: plane axes must be orthogonal");
      }
      if (p.contains("half_u")) pl.half_u = p.at("half_u").get<double>();
      if (p.contains("half_v")) pl.half_v = p.at("half_v").get<double>();
      if (p.contains("texture")) pl.texture = parse_texture(p.at("texture"));
      spec.scene.planes.push_back(pl);
    }
    for (const auto& s : j.value("spheres", json::array())) {
      Sphere sp;
      sp.center = vec3(s, "center");
      sp.radius = s.at("radius").get<double>();
      if (s.contains("texture")) sp.texture = parse_texture(s.at("texture"));
      spec.scene.spheres.push_back(sp);
    }
    if (!j.contains("path")) throw Error(ErrorKind::Parse, "sequence spec: missing 'path'");
    const json& path = j.at("path");
    if (path.is_array()) {
      for (const auto& seg : path) {
        auto poses = expand_segment(seg);
        spec.poses.insert(spec.poses.end(), poses.begin(), poses.end());
      }
    } else {
      spec.poses = expand_segment(path);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("sequence spec: ") + e.what());
  }
  return spec;
}

Frame render_frame(const SequenceSpec& spec, const Pose& pose, std::size_t index,
                   const RenderOptions& options) {
  const Intrinsics& in = spec.intrinsics;
  Frame f(in.width, in.height, FrameKind::Live);
  f.timestamp = spec.start_time + static_cast<double>(index) / spec.fps;

  parallel::for_chunks(static_cast<std::size_t>(in.height), parallel::chunks_for(in.height),
                       [&](unsigned, std::size_t v0, std::size_t v1) {
    for (int v = static_cast<int>(v0); v < static_cast<int>(v1); ++v) {
      for (int u = 0; u < in.width; ++u) {
        const Vec3 ray((u - in.cx) / in.fx, (v - in.cy) / in.fy, 1.0);
        const Vec3 dir = pose.rotation * ray;
        Hit hit;
        for (const auto& pl : spec.scene.planes) intersect(pl, pose.translation, dir, hit);
        for (const auto& sp : spec.scene.spheres) intersect(sp, pose.translation, dir, hit);
        if (std::isfinite(hit.depth)) {
          f.depth(u, v) = hit.depth;
          f.intensity(u, v) = std::clamp(hit.intensity, 0.0, 1.0);
        }
      }
    }
  });

  const bool noisy = options.noise && (spec.noise.sigma_a > 0.0 || spec.noise.sigma_b > 0.0);
  if (noisy) {
    std::mt19937_64 rng(splitmix64(spec.noise.seed) ^ splitmix64(index + 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < f.depth.size(); ++i) {
      const double d = f.depth[i];
      if (d > 0.0) f.depth[i] = d + gauss(rng) * (spec.noise.sigma_a + spec.noise.sigma_b * d * d);
    }
  }
  if (options.quantize) {
    for (std::size_t i = 0; i < f.depth.size(); ++i) {
      const double counts = std::round(f.depth[i] * spec.depth_scale);
      f.depth[i] = counts >= 1.0 && counts <= 65535.0 ? counts / spec.depth_scale : 0.0;
      const double g = std::round(f.intensity[i] * 255.0);
      f.intensity[i] = luma_intensity(g, g, g);
    }
  } else {
    for (auto& d : f.depth.data()) d = std::max(d, 0.0);
  }
  return f;
}

FrameSource frame_source(const SequenceSpec& spec, const RenderOptions& options) {
  return [spec, options](std::size_t i) {
    return PosedFrame{render_frame(spec, spec.poses.at(i), i, options), spec.poses.at(i)};
  };
}

std::size_t synthesize_sequence(const SequenceSpec& spec, const std::filesystem::path& out) {
  std::filesystem::create_directories(out / "rgb");
  std::filesystem::create_directories(out / "depth");
  std::vector<FrameRecord> records;
  std::vector<TrajectoryEntry> trajectory;
  const Intrinsics& in = spec.intrinsics;

  for (std::size_t i = 0; i < spec.poses.size(); ++i) {
    const Frame f = render_frame(spec, spec.poses[i], i, {.noise = true, .quantize = false});
    RawImage rgb{in.width, in.height, 3, 8, {}};
    RawImage depth{in.width, in.height, 1, 16, {}};
    rgb.samples.resize(f.intensity.size() * 3);
    depth.samples.resize(f.depth.size());
    for (std::size_t k = 0; k < f.depth.size(); ++k) {
      const auto g = static_cast<std::uint16_t>(std::round(f.intensity[k] * 255.0));
      rgb.samples[3 * k] = rgb.samples[3 * k + 1] = rgb.samples[3 * k + 2] = g;
      const double counts = std::round(f.depth[k] * spec.depth_scale);
      depth.samples[k] = counts >= 1.0 && counts <= 65535.0 ? static_cast<std::uint16_t>(counts) : 0;
    }
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    write_png(out / "rgb" / name, rgb);
    write_png(out / "depth" / name, depth);
    records.push_back({f.timestamp, std::string("rgb/") + name, f.timestamp, std::string("depth/") + name});
    trajectory.push_back({f.timestamp, spec.poses[i]});
  }

  write_text_file(out / "associations.txt", "# timestamp rgb timestamp depth\n" + format_association(records));
  write_text_file(out / "groundtruth.txt", "# timestamp tx ty tz qx qy qz qw\n" + format_trajectory(trajectory));
  char camera[256];
  std::snprintf(camera, sizeof(camera),
                "fx = %.17g\nfy = %.17g\ncx = %.17g\ncy = %.17g\nwidth = %d\nheight = %d\n"
                "depth-scale = %.17g\n",
                in.fx, in.fy, in.cx, in.cy, in.width, in.height, spec.depth_scale);
  write_text_file(out / "camera.txt", camera);
  return spec.poses.size();
}

}  // namespace nidfusion::synth
