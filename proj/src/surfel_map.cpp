#include "nidfusion/surfel_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "nidfusion/dataset_io.hpp"
#include "nidfusion/error.hpp"
#include "nidfusion/parallel.hpp"
#include "nidfusion/renderer.hpp"

namespace nidfusion {

SurfelId SurfelMap::add(const Surfel& s) {
  surfels_.push_back(s);
  return static_cast<SurfelId>(surfels_.size() - 1);
}

std::vector<SurfelId> SurfelMap::all_ids() const {
  std::vector<SurfelId> ids(surfels_.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<SurfelId>(i);
  return ids;
}

Image<Vec3> compute_normals(const Image<double>& depth, const Intrinsics& intr,
                            double jump_tolerance, int step) {
  const int w = depth.width();
  const int h = depth.height();
  Image<Vec3> normals(w, h, Vec3::Zero());

  auto point = [&](int u, int v) {
    return backproject(intr, {static_cast<double>(u), static_cast<double>(v)}, depth(u, v));
  };

  parallel::for_chunks(static_cast<std::size_t>(h), parallel::chunks_for(h),
                       [&](unsigned, std::size_t v0, std::size_t v1) {
    for (int v = static_cast<int>(v0); v < static_cast<int>(v1); ++v) {
      for (int u = 0; u < w; ++u) {
        const double d = depth(u, v);
        if (!(d > 0.0)) continue;
        auto usable = [&](int uu, int vv) {
          if (uu < 0 || vv < 0 || uu >= w || vv >= h) return false;
          const double dn = depth(uu, vv);
          return dn > 0.0 && std::abs(dn - d) <= jump_tolerance * d;
        };
        const Vec3 p = point(u, v);

        auto difference = [&](int du, int dv, Vec3& out) {
          const bool fwd = usable(u + du, v + dv);
          const bool bwd = usable(u - du, v - dv);
          if (fwd && bwd) {
            out = point(u + du, v + dv) - point(u - du, v - dv);
          } else if (fwd) {
            out = point(u + du, v + dv) - p;
          } else if (bwd) {
            out = p - point(u - du, v - dv);
          } else {
            return false;
          }
          return true;
        };

        Vec3 n = -p.normalized();
        Vec3 dx, dy;
        if (difference(step, 0, dx) && difference(0, step, dy)) {
          const Vec3 c = dx.cross(dy);
          const double len = c.norm();
          if (len > 1e-12) {
            n = c / len;
            if (n.dot(p) > 0.0) n = -n;
          }
        }
        normals(u, v) = n;
      }
    }
  });
  return normals;
}

void merge_measurement(Surfel& s, const Vec3& position, const Vec3& normal, double radius,
                       double intensity, std::int64_t now) {
  const double w = s.confidence;
  const double inv = 1.0 / (w + 1.0);
  s.position = (w * s.position + position) * inv;
  const Vec3 n = w * s.normal + normal;
  const double len = n.norm();
  if (len > 1e-12) s.normal = n / len;
  s.radius = (w * s.radius + radius) * inv;
  s.intensity = (w * s.intensity + intensity) * inv;
  s.confidence = w + 1.0;
  s.last_seen = now;
}

namespace {

struct Measurement {
  bool valid = false;
  Vec3 position;  // map frame
  Vec3 normal;    // map frame
  double radius = 0.0;
  double intensity = 0.0;
  double depth = 0.0;
};

}  // namespace

FusionStats fuse_frame(SurfelMap& map, const Frame& frame, const Pose& pose,
                       const Intrinsics& intr, const Prediction& predicted, std::int64_t now,
                       const FusionParams& params) {
  frame.validate(intr);
  const Frame& pf = predicted.frame;
  if (!pf.depth.same_shape(frame.depth) || !predicted.center_ids.same_shape(frame.depth) ||
      !predicted.center_depth.same_shape(frame.depth)) {
    throw Error(ErrorKind::DimensionMismatch, "fuse_frame: prediction and live frame differ in size");
  }
  if (params.stride < 1) throw Error(ErrorKind::InvalidInput, "fuse_frame: stride must be >= 1");
  if (params.normal_step < 1) throw Error(ErrorKind::InvalidInput, "fuse_frame: normal_step must be >= 1");

  const int w = frame.width();
  const int h = frame.height();
  const Image<Vec3> normals = compute_normals(frame.depth, intr, params.depth_tolerance, params.normal_step);
  const double cos_tol = std::cos(params.normal_tolerance_deg * std::numbers::pi / 180.0);
  const double stride = static_cast<double>(params.stride);

  // Measurements are independent per pixel; the map updates below run in
  // raster order so the result does not depend on the worker count.
  std::vector<Measurement> meas(frame.depth.size());
  parallel::for_chunks(static_cast<std::size_t>(h), parallel::chunks_for(h),
                       [&](unsigned, std::size_t v0, std::size_t v1) {
    for (int v = static_cast<int>(v0); v < static_cast<int>(v1); ++v) {
      if (v % params.stride != 0) continue;
      for (int u = 0; u < w; u += params.stride) {
        const double d = frame.depth(u, v);
        if (!(d > 0.0)) continue;
        const Vec3 p = backproject(intr, {static_cast<double>(u), static_cast<double>(v)}, d);
        const Vec3& n = normals(u, v);
        const double view_cos = std::max(std::abs(n.dot(p.normalized())), params.min_view_cosine);
        Measurement& m = meas[static_cast<std::size_t>(v) * w + u];
        m.valid = true;
        m.position = se3_apply(pose, p);
        m.normal = pose.rotation * n;
        m.radius = stride * d * std::numbers::sqrt2 / intr.fx / view_cos;
        m.intensity = frame.intensity(u, v);
        m.depth = d;
      }
    }
  });

  FusionStats stats;
  for (std::size_t i = 0; i < meas.size(); ++i) {
    const Measurement& m = meas[i];
    if (!m.valid) continue;
    const double tol = params.depth_tolerance * m.depth;

    const std::int64_t id = predicted.center_ids[i];
    if (id >= 0 && static_cast<std::size_t>(id) < map.size()) {
      Surfel& s = map[static_cast<SurfelId>(id)];
      if (std::abs(m.depth - predicted.center_depth[i]) <= tol && s.normal.dot(m.normal) >= cos_tol) {
        merge_measurement(s, m.position, m.normal, m.radius, m.intensity, now);
        ++stats.associated;
        continue;
      }
    }
    if (pf.depth[i] > 0.0 && std::abs(m.depth - pf.depth[i]) <= tol) {
      ++stats.covered;
      continue;
    }
    Surfel s;
    s.position = m.position;
    s.normal = m.normal;
    s.radius = m.radius;
    s.intensity = m.intensity;
    s.confidence = 1.0;
    s.last_seen = now;
    map.add(s);
    ++stats.added;
  }
  map.count_fusion();
  return stats;
}

Partition partition(const SurfelMap& map, std::int64_t now, std::int64_t window) {
  if (window < 1) throw Error(ErrorKind::InvalidInput, "partition: window must be >= 1");
  Partition out;
  const auto& surfels = map.surfels();
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    if (now - surfels[i].last_seen < window) {
      out.active.push_back(static_cast<SurfelId>(i));
    } else {
      out.inactive.push_back(static_cast<SurfelId>(i));
    }
  }
  return out;
}

std::size_t reactivate(SurfelMap& map, std::span<const SurfelId> ids, std::int64_t now) {
  std::vector<SurfelId> unique(ids.begin(), ids.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  for (SurfelId id : unique) {
    if (id >= map.size()) {
      throw Error(ErrorKind::InvalidInput, "reactivate: unknown surfel id " + std::to_string(id));
    }
    map[id].last_seen = now;
  }
  return unique.size();
}

std::string format_ply(const SurfelMap& map) {
  std::string out;
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(map.size()) + "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "radius", "intensity", "confidence"}) {
    out += "property float ";
    out += name;
    out += '\n';
  }
  out += "end_header\n";
  char buf[256];
  auto f = [](double x) { return x + 0.0; };  // no "-0" in the output
  for (const Surfel& s : map.surfels()) {
    std::snprintf(buf, sizeof(buf), "%.7g %.7g %.7g %.7g %.7g %.7g %.7g %.7g %.7g\n",
                  f(s.position.x()), f(s.position.y()), f(s.position.z()), f(s.normal.x()),
                  f(s.normal.y()), f(s.normal.z()), s.radius, s.intensity, s.confidence);
    out += buf;
  }
  return out;
}

void write_ply(const SurfelMap& map, const std::filesystem::path& path) {
  write_text_file(path, format_ply(map));
}

}  // namespace nidfusion
