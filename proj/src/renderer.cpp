#include "nidfusion/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nidfusion/parallel.hpp"

namespace nidfusion {
namespace {

constexpr double kFar = std::numeric_limits<double>::infinity();

// (depth, id) ordered lexicographically; a total order, so a per-pixel min
// over any partition of the surfels gives the same winner.
struct DepthBuffer {
  std::vector<double> depth;
  std::vector<std::int64_t> id;

  explicit DepthBuffer(std::size_t n) : depth(n, kFar), id(n, -1) {}

  void offer(std::size_t i, double d, std::int64_t s) {
    if (d < depth[i] || (d == depth[i] && s < id[i])) {
      depth[i] = d;
      id[i] = s;
    }
  }

  void merge(const DepthBuffer& other) {
    for (std::size_t i = 0; i < depth.size(); ++i) {
      if (other.id[i] >= 0) offer(i, other.depth[i], other.id[i]);
    }
  }
};

int round_px(double x) { return static_cast<int>(std::floor(x + 0.5)); }

struct CameraSurfel {
  Vec3 p;
  Vec3 n;
  double u, v;
};

// Transforms a surfel into the camera frame; false when culled.
bool to_camera(const Surfel& s, const Pose& cam_from_map, const Intrinsics& intr, CameraSurfel& out) {
  out.p = se3_apply(cam_from_map, s.position);
  if (!(out.p.z() > 0.0)) return false;
  out.n = cam_from_map.rotation * s.normal;
  if (out.n.dot(out.p) > 0.0) return false;
  out.u = intr.fx * out.p.x() / out.p.z() + intr.cx;
  out.v = intr.fy * out.p.y() / out.p.z() + intr.cy;
  return true;
}

// Depth along the ray through (u, v) where it meets the surfel's tangent
// plane, kept within `bound` of the centre depth for grazing views.
double plane_depth(const CameraSurfel& c, int u, int v, const Intrinsics& intr, double bound) {
  const double rx = (u - intr.cx) / intr.fx;
  const double ry = (v - intr.cy) / intr.fy;
  const double denom = c.n.x() * rx + c.n.y() * ry + c.n.z();
  const double z = c.p.z();
  if (std::abs(denom) <= 1e-9) return z;
  return std::clamp(c.n.dot(c.p) / denom, z - bound, z + bound);
}

double r_px_of(const Surfel& s, double z, const Intrinsics& intr, const RenderParams& params) {
  return std::clamp(intr.fx * s.radius / z, 1.0, params.max_splat_radius_px);
}

void splat(const Surfel& s, std::int64_t id, const Pose& cam_from_map, const Intrinsics& intr,
           const RenderParams& params, DepthBuffer& splats, DepthBuffer& centers) {
  CameraSurfel c;
  if (!to_camera(s, cam_from_map, intr, c)) return;
  const double z = c.p.z();
  const int w = intr.width;
  const int h = intr.height;

  const int cu = round_px(c.u);
  const int cv = round_px(c.v);
  if (cu >= 0 && cu < w && cv >= 0 && cv < h) {
    centers.offer(static_cast<std::size_t>(cv) * w + cu, z, id);
  }

  const double r_px = r_px_of(s, z, intr, params);
  const int u0 = std::max(0, static_cast<int>(std::ceil(c.u - r_px)));
  const int u1 = std::min(w - 1, static_cast<int>(std::floor(c.u + r_px)));
  const int v0 = std::max(0, static_cast<int>(std::ceil(c.v - r_px)));
  const int v1 = std::min(h - 1, static_cast<int>(std::floor(c.v + r_px)));
  if (u0 > u1 || v0 > v1) return;

  const double bound = 2.0 * std::max(s.radius, r_px * z / intr.fx);
  const double r2 = r_px * r_px;
  for (int v = v0; v <= v1; ++v) {
    const double dv = v - c.v;
    for (int u = u0; u <= u1; ++u) {
      const double du = u - c.u;
      if (du * du + dv * dv > r2) continue;
      const double d = plane_depth(c, u, v, intr, bound);
      if (!(d > 0.0)) continue;
      splats.offer(static_cast<std::size_t>(v) * w + u, d, id);
    }
  }
}

}  // namespace

Prediction predict_view(const SurfelMap& map, std::span<const SurfelId> ids, const Pose& pose,
                        const Intrinsics& intr, const RenderParams& params) {
  const std::size_t n_px = intr.pixel_count();
  const Pose cam_from_map = pose.inverse();

  const unsigned chunks = parallel::chunks_for(ids.size());
  std::vector<DepthBuffer> splats(chunks, DepthBuffer(n_px));
  std::vector<DepthBuffer> centers(chunks, DepthBuffer(n_px));
  parallel::for_chunks(ids.size(), chunks, [&](unsigned c, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      splat(map[ids[k]], ids[k], cam_from_map, intr, params, splats[c], centers[c]);
    }
  });
  for (unsigned c = 1; c < chunks; ++c) {
    splats[0].merge(splats[c]);
    centers[0].merge(centers[c]);
  }

  Prediction out;
  out.frame = Frame(intr.width, intr.height, FrameKind::Predicted);
  out.splat_ids = Image<std::int64_t>(intr.width, intr.height, -1);
  out.center_ids = Image<std::int64_t>(intr.width, intr.height, -1);
  out.center_depth = Image<double>(intr.width, intr.height, 0.0);
  const DepthBuffer& sb = splats[0];
  const DepthBuffer& cb = centers[0];
  // A pixel holding the centre of an unoccluded surfel shows that surfel
  // rather than whichever neighbouring disc reached slightly nearer.
  parallel::for_chunks(n_px, parallel::chunks_for(n_px), [&](unsigned, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (sb.id[i] < 0) continue;
      out.splat_ids[i] = sb.id[i];
      out.frame.depth[i] = sb.depth[i];
      out.frame.intensity[i] = map[static_cast<SurfelId>(sb.id[i])].intensity;
      if (cb.id[i] < 0) continue;
      out.center_ids[i] = cb.id[i];
      out.center_depth[i] = cb.depth[i];
      if (cb.id[i] == sb.id[i] ||
          std::abs(cb.depth[i] - sb.depth[i]) > params.depth_tolerance * sb.depth[i]) {
        continue;
      }
      const Surfel& s = map[static_cast<SurfelId>(cb.id[i])];
      CameraSurfel c;
      to_camera(s, cam_from_map, intr, c);
      const double bound = 2.0 * std::max(s.radius, r_px_of(s, c.p.z(), intr, params) * c.p.z() / intr.fx);
      const int u = static_cast<int>(i % static_cast<std::size_t>(intr.width));
      const int v = static_cast<int>(i / static_cast<std::size_t>(intr.width));
      out.frame.depth[i] = plane_depth(c, u, v, intr, bound);
      out.frame.intensity[i] = s.intensity;
    }
  });
  return out;
}

std::vector<SurfelId> visibility_ids(const SurfelMap& map, std::span<const SurfelId> ids,
                                     const Pose& pose, const Intrinsics& intr,
                                     const Prediction& rendered, const RenderParams& params) {
  const Pose cam_from_map = pose.inverse();
  std::vector<SurfelId> out;
  for (SurfelId id : ids) {
    CameraSurfel c;
    if (!to_camera(map[id], cam_from_map, intr, c)) continue;
    const int u = round_px(c.u);
    const int v = round_px(c.v);
    if (u < 0 || v < 0 || u >= intr.width || v >= intr.height) continue;
    const double d = rendered.frame.depth(u, v);
    if (d > 0.0 && std::abs(c.p.z() - d) <= params.depth_tolerance * c.p.z()) out.push_back(id);
  }
  return out;
}

std::vector<SurfelId> visibility_ids(const SurfelMap& map, std::span<const SurfelId> ids,
                                     const Pose& pose, const Intrinsics& intr,
                                     const RenderParams& params) {
  return visibility_ids(map, ids, pose, intr, predict_view(map, ids, pose, intr, params), params);
}

}  // namespace nidfusion
