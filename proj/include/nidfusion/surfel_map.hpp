#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nidfusion/core_types.hpp"

namespace nidfusion {

using SurfelId = std::uint32_t;

struct Surfel {
  Vec3 position = Vec3::Zero();  // map frame, metres
  Vec3 normal = Vec3::UnitZ();   // unit length
  double radius = 0.0;
  double intensity = 0.0;
  double confidence = 1.0;
  std::int64_t last_seen = 0;  // frame index of the last fusion touching it
};

/// Growable surfel store. Surfels are never culled, so a SurfelId stays
/// valid for the lifetime of the map.
class SurfelMap {
 public:
  std::size_t size() const { return surfels_.size(); }
  bool empty() const { return surfels_.empty(); }

  const Surfel& operator[](SurfelId id) const { return surfels_[id]; }
  Surfel& operator[](SurfelId id) { return surfels_[id]; }
  const std::vector<Surfel>& surfels() const { return surfels_; }

  SurfelId add(const Surfel& s);

  /// Number of fuse_frame calls applied to this map.
  std::int64_t frame_counter() const { return frame_counter_; }
  void count_fusion() { ++frame_counter_; }

  std::vector<SurfelId> all_ids() const;

 private:
  std::vector<Surfel> surfels_;
  std::int64_t frame_counter_ = 0;
};

struct FusionParams {
  double depth_tolerance = 0.05;      // relative, |d_live - d_pred| <= tol * d_live
  double normal_tolerance_deg = 30.0;
  int stride = 1;                     // fuse every stride-th pixel in u and v
  double min_view_cosine = 0.2;       // clamp for the radius view-angle scaling
  int normal_step = 1;                // pixel offset of the normal differences
};

struct FusionStats {
  std::size_t associated = 0;  // live pixels merged into an existing surfel
  std::size_t added = 0;       // new surfels created
  std::size_t covered = 0;     // pixels already explained by a neighbouring splat
};

struct Prediction;

/// Per-pixel camera-frame normals from central differences on `depth`,
/// falling back to one-sided differences next to holes and depth jumps, and to
/// the reversed viewing ray where no neighbour is usable. Invalid pixels get
/// a zero vector.
Image<Vec3> compute_normals(const Image<double>& depth, const Intrinsics& intr,
                            double jump_tolerance = 0.05, int step = 1);

/// Fuses a live frame into the map. `predicted` must be rendered from the
/// active surfels at `pose`. Surfels touched get last_seen = now.
///
/// A live pixel is associated with the surfel whose centre projects onto that
/// pixel when depth and normal agree within tolerance; its position, normal,
/// radius and intensity become confidence-weighted averages and confidence
/// grows by 1. A pixel with no such surfel but consistent splat depth is
/// treated as already covered. Everything else becomes a new surfel.
FusionStats fuse_frame(SurfelMap& map, const Frame& frame, const Pose& pose,
                       const Intrinsics& intr, const Prediction& predicted, std::int64_t now,
                       const FusionParams& params = {});

/// Merges one measurement into `s` with weight 1.
void merge_measurement(Surfel& s, const Vec3& position, const Vec3& normal, double radius,
                       double intensity, std::int64_t now);

struct Partition {
  std::vector<SurfelId> active;
  std::vector<SurfelId> inactive;
};

/// Active iff now - last_seen < window. Throws Error(InvalidInput) for
/// window < 1.
Partition partition(const SurfelMap& map, std::int64_t now, std::int64_t window);

/// Sets last_seen = now on each distinct id and returns how many were set.
std::size_t reactivate(SurfelMap& map, std::span<const SurfelId> ids, std::int64_t now);

/// ASCII PLY with x y z nx ny nz radius intensity confidence per vertex.
std::string format_ply(const SurfelMap& map);
void write_ply(const SurfelMap& map, const std::filesystem::path& path);

}  // namespace nidfusion
