#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nidfusion/core_types.hpp"
#include "nidfusion/surfel_map.hpp"

namespace nidfusion {

struct RenderParams {
  double max_splat_radius_px = 16.0;
  double depth_tolerance = 0.05;  // relative, for visibility tests
};

/// A rendered model view plus the bookkeeping fusion and visibility need.
/// Id images hold -1 where nothing was drawn.
struct Prediction {
  Frame frame;                       // kind = Predicted
  Image<std::int64_t> splat_ids;     // winner of the disc z-buffer
  Image<std::int64_t> center_ids;    // nearest surfel whose centre rounds to the pixel
  Image<double> center_depth;        // camera z of that surfel, 0 if none
};

/// Splats each surfel as a disc of radius clamp(fx * radius / z, 1, r_max)
/// pixels. Per-pixel depth is the ray intersection with the surfel's tangent
/// plane; nearest depth wins, equal depths go to the lower id. Surfels behind
/// the camera or facing away are culled. Output is independent of the worker
/// count.
Prediction predict_view(const SurfelMap& map, std::span<const SurfelId> ids, const Pose& pose,
                        const Intrinsics& intr, const RenderParams& params = {});

/// Ids whose centre lands in the image in front of the camera and whose depth
/// is within depth_tolerance * z of `rendered` at that pixel.
std::vector<SurfelId> visibility_ids(const SurfelMap& map, std::span<const SurfelId> ids,
                                     const Pose& pose, const Intrinsics& intr,
                                     const Prediction& rendered, const RenderParams& params = {});

/// Renders `ids` and tests visibility against that rendering.
std::vector<SurfelId> visibility_ids(const SurfelMap& map, std::span<const SurfelId> ids,
                                     const Pose& pose, const Intrinsics& intr,
                                     const RenderParams& params = {});

}  // namespace nidfusion
