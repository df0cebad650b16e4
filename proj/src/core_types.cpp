#include "nidfusion/core_types.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "nidfusion/error.hpp"

namespace nidfusion {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::InvalidEdges: return "invalid-edges";
    case ErrorKind::UndefinedDistribution: return "undefined-distribution";
    case ErrorKind::EmptyTrajectory: return "empty-trajectory";
    case ErrorKind::NoOverlap: return "no-overlap";
  }
  return "unknown";
}

Pose Pose::from_quaternion(const Vec3& t, double qx, double qy, double qz, double qw) {
  Pose p;
  p.rotation = Eigen::Quaterniond(qw, qx, qy, qz).toRotationMatrix();
  p.translation = t;
  return p;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

bool Pose::is_valid(double tol) const {
  const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

Vec3 se3_apply(const Pose& pose, const Vec3& point) {
  return pose.rotation * point + pose.translation;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::InvalidInput, "intrinsics: image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorKind::InvalidInput, "intrinsics: principal point outside image");
  }
}

std::optional<Pixel> project(const Intrinsics& intr, const Vec3& p_cam) {
  if (!(p_cam.z() > 0.0)) return std::nullopt;
  const double u = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
  const double v = intr.fy * p_cam.y() / p_cam.z() + intr.cy;
  if (!(u >= 0.0 && u < intr.width && v >= 0.0 && v < intr.height)) return std::nullopt;
  return Pixel{u, v};
}

Vec3 backproject(const Intrinsics& intr, const Pixel& px, double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "backproject: depth must be positive");
  }
  return {(px.u - intr.cx) * depth / intr.fx, (px.v - intr.cy) * depth / intr.fy, depth};
}

void Frame::validate(const Intrinsics& intr) const {
  if (!intensity.same_shape(depth) || depth.width() != intr.width ||
      depth.height() != intr.height) {
    throw Error(ErrorKind::DimensionMismatch,
                "frame is " + std::to_string(depth.width()) + "x" +
                    std::to_string(depth.height()) + ", camera is " +
                    std::to_string(intr.width) + "x" + std::to_string(intr.height));
  }
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!(intensity[i] >= 0.0 && intensity[i] <= 1.0) || !(depth[i] >= 0.0)) {
      throw Error(ErrorKind::InvalidInput, "frame has out-of-range intensity or depth");
    }
  }
}

}  // namespace nidfusion
