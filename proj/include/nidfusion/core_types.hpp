#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace nidfusion {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform stored map-from-camera: x_map = rotation * x_cam + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  /// Builds a pose from a translation and a unit quaternion (x, y, z, w order
  /// as in TUM trajectory files). The quaternion must already be normalised.
  static Pose from_quaternion(const Vec3& t, double qx, double qy, double qz, double qw);

  Pose inverse() const;

  /// True when rotation is orthonormal with det +1 within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

/// this ∘ other, i.e. (a * b)(p) = a(b(p)).
Pose compose(const Pose& a, const Pose& b);
Pose operator*(const Pose& a, const Pose& b);

Vec3 se3_apply(const Pose& pose, const Vec3& point);

struct Intrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  /// Throws Error(InvalidInput) unless fx, fy > 0 and the principal point lies
  /// inside the image.
  void validate() const;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole projection; nullopt when z <= 0 or the pixel falls outside
/// [0, width) x [0, height).
std::optional<Pixel> project(const Intrinsics& intr, const Vec3& p_cam);

/// Inverse of project for a known depth. Throws Error(InvalidInput) when
/// depth <= 0.
Vec3 backproject(const Intrinsics& intr, const Pixel& px, double depth);

/// Row-major single-channel image.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

enum class FrameKind { Live, Predicted };

/// Intensity in [0,1] and metric depth (0 marks an invalid pixel).
struct Frame {
  double timestamp = 0.0;
  Image<double> intensity;
  Image<double> depth;
  FrameKind kind = FrameKind::Live;

  Frame() = default;
  Frame(int width, int height, FrameKind k = FrameKind::Live)
      : intensity(width, height, 0.0), depth(width, height, 0.0), kind(k) {}

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }

  /// Throws Error(DimensionMismatch) if the channels disagree with `intr`,
  /// Error(InvalidInput) for out-of-range values.
  void validate(const Intrinsics& intr) const;
};

}  // namespace nidfusion
