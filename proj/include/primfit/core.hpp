#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace primfit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Surface classes carried by ground-truth label maps. The first four are the
/// fittable primitive classes; Other marks freeform background surfaces and
/// Invalid marks zero-depth pixels.
enum class SurfaceClass : std::uint8_t {
  kPlane = 0,
  kSphere = 1,
  kCylinder = 2,
  kCone = 3,
  kOther = 4,
  kInvalid = 5,
};

inline bool is_primitive_class(SurfaceClass c) {
  return static_cast<std::uint8_t>(c) < 4;
}

inline const char* class_short_name(SurfaceClass c) {
  switch (c) {
    case SurfaceClass::kPlane: return "PLN";
    case SurfaceClass::kSphere: return "SPH";
    case SurfaceClass::kCylinder: return "CYL";
    case SurfaceClass::kCone: return "CON";
    case SurfaceClass::kOther: return "OTH";
    case SurfaceClass::kInvalid: return "INV";
  }
  return "???";
}

inline const char* class_name(SurfaceClass c) {
  switch (c) {
    case SurfaceClass::kPlane: return "plane";
    case SurfaceClass::kSphere: return "sphere";
    case SurfaceClass::kCylinder: return "cylinder";
    case SurfaceClass::kCone: return "cone";
    case SurfaceClass::kOther: return "other";
    case SurfaceClass::kInvalid: return "invalid";
  }
  return "?";
}

/// Rigid transform x -> R*x + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  RigidTransform operator*(const RigidTransform& rhs) const {
    RigidTransform out;
    out.rotation = rotation * rhs.rotation;
    out.translation = rotation * rhs.translation + translation;
    return out;
  }
};

/// Row-major 2D grid, pixel index = y * width + x.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  int index(int x, int y) const { return y * width_ + x; }

  T& at(int x, int y) { return data_[static_cast<std::size_t>(index(x, y))]; }
  const T& at(int x, int y) const {
    return data_[static_cast<std::size_t>(index(x, y))];
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Deterministic unit vector perpendicular to axis, used to resolve
/// projection ties for points on an axis or at a center: prefer +x, fall
/// back to +y when the axis is (anti)parallel to +x.
inline Vec3 tie_break_direction(const Vec3& axis) {
  Vec3 e = Vec3::UnitX();
  Vec3 r = e - e.dot(axis) * axis;
  if (r.squaredNorm() < 1e-18) {
    e = Vec3::UnitY();
    r = e - e.dot(axis) * axis;
  }
  return r.normalized();
}

/// Orthonormal pair (u, v) completing unit vector w to a right-handed frame.
inline std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& w) {
  Vec3 u = tie_break_direction(w);
  Vec3 v = w.cross(u);
  return {u, v};
}

}  // namespace primfit
