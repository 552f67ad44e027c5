#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>

#include "primfit/core.hpp"

namespace primfit {

/// Infinite plane {x : normal . x = offset}, |normal| = 1.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

/// Infinite cylinder surface. axis_point is canonically the point on the
/// axis closest to the origin.
struct Cylinder {
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_dir = Vec3::UnitZ();
  double radius = 1.0;
};

/// One-sided infinite cone. axis_dir points from the apex into the opening,
/// half_angle in (0, pi/2).
struct Cone {
  Vec3 apex = Vec3::Zero();
  Vec3 axis_dir = Vec3::UnitZ();
  double half_angle = kPi / 4.0;
};

using PrimitiveModel = std::variant<Plane, Sphere, Cylinder, Cone>;

inline SurfaceClass model_class(const PrimitiveModel& m) {
  return static_cast<SurfaceClass>(m.index());
}

inline bool model_is_valid(const Plane& p) {
  return std::abs(p.normal.norm() - 1.0) <= 1e-9 && std::isfinite(p.offset);
}
inline bool model_is_valid(const Sphere& s) {
  return s.radius > 0.0 && std::isfinite(s.radius) && s.center.allFinite();
}
inline bool model_is_valid(const Cylinder& c) {
  return std::abs(c.axis_dir.norm() - 1.0) <= 1e-9 && c.radius > 0.0 &&
         std::isfinite(c.radius) && c.axis_point.allFinite();
}
inline bool model_is_valid(const Cone& c) {
  return std::abs(c.axis_dir.norm() - 1.0) <= 1e-9 && c.half_angle > 0.0 &&
         c.half_angle < kPi / 2.0 && c.apex.allFinite();
}
inline bool model_is_valid(const PrimitiveModel& m) {
  return std::visit([](const auto& v) { return model_is_valid(v); }, m);
}

// ---------------------------------------------------------------------------
// Projection

inline Vec3 project(const Plane& m, const Vec3& p) {
  return p - (m.normal.dot(p) - m.offset) * m.normal;
}

inline Vec3 project(const Sphere& m, const Vec3& p) {
  Vec3 d = p - m.center;
  double n = d.norm();
  if (n < 1e-12) return m.center + m.radius * Vec3::UnitX();
  return m.center + (m.radius / n) * d;
}

inline Vec3 project(const Cylinder& m, const Vec3& p) {
  Vec3 w = p - m.axis_point;
  double s = w.dot(m.axis_dir);
  Vec3 radial = w - s * m.axis_dir;
  double rho = radial.norm();
  Vec3 rhat = rho < 1e-12 ? tie_break_direction(m.axis_dir) : Vec3(radial / rho);
  return m.axis_point + s * m.axis_dir + m.radius * rhat;
}

inline Vec3 project(const Cone& m, const Vec3& p) {
  const double sin_a = std::sin(m.half_angle);
  const double cos_a = std::cos(m.half_angle);
  Vec3 w = p - m.apex;
  double s = w.dot(m.axis_dir);
  Vec3 radial = w - s * m.axis_dir;
  double rho = radial.norm();
  // In the (rho, s) half-plane the surface is the ray from the apex along
  // (sin_a, cos_a); points projecting behind the apex clamp to it.
  double t = rho * sin_a + s * cos_a;
  if (t <= 0.0) return m.apex;
  Vec3 rhat = rho < 1e-12 ? tie_break_direction(m.axis_dir) : Vec3(radial / rho);
  return m.apex + t * (sin_a * rhat + cos_a * m.axis_dir);
}

inline Vec3 project(const PrimitiveModel& m, const Vec3& p) {
  return std::visit([&](const auto& v) { return project(v, p); }, m);
}

// ---------------------------------------------------------------------------
// Distance

inline double distance(const Plane& m, const Vec3& p) {
  return std::abs(m.normal.dot(p) - m.offset);
}
inline double distance(const Sphere& m, const Vec3& p) {
  return std::abs((p - m.center).norm() - m.radius);
}
inline double distance(const Cylinder& m, const Vec3& p) {
  Vec3 w = p - m.axis_point;
  Vec3 radial = w - w.dot(m.axis_dir) * m.axis_dir;
  return std::abs(radial.norm() - m.radius);
}
inline double distance(const Cone& m, const Vec3& p) {
  const double sin_a = std::sin(m.half_angle);
  const double cos_a = std::cos(m.half_angle);
  Vec3 w = p - m.apex;
  double s = w.dot(m.axis_dir);
  double rho = (w - s * m.axis_dir).norm();
  double t = rho * sin_a + s * cos_a;
  if (t <= 0.0) return w.norm();
  double perp = rho * cos_a - s * sin_a;
  return std::abs(perp);
}
inline double distance(const PrimitiveModel& m, const Vec3& p) {
  return std::visit([&](const auto& v) { return distance(v, p); }, m);
}

// ---------------------------------------------------------------------------
// Signed implicit surface functions. Each has unit-length gradient away from
// its degeneracies, so the gradient at a surface point is the surface normal.
// The cone variant is the unclamped slant-plane distance.

inline double signed_offset(const Plane& m, const Vec3& p) {
  return m.normal.dot(p) - m.offset;
}
inline double signed_offset(const Sphere& m, const Vec3& p) {
  return (p - m.center).norm() - m.radius;
}
inline double signed_offset(const Cylinder& m, const Vec3& p) {
  Vec3 w = p - m.axis_point;
  return (w - w.dot(m.axis_dir) * m.axis_dir).norm() - m.radius;
}
inline double signed_offset(const Cone& m, const Vec3& p) {
  const double sin_a = std::sin(m.half_angle);
  const double cos_a = std::cos(m.half_angle);
  Vec3 w = p - m.apex;
  double s = w.dot(m.axis_dir);
  double rho = (w - s * m.axis_dir).norm();
  return rho * cos_a - s * sin_a;
}
inline double signed_offset(const PrimitiveModel& m, const Vec3& p) {
  return std::visit([&](const auto& v) { return signed_offset(v, p); }, m);
}

// ---------------------------------------------------------------------------
// Surface normals at on-surface query points

/// Plane normal oriented toward the halfspace containing the origin when the
/// origin is off-plane; with the scanner at the origin this makes visible
/// surfaces face the camera.
inline Vec3 surface_normal_at(const Plane& m, const Vec3&) {
  return m.offset > 0.0 ? Vec3(-m.normal) : m.normal;
}

inline Vec3 surface_normal_at(const Sphere& m, const Vec3& q) {
  Vec3 d = q - m.center;
  double n = d.norm();
  if (n < 1e-9) throw std::domain_error("degenerate normal query");
  return d / n;
}

inline Vec3 surface_normal_at(const Cylinder& m, const Vec3& q) {
  Vec3 w = q - m.axis_point;
  Vec3 radial = w - w.dot(m.axis_dir) * m.axis_dir;
  double rho = radial.norm();
  if (rho < 1e-9) throw std::domain_error("degenerate normal query");
  return radial / rho;
}

inline Vec3 surface_normal_at(const Cone& m, const Vec3& q) {
  const double sin_a = std::sin(m.half_angle);
  const double cos_a = std::cos(m.half_angle);
  Vec3 w = q - m.apex;
  double s = w.dot(m.axis_dir);
  Vec3 radial = w - s * m.axis_dir;
  double rho = radial.norm();
  if (rho < 1e-9) throw std::domain_error("degenerate normal query");
  return cos_a * (radial / rho) - sin_a * m.axis_dir;
}

inline Vec3 surface_normal_at(const PrimitiveModel& m, const Vec3& q) {
  return std::visit([&](const auto& v) { return surface_normal_at(v, q); }, m);
}

// ---------------------------------------------------------------------------
// Canonicalization. Cylinder axes and plane normals are sign-ambiguous;
// comparisons and serialization use the representative whose direction has
// positive z, then y, then x component.

inline Vec3 canonical_direction(const Vec3& v) {
  if (v.z() != 0.0) return v.z() > 0.0 ? v : Vec3(-v);
  if (v.y() != 0.0) return v.y() > 0.0 ? v : Vec3(-v);
  return v.x() >= 0.0 ? v : Vec3(-v);
}

inline Plane canonicalized(const Plane& p) {
  Vec3 n = canonical_direction(p.normal);
  return Plane{n, n.dot(p.normal) > 0.0 ? p.offset : -p.offset};
}

inline Cylinder canonicalized(const Cylinder& c) {
  Cylinder out = c;
  out.axis_dir = canonical_direction(c.axis_dir);
  out.axis_point = c.axis_point - c.axis_point.dot(out.axis_dir) * out.axis_dir;
  return out;
}

inline Sphere canonicalized(const Sphere& s) { return s; }
inline Cone canonicalized(const Cone& c) { return c; }

inline PrimitiveModel canonicalized(const PrimitiveModel& m) {
  return std::visit([](const auto& v) { return PrimitiveModel(canonicalized(v)); }, m);
}

// ---------------------------------------------------------------------------
// Rigid motion of models: surfaces map pointwise, x -> R x + t.

inline Plane transformed(const Plane& p, const RigidTransform& rt) {
  Vec3 n = rt.rotate(p.normal);
  return Plane{n, p.offset + n.dot(rt.translation)};
}
inline Sphere transformed(const Sphere& s, const RigidTransform& rt) {
  return Sphere{rt.apply(s.center), s.radius};
}
inline Cylinder transformed(const Cylinder& c, const RigidTransform& rt) {
  return canonicalized(Cylinder{rt.apply(c.axis_point), rt.rotate(c.axis_dir), c.radius});
}
inline Cone transformed(const Cone& c, const RigidTransform& rt) {
  return Cone{rt.apply(c.apex), rt.rotate(c.axis_dir), c.half_angle};
}
inline PrimitiveModel transformed(const PrimitiveModel& m, const RigidTransform& rt) {
  return std::visit([&](const auto& v) { return PrimitiveModel(transformed(v, rt)); }, m);
}

}  // namespace primfit
