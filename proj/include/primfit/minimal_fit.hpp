#pragma once

#include <cmath>
#include <optional>

#include "primfit/primitives.hpp"

namespace primfit {

/// Position plus unit surface normal, the sample unit for normal-based
/// minimal fits.
struct OrientedPoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

enum class SampleError : std::uint8_t {
  kNone = 0,
  kDegenerate,    // sample geometry does not determine a model
  kInconsistent,  // model exists but the samples disagree beyond tolerance
};

template <typename T>
struct SampleFit {
  std::optional<T> model;
  SampleError error = SampleError::kNone;

  explicit operator bool() const { return model.has_value(); }
  const T& operator*() const { return *model; }
  const T* operator->() const { return &*model; }

  static SampleFit ok(T m) { return SampleFit{std::move(m), SampleError::kNone}; }
  static SampleFit fail(SampleError e) { return SampleFit{std::nullopt, e}; }
};

/// Plane through three non-collinear points, normal = normalized cross
/// product of the edge vectors.
inline SampleFit<Plane> fit_plane_min(const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  Vec3 cross = (p2 - p1).cross(p3 - p1);
  double area2 = cross.norm();  // twice the triangle area
  if (area2 * 0.5 <= 1e-12) return SampleFit<Plane>::fail(SampleError::kDegenerate);
  Vec3 n = cross / area2;
  return SampleFit<Plane>::ok(Plane{n, n.dot(p1)});
}

/// Sphere from two oriented points: center = midpoint of the shortest
/// segment between the two normal lines, radius = mean center distance.
/// Rejected when the two center distances disagree by more than 10%.
inline SampleFit<Sphere> fit_sphere_min(const OrientedPoint& s1, const OrientedPoint& s2) {
  const Vec3& n1 = s1.normal;
  const Vec3& n2 = s2.normal;
  if (n1.cross(n2).norm() <= 1e-9)
    return SampleFit<Sphere>::fail(SampleError::kDegenerate);

  // Closest points of lines p1 + t n1 and p2 + u n2.
  Vec3 d = s2.position - s1.position;
  double a = n1.dot(n2);
  double denom = 1.0 - a * a;
  double t = (n1.dot(d) - a * n2.dot(d)) / denom;
  double u = (a * n1.dot(d) - n2.dot(d)) / denom;
  Vec3 c1 = s1.position + t * n1;
  Vec3 c2 = s2.position + u * n2;
  Vec3 center = 0.5 * (c1 + c2);

  double r1 = (center - s1.position).norm();
  double r2 = (center - s2.position).norm();
  double radius = 0.5 * (r1 + r2);
  if (radius <= 0.0) return SampleFit<Sphere>::fail(SampleError::kDegenerate);
  if (std::abs(r1 - r2) > 0.1 * radius)
    return SampleFit<Sphere>::fail(SampleError::kInconsistent);
  return SampleFit<Sphere>::ok(Sphere{center, radius});
}

/// Cylinder from two oriented points: axis direction n1 x n2, axis position
/// from the intersection of the normal lines projected onto the plane
/// perpendicular to the axis.
inline SampleFit<Cylinder> fit_cylinder_min(const OrientedPoint& s1, const OrientedPoint& s2) {
  Vec3 cross = s1.normal.cross(s2.normal);
  double cn = cross.norm();
  if (cn <= 1e-9) return SampleFit<Cylinder>::fail(SampleError::kDegenerate);
  Vec3 axis = cross / cn;

  auto [u, v] = orthonormal_basis(axis);
  // Normals are perpendicular to the axis by construction, so they project
  // at full length.
  Vec2 q1(s1.position.dot(u), s1.position.dot(v));
  Vec2 q2(s2.position.dot(u), s2.position.dot(v));
  Vec2 m1(s1.normal.dot(u), s1.normal.dot(v));
  Vec2 m2(s2.normal.dot(u), s2.normal.dot(v));

  double det = m1.x() * m2.y() - m1.y() * m2.x();
  if (std::abs(det) <= 1e-9) return SampleFit<Cylinder>::fail(SampleError::kDegenerate);
  Vec2 dq = q2 - q1;
  double t = (dq.x() * m2.y() - dq.y() * m2.x()) / det;
  Vec2 x = q1 + t * m1;

  Vec3 axis_point = x.x() * u + x.y() * v;  // lies in the plane through the origin
  Vec3 w = s1.position - axis_point;
  double radius = (w - w.dot(axis) * axis).norm();
  if (radius <= 1e-12) return SampleFit<Cylinder>::fail(SampleError::kDegenerate);
  return SampleFit<Cylinder>::ok(canonicalized(Cylinder{axis_point, axis, radius}));
}

/// Cone from three oriented points: apex from the tangent-plane
/// intersection, axis through the circumscribed direction plane, half-angle
/// as the mean axis angle. Per-sample angles must agree within 1 degree.
inline SampleFit<Cone> fit_cone_min(const OrientedPoint& s1, const OrientedPoint& s2,
                                    const OrientedPoint& s3) {
  Mat3 A;
  A.row(0) = s1.normal;
  A.row(1) = s2.normal;
  A.row(2) = s3.normal;
  // Rows are unit length, so |det| is a scale-free conditioning measure.
  double det = A.determinant();
  if (std::abs(det) <= 1e-6) return SampleFit<Cone>::fail(SampleError::kDegenerate);
  Vec3 b(s1.normal.dot(s1.position), s2.normal.dot(s2.position), s3.normal.dot(s3.position));
  Vec3 apex = A.inverse() * b;

  Vec3 d1 = s1.position - apex;
  Vec3 d2 = s2.position - apex;
  Vec3 d3 = s3.position - apex;
  double l1 = d1.norm(), l2 = d2.norm(), l3 = d3.norm();
  if (l1 <= 1e-12 || l2 <= 1e-12 || l3 <= 1e-12)
    return SampleFit<Cone>::fail(SampleError::kDegenerate);
  d1 /= l1;
  d2 /= l2;
  d3 /= l3;

  Vec3 w = (d2 - d1).cross(d3 - d1);
  double wn = w.norm();
  if (wn <= 1e-9) return SampleFit<Cone>::fail(SampleError::kDegenerate);
  Vec3 axis = w / wn;
  double dot1 = axis.dot(d1), dot2 = axis.dot(d2), dot3 = axis.dot(d3);
  if (dot1 < 0.0 && dot2 < 0.0 && dot3 < 0.0) {
    axis = -axis;
    dot1 = -dot1;
    dot2 = -dot2;
    dot3 = -dot3;
  }
  if (dot1 <= 0.0 || dot2 <= 0.0 || dot3 <= 0.0)
    return SampleFit<Cone>::fail(SampleError::kDegenerate);

  double a1 = std::acos(std::min(1.0, dot1));
  double a2 = std::acos(std::min(1.0, dot2));
  double a3 = std::acos(std::min(1.0, dot3));
  double mean = (a1 + a2 + a3) / 3.0;
  const double tol = deg_to_rad(1.0);
  if (std::abs(a1 - mean) > tol || std::abs(a2 - mean) > tol || std::abs(a3 - mean) > tol)
    return SampleFit<Cone>::fail(SampleError::kInconsistent);
  if (mean <= 1e-9 || mean >= kPi / 2.0 - 1e-9)
    return SampleFit<Cone>::fail(SampleError::kDegenerate);
  return SampleFit<Cone>::ok(Cone{apex, axis, mean});
}

/// Smallest sample count that determines a model of the given class.
inline int minimal_sample_size(SurfaceClass c) {
  switch (c) {
    case SurfaceClass::kPlane: return 3;
    case SurfaceClass::kSphere: return 2;
    case SurfaceClass::kCylinder: return 2;
    case SurfaceClass::kCone: return 3;
    default: return 0;
  }
}

}  // namespace primfit
