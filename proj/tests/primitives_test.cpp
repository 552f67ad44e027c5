#include "primfit/primitives.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace primfit {
namespace {

using testing::Rng;

TEST(Primitives, DistanceExamples) {
  EXPECT_DOUBLE_EQ(distance(Plane{Vec3::UnitZ(), 0.0}, Vec3(0, 0, 1)), 1.0);
  EXPECT_DOUBLE_EQ(distance(Sphere{Vec3::Zero(), 1.0}, Vec3(2, 0, 0)), 1.0);
  EXPECT_NEAR(distance(Cone{Vec3::Zero(), Vec3::UnitZ(), kPi / 4}, Vec3(1, 0, 1)), 0.0, 1e-12);
}

TEST(Primitives, ProjectExamples) {
  Vec3 q = project(Sphere{Vec3::Zero(), 1.0}, Vec3(3, 0, 0));
  EXPECT_LT((q - Vec3(1, 0, 0)).norm(), 1e-12);

  Cylinder cyl{Vec3::Zero(), Vec3::UnitZ(), 1.0};
  q = project(cyl, Vec3(2, 0, 5));
  EXPECT_LT((q - Vec3(1, 0, 5)).norm(), 1e-12);

  // Below the apex clamps to the apex.
  Cone cone{Vec3::Zero(), Vec3::UnitZ(), kPi / 6};
  q = project(cone, Vec3(0, 0, -1));
  EXPECT_LT(q.norm(), 1e-12);
}

TEST(Primitives, ProjectTieBreaks) {
  // Sphere center and cylinder/cone axis points resolve along +x (then +y).
  Vec3 q = project(Sphere{Vec3::Zero(), 2.0}, Vec3::Zero());
  EXPECT_LT((q - Vec3(2, 0, 0)).norm(), 1e-12);

  q = project(Cylinder{Vec3::Zero(), Vec3::UnitZ(), 1.0}, Vec3(0, 0, 3));
  EXPECT_LT((q - Vec3(1, 0, 3)).norm(), 1e-12);

  q = project(Cylinder{Vec3::Zero(), Vec3::UnitX(), 1.0}, Vec3(3, 0, 0));
  EXPECT_LT((q - Vec3(3, 1, 0)).norm(), 1e-12);
}

TEST(Primitives, SurfaceNormalExamples) {
  Vec3 n = surface_normal_at(Sphere{Vec3::Zero(), 1.0}, Vec3(0, 1, 0));
  EXPECT_LT((n - Vec3(0, 1, 0)).norm(), 1e-12);

  n = surface_normal_at(Plane{Vec3::UnitZ(), 0.0}, Vec3(5, 5, 0));
  EXPECT_NEAR(std::abs(n.z()), 1.0, 1e-12);

  n = surface_normal_at(Cone{Vec3::Zero(), Vec3::UnitZ(), kPi / 4}, Vec3(1, 0, 1));
  const double s = std::sqrt(0.5);
  EXPECT_LT((n - Vec3(s, 0, -s)).norm(), 1e-9);
}

TEST(Primitives, PlaneNormalFacesOriginSide) {
  // Scanner sits at the origin; visible plane normals point back toward it.
  Vec3 n = surface_normal_at(Plane{Vec3::UnitZ(), 2.0}, Vec3(0, 0, 2));
  EXPECT_LT((n - Vec3(0, 0, -1)).norm(), 1e-12);
  n = surface_normal_at(Plane{Vec3::UnitZ(), -2.0}, Vec3(0, 0, -2));
  EXPECT_LT((n - Vec3(0, 0, 1)).norm(), 1e-12);
}

TEST(Primitives, DegenerateNormalQueriesThrow) {
  EXPECT_THROW(surface_normal_at(Sphere{Vec3::Zero(), 1.0}, Vec3::Zero()), std::domain_error);
  EXPECT_THROW(surface_normal_at(Cylinder{Vec3::Zero(), Vec3::UnitZ(), 1.0}, Vec3(0, 0, 2)),
               std::domain_error);
  EXPECT_THROW(surface_normal_at(Cone{Vec3::Zero(), Vec3::UnitZ(), 0.5}, Vec3::Zero()),
               std::domain_error);
}

TEST(Primitives, ProjectionIdempotenceAndDistanceConsistency) {
  Rng rng(42);
  for (int trial = 0; trial < 400; ++trial) {
    auto cls = static_cast<SurfaceClass>(trial % 4);
    PrimitiveModel m = testing::random_model(rng, cls);
    Vec3 p = testing::random_point(rng, 5.0);

    Vec3 q = project(m, p);
    EXPECT_LT((project(m, q) - q).norm(), 1e-9) << "class " << class_name(cls);
    EXPECT_NEAR(distance(m, p), (p - q).norm(), 1e-9) << "class " << class_name(cls);
  }
}

TEST(Primitives, SurfaceNormalMatchesImplicitGradient) {
  // Central finite differences of the signed implicit function, step 1e-6.
  Rng rng(7);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    auto cls = static_cast<SurfaceClass>(trial % 4);
    PrimitiveModel m = testing::random_model(rng, cls);
    Vec3 q = testing::random_surface_sample(rng, m).position;

    Vec3 grad;
    for (int k = 0; k < 3; ++k) {
      Vec3 hi = q, lo = q;
      hi[k] += h;
      lo[k] -= h;
      grad[k] = (signed_offset(m, hi) - signed_offset(m, lo)) / (2 * h);
    }
    grad.normalize();
    Vec3 n = surface_normal_at(m, q);
    EXPECT_LT(std::min((n - grad).norm(), (n + grad).norm()), 1e-4)
        << "class " << class_name(cls);
  }
}

TEST(Primitives, CylinderCanonicalization) {
  Cylinder c{Vec3(1, 1, 5), Vec3(0, 0, -1), 0.5};
  Cylinder canon = canonicalized(c);
  EXPECT_GT(canon.axis_dir.z(), 0.0);
  EXPECT_NEAR(canon.axis_point.dot(canon.axis_dir), 0.0, 1e-12);
  EXPECT_LT((canon.axis_point - Vec3(1, 1, 0)).norm(), 1e-12);
  // Same surface.
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    Vec3 p = testing::random_point(rng);
    EXPECT_NEAR(distance(c, p), distance(canon, p), 1e-12);
  }
}

TEST(Primitives, PlaneCanonicalization) {
  Plane p{Vec3(0, 0, -1), -2.0};
  Plane canon = canonicalized(p);
  EXPECT_GT(canon.normal.z(), 0.0);
  EXPECT_DOUBLE_EQ(canon.offset, 2.0);
}

TEST(Primitives, ModelClassMapping) {
  EXPECT_EQ(model_class(PrimitiveModel(Plane{})), SurfaceClass::kPlane);
  EXPECT_EQ(model_class(PrimitiveModel(Sphere{})), SurfaceClass::kSphere);
  EXPECT_EQ(model_class(PrimitiveModel(Cylinder{})), SurfaceClass::kCylinder);
  EXPECT_EQ(model_class(PrimitiveModel(Cone{})), SurfaceClass::kCone);
}

}  // namespace
}  // namespace primfit
