#include "primfit/minimal_fit.hpp"

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace primfit {
namespace {

using testing::Rng;

TEST(FitPlaneMin, Examples) {
  auto fit = fit_plane_min(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0));
  ASSERT_TRUE(fit);
  EXPECT_LT((fit->normal - Vec3(0, 0, 1)).norm(), 1e-12);
  EXPECT_NEAR(fit->offset, 0.0, 1e-12);

  fit = fit_plane_min(Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1));
  ASSERT_TRUE(fit);
  EXPECT_LT((fit->normal - Vec3(0, 0, 1)).norm(), 1e-12);
  EXPECT_NEAR(fit->offset, 1.0, 1e-12);
}

TEST(FitPlaneMin, CollinearIsDegenerate) {
  auto fit = fit_plane_min(Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2));
  EXPECT_FALSE(fit);
  EXPECT_EQ(fit.error, SampleError::kDegenerate);
}

TEST(FitPlaneMin, RecoversRandomPlane) {
  // Residual check on random samples from x + y + z = 1.
  Rng rng(11);
  Plane truth{Vec3(1, 1, 1).normalized(), 1.0 / std::sqrt(3.0)};
  for (int t = 0; t < 50; ++t) {
    Vec3 a = testing::on_plane(truth, testing::uniform(rng, -2, 2), testing::uniform(rng, -2, 2)).position;
    Vec3 b = testing::on_plane(truth, testing::uniform(rng, -2, 2), testing::uniform(rng, -2, 2)).position;
    Vec3 c = testing::on_plane(truth, testing::uniform(rng, -2, 2), testing::uniform(rng, -2, 2)).position;
    auto fit = fit_plane_min(a, b, c);
    if (!fit) continue;  // collinear draw
    EXPECT_LT(testing::plane_param_error(canonicalized(*fit), canonicalized(truth)), 1e-9);
    EXPECT_LT(distance(*fit, a), 1e-9);
  }
}

TEST(FitSphereMin, Example) {
  auto fit = fit_sphere_min({Vec3(1, 0, 0), Vec3(1, 0, 0)}, {Vec3(0, 1, 0), Vec3(0, 1, 0)});
  ASSERT_TRUE(fit);
  EXPECT_LT(fit->center.norm(), 1e-12);
  EXPECT_NEAR(fit->radius, 1.0, 1e-12);
}

TEST(FitSphereMin, CoincidentNormalLinesAreDegenerate) {
  auto fit = fit_sphere_min({Vec3(0, 0, 2), Vec3(0, 0, 1)}, {Vec3(0, 0, -2), Vec3(0, 0, -1)});
  EXPECT_FALSE(fit);
  EXPECT_EQ(fit.error, SampleError::kDegenerate);
}

TEST(FitSphereMin, InconsistentRadiiRejected) {
  // Normals that do not point at a common center.
  auto fit = fit_sphere_min({Vec3(1, 0, 0), Vec3(1, 0, 0)},
                            {Vec3(0, 5, 0), Vec3(0, 1, 0)});
  EXPECT_FALSE(fit);
  EXPECT_EQ(fit.error, SampleError::kInconsistent);
}

TEST(FitSphereMin, RecoversRandomSphere) {
  Rng rng(12);
  Sphere truth{Vec3(1, 2, 3), 0.5};
  for (int t = 0; t < 100; ++t) {
    Vec3 d1 = testing::random_unit_vector(rng);
    Vec3 d2 = testing::random_unit_vector(rng);
    if (d1.cross(d2).norm() < 0.2) continue;
    auto fit = fit_sphere_min(testing::on_sphere(truth, d1), testing::on_sphere(truth, d2));
    ASSERT_TRUE(fit);
    EXPECT_LT(testing::sphere_param_error(*fit, truth), 1e-9);
  }
}

TEST(FitCylinderMin, Example) {
  auto fit = fit_cylinder_min({Vec3(1, 0, 0), Vec3(1, 0, 0)}, {Vec3(0, 1, 5), Vec3(0, 1, 0)});
  ASSERT_TRUE(fit);
  EXPECT_NEAR(std::abs(fit->axis_dir.z()), 1.0, 1e-12);
  EXPECT_LT(fit->axis_point.norm(), 1e-12);
  EXPECT_NEAR(fit->radius, 1.0, 1e-12);
}

TEST(FitCylinderMin, ParallelNormalsAreDegenerate) {
  auto fit = fit_cylinder_min({Vec3(1, 0, 0), Vec3(1, 0, 0)}, {Vec3(1, 0, 3), Vec3(1, 0, 0)});
  EXPECT_FALSE(fit);
  EXPECT_EQ(fit.error, SampleError::kDegenerate);
}

TEST(FitCylinderMin, RecoversRandomCylinder) {
  Cylinder truth = canonicalized(
      Cylinder{Vec3(0.2, 0, 0), Vec3(1, 1, 1).normalized(), 0.3});
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    double az1 = testing::uniform(rng, 0, 2 * kPi);
    double az2 = az1 + testing::uniform(rng, 0.5, kPi - 0.5);
    auto fit = fit_cylinder_min(testing::on_cylinder(truth, az1, testing::uniform(rng, -1, 1)),
                                testing::on_cylinder(truth, az2, testing::uniform(rng, -1, 1)));
    ASSERT_TRUE(fit);
    EXPECT_LT(testing::cylinder_param_error(*fit, truth), 1e-8);
  }
}

TEST(FitConeMin, ExactEquilateralSample) {
  Cone truth{Vec3::Zero(), Vec3::UnitZ(), kPi / 4};
  // Azimuths 0/120/240 degrees at slant reaching height 1.
  double slant = 1.0 / std::cos(truth.half_angle);
  auto fit = fit_cone_min(testing::on_cone(truth, 0.0, slant),
                          testing::on_cone(truth, 2 * kPi / 3, slant),
                          testing::on_cone(truth, 4 * kPi / 3, slant));
  ASSERT_TRUE(fit);
  EXPECT_LT(testing::cone_param_error(*fit, truth), 1e-9);
}

TEST(FitConeMin, CoplanarNormalsAreDegenerate) {
  // Samples from a plane: all tangent planes coincide.
  auto fit = fit_cone_min({Vec3(0, 0, 0), Vec3(0, 0, 1)}, {Vec3(1, 0, 0), Vec3(0, 0, 1)},
                          {Vec3(0, 1, 0), Vec3(0, 0, 1)});
  EXPECT_FALSE(fit);
  EXPECT_EQ(fit.error, SampleError::kDegenerate);
}

TEST(FitConeMin, RecoversRandomCone) {
  Rng rng(14);
  for (int t = 0; t < 100; ++t) {
    Cone truth = testing::random_cone(rng);
    double base = testing::uniform(rng, 0, 2 * kPi);
    auto fit = fit_cone_min(
        testing::on_cone(truth, base, testing::uniform(rng, 0.5, 2.0)),
        testing::on_cone(truth, base + testing::uniform(rng, 1.5, 2.5), testing::uniform(rng, 0.5, 2.0)),
        testing::on_cone(truth, base + testing::uniform(rng, 3.5, 4.5), testing::uniform(rng, 0.5, 2.0)));
    ASSERT_TRUE(fit);
    EXPECT_LT(testing::cone_param_error(*fit, truth), 1e-8);
  }
}

TEST(MinimalFit, SampleSizes) {
  EXPECT_EQ(minimal_sample_size(SurfaceClass::kPlane), 3);
  EXPECT_EQ(minimal_sample_size(SurfaceClass::kSphere), 2);
  EXPECT_EQ(minimal_sample_size(SurfaceClass::kCylinder), 2);
  EXPECT_EQ(minimal_sample_size(SurfaceClass::kCone), 3);
}

}  // namespace
}  // namespace primfit
