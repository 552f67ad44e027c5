#include "primfit/range_image.hpp"

#include <gtest/gtest.h>

#include <random>

namespace primfit {
namespace {

RangeImage make_image(int w, int h, Intrinsics k) {
  RangeImage img(w, h, k);
  return img;
}

TEST(Unproject, Examples) {
  Intrinsics k{10.0, 10.0, 4.0, 3.0};
  RangeImage img = make_image(16, 8, k);
  img.depth.at(4, 3) = 1.0f;   // principal point
  img.depth.at(14, 3) = 2.0f;  // u = cx + fx
  PointMap pts = unproject(img);

  EXPECT_LT((pts.at(4, 3) - Vec3(0, 0, 1)).norm(), 1e-12);
  EXPECT_LT((pts.at(14, 3) - Vec3(2, 0, 2)).norm(), 1e-12);
  EXPECT_FALSE(point_valid(pts.at(0, 0)));  // zero depth stays invalid
}

TEST(Unproject, RoundTripThroughIntrinsics) {
  Intrinsics k;
  RangeImage img = make_image(64, 48, k);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> depth(0.5f, 5.0f);
  for (auto& d : img.depth) d = depth(rng);

  PointMap pts = unproject(img);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Vec3& p = pts.at(x, y);
      ASSERT_TRUE(point_valid(p));
      double u = k.fx * p.x() / p.z() + k.cx;
      double v = k.fy * p.y() / p.z() + k.cy;
      EXPECT_NEAR(u, x, 1e-6);
      EXPECT_NEAR(v, y, 1e-6);
    }
  }
}

TEST(EstimateNormals, FrontalPlaneFacesCamera) {
  RangeImage img = make_image(32, 24, {});
  for (auto& d : img.depth) d = 2.0f;
  NormalMap normals = estimate_normals(unproject(img));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Vec3& n = normals.at(x, y);
      ASSERT_TRUE(normal_valid(n));
      EXPECT_LT((n - Vec3(0, 0, -1)).norm(), 1e-6);
    }
  }
}

TEST(EstimateNormals, InvalidNeighborhoodGivesInvalidNormal) {
  RangeImage img = make_image(11, 11, {});
  img.depth.at(5, 5) = 2.0f;  // lone valid pixel
  NormalMap normals = estimate_normals(unproject(img));
  EXPECT_FALSE(normal_valid(normals.at(5, 5)));
  EXPECT_FALSE(normal_valid(normals.at(0, 0)));
}

TEST(EstimateNormals, CollinearNeighborhoodIsRankDeficient) {
  RangeImage img = make_image(16, 16, {});
  for (int x = 0; x < 16; ++x) img.depth.at(x, 8) = 2.0f;  // single row
  NormalMap normals = estimate_normals(unproject(img));
  for (int x = 0; x < 16; ++x) EXPECT_FALSE(normal_valid(normals.at(x, 8)));
}

TEST(EstimateNormals, UnitLengthWhereValid) {
  RangeImage img = make_image(40, 30, {});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> depth(1.0f, 4.0f);
  std::bernoulli_distribution hole(0.1);
  for (auto& d : img.depth) d = hole(rng) ? 0.0f : depth(rng);

  NormalMap normals = estimate_normals(unproject(img));
  PointMap pts = unproject(img);
  int valid_count = 0;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (!normal_valid(normals[i])) continue;
    ++valid_count;
    EXPECT_NEAR(normals[i].norm(), 1.0, 1e-6);
    EXPECT_LT(normals[i].dot(pts[i]), 0.0);  // faces the camera
  }
  EXPECT_GT(valid_count, 0);
}

}  // namespace
}  // namespace primfit
