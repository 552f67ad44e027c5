#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>

#include "primfit/core.hpp"

namespace primfit {

/// Pinhole intrinsics in pixels. Defaults follow a VGA Kinect-like scanner.
struct Intrinsics {
  double fx = 575.0;
  double fy = 575.0;
  double cx = 319.5;
  double cy = 239.5;
};

/// Per-pixel depth map from a single viewpoint. Depth is the camera-frame z
/// coordinate in meters; zero encodes an invalid pixel.
struct RangeImage {
  int width = 640;
  int height = 480;
  Intrinsics intrinsics;
  RigidTransform camera_to_world;
  Image<float> depth;

  RangeImage() = default;
  RangeImage(int w, int h, Intrinsics k = {})
      : width(w), height(h), intrinsics(k), depth(w, h, 0.0f) {}
};

/// Camera-frame point map; the zero point marks invalid pixels (valid points
/// always have z = depth > 0).
using PointMap = Image<Vec3>;

inline bool point_valid(const Vec3& p) { return p.z() > 0.0; }

/// Per-pixel unit normals; the zero vector marks invalid pixels.
using NormalMap = Image<Vec3>;

inline bool normal_valid(const Vec3& n) { return n.squaredNorm() > 0.5; }

/// Back-projects every pixel through the pinhole model:
/// p(u,v) = depth * ((u-cx)/fx, (v-cy)/fy, 1).
inline PointMap unproject(const RangeImage& img) {
  PointMap out(img.width, img.height, Vec3::Zero());
  const auto& k = img.intrinsics;
  for (int y = 0; y < img.height; ++y) {
    double ry = (y - k.cy) / k.fy;
    for (int x = 0; x < img.width; ++x) {
      double d = img.depth.at(x, y);
      if (d <= 0.0) continue;
      out.at(x, y) = Vec3(d * (x - k.cx) / k.fx, d * ry, d);
    }
  }
  return out;
}

/// PCA normal estimation over an odd square window (truncated at image
/// borders). A pixel gets a normal when it is valid itself, has at least
/// three valid pixels in its window, and the window covariance has rank 2 or
/// more; normals are flipped toward the camera (n . p < 0).
inline NormalMap estimate_normals(const PointMap& points, int window = 5) {
  const int r = window / 2;
  NormalMap out(points.width(), points.height(), Vec3::Zero());
  for (int y = 0; y < points.height(); ++y) {
    for (int x = 0; x < points.width(); ++x) {
      const Vec3& center = points.at(x, y);
      if (!point_valid(center)) continue;

      Vec3 sum = Vec3::Zero();
      Mat3 sq = Mat3::Zero();
      int n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        int yy = y + dy;
        if (yy < 0 || yy >= points.height()) continue;
        for (int dx = -r; dx <= r; ++dx) {
          int xx = x + dx;
          if (xx < 0 || xx >= points.width()) continue;
          const Vec3& p = points.at(xx, yy);
          if (!point_valid(p)) continue;
          sum += p;
          sq += p * p.transpose();
          ++n;
        }
      }
      if (n < 3) continue;

      Vec3 mean = sum / n;
      Mat3 cov = sq / n - mean * mean.transpose();
      Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
      const auto& evals = eig.eigenvalues();  // ascending
      if (evals[1] <= 1e-9 * std::max(evals[2], 1e-30)) continue;  // rank < 2

      Vec3 normal = eig.eigenvectors().col(0);
      if (normal.dot(center) > 0.0) normal = -normal;
      out.at(x, y) = normal;
    }
  }
  return out;
}

}  // namespace primfit
