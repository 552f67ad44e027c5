#pragma once

#include <cmath>
#include <limits>
#include <random>

#include "primfit/labels.hpp"
#include "primfit/range_image.hpp"
#include "primfit/scene.hpp"

namespace primfit {

struct ScannerConfig {
  int width = 640;
  int height = 480;
  Intrinsics intrinsics;
  double noise_sigma = 0.005;  // meters, along the viewing ray
  double max_range = 8.0;      // meters of camera-frame depth
  /// Optional hook scaling sigma with depth: sigma * (z / 2m)^2.
  bool depth_proportional_noise = false;
  std::uint64_t noise_seed = 0;
};

struct Scan {
  RangeImage image;
  LabelMap labels;
};

namespace detail {

constexpr double kRayEps = 1e-6;

inline bool intersect_instance(const BoundedInstance& inst, const Vec3& origin, const Vec3& dir,
                               double& t_out) {
  switch (inst.extent) {
    case ExtentKind::kRect:
    case ExtentKind::kDisk: {
      const Plane& plane = std::get<Plane>(inst.model);
      double denom = plane.normal.dot(dir);
      if (std::abs(denom) < 1e-12) return false;
      double t = (plane.offset - plane.normal.dot(origin)) / denom;
      if (t <= kRayEps) return false;
      Vec3 local = origin + t * dir - inst.center;
      double lu = local.dot(inst.u_axis);
      double lv = local.dot(inst.v_axis);
      if (inst.extent == ExtentKind::kRect) {
        if (std::abs(lu) > inst.half_u || std::abs(lv) > inst.half_v) return false;
      } else {
        if (lu * lu + lv * lv > inst.half_u * inst.half_u) return false;
      }
      t_out = t;
      return true;
    }
    case ExtentKind::kFull: {
      const Sphere& sphere = std::get<Sphere>(inst.model);
      Vec3 oc = origin - sphere.center;
      double b = oc.dot(dir);
      double c = oc.squaredNorm() - sphere.radius * sphere.radius;
      double disc = b * b - c;
      if (disc < 0.0) return false;
      double root = std::sqrt(disc);
      double t = -b - root;
      if (t <= kRayEps) t = -b + root;
      if (t <= kRayEps) return false;
      t_out = t;
      return true;
    }
    case ExtentKind::kAxialSpan: {
      if (const Cylinder* cyl = std::get_if<Cylinder>(&inst.model)) {
        Vec3 oc = origin - cyl->axis_point;
        Vec3 od = oc - oc.dot(cyl->axis_dir) * cyl->axis_dir;
        Vec3 dd = dir - dir.dot(cyl->axis_dir) * cyl->axis_dir;
        double a = dd.squaredNorm();
        if (a < 1e-14) return false;  // ray parallel to the axis
        double b = od.dot(dd);
        double c = od.squaredNorm() - cyl->radius * cyl->radius;
        double disc = b * b - a * c;
        if (disc < 0.0) return false;
        double root = std::sqrt(disc);
        for (double t : {(-b - root) / a, (-b + root) / a}) {
          if (t <= kRayEps) continue;
          double s = (oc + t * dir).dot(cyl->axis_dir);
          if (s < inst.span_min || s > inst.span_max) continue;
          t_out = t;
          return true;
        }
        return false;
      }
      const Cone& cone = std::get<Cone>(inst.model);
      const double cos2 = std::cos(cone.half_angle) * std::cos(cone.half_angle);
      Vec3 wo = origin - cone.apex;
      double da = dir.dot(cone.axis_dir);
      double wa = wo.dot(cone.axis_dir);
      double a = da * da - cos2;
      double b = wa * da - cos2 * wo.dot(dir);
      double c = wa * wa - cos2 * wo.squaredNorm();
      double lo = std::max(inst.span_min, 0.0);
      auto accept = [&](double t) {
        if (t <= kRayEps) return false;
        double s = wa + t * da;
        if (s < lo || s > inst.span_max) return false;
        t_out = t;
        return true;
      };
      if (std::abs(a) < 1e-12) {
        if (std::abs(b) < 1e-14) return false;
        return accept(-0.5 * c / b);
      }
      double disc = b * b - a * c;
      if (disc < 0.0) return false;
      double root = std::sqrt(disc);
      double t1 = (-b - root) / a, t2 = (-b + root) / a;
      if (t1 > t2) std::swap(t1, t2);
      if (accept(t1)) return true;
      return accept(t2);
    }
  }
  return false;
}

}  // namespace detail

/// Casts one ray against every scene surface; nearest positive hit wins.
/// Patch intersectors must be passed pre-built (one per other_surfaces
/// entry). Returns the hit instance id (0 = miss) and ray parameter.
inline int cast_ray(const SceneDescription& scene,
                    const std::vector<PatchIntersector>& patches, const Vec3& origin,
                    const Vec3& dir, double& t_out, SurfaceClass& cls_out) {
  double best_t = std::numeric_limits<double>::max();
  int best_id = 0;
  SurfaceClass best_cls = SurfaceClass::kInvalid;
  for (const BoundedInstance& inst : scene.instances) {
    double t;
    if (detail::intersect_instance(inst, origin, dir, t) && t < best_t) {
      best_t = t;
      best_id = inst.instance_id;
      best_cls = inst.cls();
    }
  }
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (auto t = patches[i].intersect(origin, dir, best_t)) {
      if (*t < best_t) {
        best_t = *t;
        best_id = scene.other_surfaces[i].instance_id;
        best_cls = SurfaceClass::kOther;
      }
    }
  }
  t_out = best_t;
  cls_out = best_cls;
  return best_id;
}

/// Renders one scan by per-pixel ray casting. Depth is the camera-frame z of
/// the hit with Gaussian noise applied along the ray; misses, over-range and
/// non-positive depths become invalid (zero depth). Labels record the
/// pre-noise hit. Deterministic given config.noise_seed.
inline Scan render_scan(const SceneDescription& scene, const ScanPose& pose,
                        const ScannerConfig& config) {
  Scan scan;
  scan.image = RangeImage(config.width, config.height, config.intrinsics);
  scan.image.camera_to_world = pose.camera_to_world;
  scan.labels = LabelMap(config.width, config.height);

  std::vector<PatchIntersector> patches;
  patches.reserve(scene.other_surfaces.size());
  for (const auto& p : scene.other_surfaces) patches.emplace_back(p);

  std::mt19937_64 rng(config.noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Vec3 origin = pose.camera_to_world.translation;
  const auto& k = config.intrinsics;
  for (int y = 0; y < config.height; ++y) {
    for (int x = 0; x < config.width; ++x) {
      Vec3 dir_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      dir_cam.normalize();
      Vec3 dir = pose.camera_to_world.rotate(dir_cam);

      double t;
      SurfaceClass cls;
      int id = cast_ray(scene, patches, origin, dir, t, cls);
      if (id == 0) continue;

      double sigma = config.noise_sigma;
      if (config.depth_proportional_noise) {
        double z_true = t * dir_cam.z();
        sigma *= (z_true / 2.0) * (z_true / 2.0);
      }
      double t_noisy = sigma > 0.0 ? t + sigma * gauss(rng) : t;
      double depth = t_noisy * dir_cam.z();
      if (depth <= 0.0 || depth > config.max_range) continue;

      scan.image.depth.at(x, y) = static_cast<float>(depth);
      scan.labels.class_id.at(x, y) = static_cast<std::uint8_t>(cls);
      scan.labels.instance_id.at(x, y) = static_cast<std::uint32_t>(id);
    }
  }
  return scan;
}

}  // namespace primfit
