#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "primfit/patch.hpp"
#include "primfit/primitives.hpp"

namespace primfit {

enum class ExtentKind : std::uint8_t {
  kRect = 0,      // plane bounded by a rectangle in its in-plane frame
  kDisk = 1,      // plane bounded by a disk (radius in half_u)
  kFull = 2,      // whole surface (spheres)
  kAxialSpan = 3, // cylinder/cone lateral surface, axial range [span_min, span_max]
};

/// One ground-truth surface: an exact primitive plus the bounds that make it
/// a finite scene object.
struct BoundedInstance {
  PrimitiveModel model;
  int instance_id = 0;
  ExtentKind extent = ExtentKind::kFull;

  // In-plane frame for rect/disk extents.
  Vec3 center = Vec3::Zero();
  Vec3 u_axis = Vec3::UnitX();
  Vec3 v_axis = Vec3::UnitY();
  double half_u = 0.0;
  double half_v = 0.0;

  // Axial range for cylinders (relative to axis_point) and cones (relative
  // to the apex, so span_min >= 0).
  double span_min = 0.0;
  double span_max = 0.0;

  SurfaceClass cls() const { return model_class(model); }
};

/// Room-scale ground truth: bounded primitive instances plus freeform
/// background patches. Instance ids are unique and contiguous from 1 across
/// both lists.
struct SceneDescription {
  double room_extent = 10.0;  // horizontal extent in x and y
  double room_height = 3.0;
  Vec3 table_center = Vec3::Zero();
  std::vector<BoundedInstance> instances;
  std::vector<BicubicPatch> other_surfaces;

  int instance_count() const {
    return static_cast<int>(instances.size() + other_surfaces.size());
  }
};

inline const BoundedInstance* find_instance(const SceneDescription& scene, int id) {
  for (const auto& inst : scene.instances)
    if (inst.instance_id == id) return &inst;
  return nullptr;
}

struct SceneGenConfig {
  double room_extent = 10.0;
  double room_height = 3.0;
  int sphere_count = 2;
  int cylinder_count = 2;
  int cone_count = 2;
  int box_count = 1;
  /// Fraction of objects whose axis/normal is made exactly horizontal or
  /// vertical instead of uniformly random.
  double axis_aligned_fraction = 0.5;
  double min_object_size = 0.15;
  double max_object_size = 0.75;
  int max_placement_retries = 200;
};

namespace detail {

inline BoundedInstance rect_plane(int id, const Vec3& normal, const Vec3& center,
                                  const Vec3& u_axis, double half_u, double half_v) {
  BoundedInstance inst;
  inst.model = Plane{normal, normal.dot(center)};
  inst.instance_id = id;
  inst.extent = ExtentKind::kRect;
  inst.center = center;
  inst.u_axis = u_axis;
  inst.v_axis = normal.cross(u_axis);
  inst.half_u = half_u;
  inst.half_v = half_v;
  return inst;
}

inline BoundedInstance disk_plane(int id, const Vec3& normal, const Vec3& center,
                                  double radius) {
  BoundedInstance inst;
  inst.model = Plane{normal, normal.dot(center)};
  inst.instance_id = id;
  inst.extent = ExtentKind::kDisk;
  inst.center = center;
  auto [u, v] = orthonormal_basis(normal);
  inst.u_axis = u;
  inst.v_axis = v;
  inst.half_u = radius;
  inst.half_v = radius;
  return inst;
}

inline BoundedInstance bounded_cylinder(int id, const Vec3& mid, const Vec3& axis,
                                        double radius, double height) {
  Cylinder cyl = canonicalized(Cylinder{mid, axis, radius});
  double t_mid = (mid - cyl.axis_point).dot(cyl.axis_dir);
  BoundedInstance inst;
  inst.model = cyl;
  inst.instance_id = id;
  inst.extent = ExtentKind::kAxialSpan;
  inst.span_min = t_mid - 0.5 * height;
  inst.span_max = t_mid + 0.5 * height;
  return inst;
}

inline BoundedInstance bounded_cone(int id, const Vec3& apex, const Vec3& axis,
                                    double half_angle, double height) {
  BoundedInstance inst;
  inst.model = Cone{apex, axis, half_angle};
  inst.instance_id = id;
  inst.extent = ExtentKind::kAxialSpan;
  inst.span_min = 0.0;
  inst.span_max = height;
  return inst;
}

/// Conservative bounding sphere, used only for placement rejection.
inline std::pair<Vec3, double> bounding_sphere(const BoundedInstance& inst) {
  switch (inst.extent) {
    case ExtentKind::kRect:
    case ExtentKind::kDisk:
      return {inst.center, std::hypot(inst.half_u, inst.half_v)};
    case ExtentKind::kFull: {
      const Sphere& s = std::get<Sphere>(inst.model);
      return {s.center, s.radius};
    }
    case ExtentKind::kAxialSpan: {
      if (const Cylinder* c = std::get_if<Cylinder>(&inst.model)) {
        Vec3 mid = c->axis_point + 0.5 * (inst.span_min + inst.span_max) * c->axis_dir;
        double half = 0.5 * (inst.span_max - inst.span_min);
        return {mid, std::hypot(half, c->radius)};
      }
      const Cone& k = std::get<Cone>(inst.model);
      Vec3 mid = k.apex + 0.5 * (inst.span_min + inst.span_max) * k.axis_dir;
      double half = 0.5 * (inst.span_max - inst.span_min);
      double base_r = inst.span_max * std::tan(k.half_angle);
      return {mid, std::hypot(half, base_r)};
    }
  }
  return {Vec3::Zero(), 0.0};
}

}  // namespace detail

/// Generates a room-like scene: six room planes, a table plane near the
/// center, two disk planes, two freeform patches, and configurable counts of
/// spheres, cylinders, cones, and boxes placed near the table top. A
/// configured fraction of object orientations is exactly horizontal or
/// vertical. Deterministic given the seed.
inline SceneDescription generate_scene(std::uint64_t seed, const SceneGenConfig& config = {}) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  SceneDescription scene;
  scene.room_extent = config.room_extent;
  scene.room_height = config.room_height;
  const double he = 0.5 * config.room_extent;  // half extent
  const double hh = 0.5 * config.room_height;
  int next_id = 1;

  // Room shell: floor, ceiling, four walls.
  scene.instances.push_back(detail::rect_plane(next_id++, Vec3::UnitZ(), Vec3(0, 0, 0),
                                               Vec3::UnitX(), he, he));
  scene.instances.push_back(detail::rect_plane(next_id++, -Vec3::UnitZ(),
                                               Vec3(0, 0, config.room_height), Vec3::UnitX(), he,
                                               he));
  scene.instances.push_back(detail::rect_plane(next_id++, Vec3::UnitX(), Vec3(-he, 0, hh),
                                               Vec3::UnitY(), he, hh));
  scene.instances.push_back(detail::rect_plane(next_id++, -Vec3::UnitX(), Vec3(he, 0, hh),
                                               Vec3::UnitY(), he, hh));
  scene.instances.push_back(detail::rect_plane(next_id++, Vec3::UnitY(), Vec3(0, -he, hh),
                                               Vec3::UnitX(), he, hh));
  scene.instances.push_back(detail::rect_plane(next_id++, -Vec3::UnitY(), Vec3(0, he, hh),
                                               Vec3::UnitX(), he, hh));

  // Elevated table top near the room center.
  double table_h = uni(0.6, 1.0);
  Vec3 table_center(uni(-1.0, 1.0), uni(-1.0, 1.0), table_h);
  double yaw = uni(0.0, 2.0 * kPi);
  Vec3 table_u(std::cos(yaw), std::sin(yaw), 0.0);
  double table_hu = uni(0.5, 1.0), table_hv = uni(0.5, 1.0);
  scene.instances.push_back(
      detail::rect_plane(next_id++, Vec3::UnitZ(), table_center, table_u, table_hu, table_hv));
  scene.table_center = table_center;

  auto near_table_xy = [&](double margin) {
    return Vec3(table_center.x() + uni(-table_hu - margin, table_hu + margin),
                table_center.y() + uni(-table_hv - margin, table_hv + margin), 0.0);
  };

  std::vector<std::pair<Vec3, double>> occupied;
  auto try_place = [&](const BoundedInstance& inst) {
    auto [c, r] = detail::bounding_sphere(inst);
    if (std::abs(c.x()) + r > he || std::abs(c.y()) + r > he) return false;
    if (c.z() - r < -0.05 || c.z() + r > config.room_height) return false;
    for (const auto& [oc, orr] : occupied) {
      if ((c - oc).norm() < 0.8 * (r + orr)) return false;
    }
    occupied.emplace_back(c, r);
    return true;
  };

  // Two disk-shaped planes.
  for (int i = 0; i < 2; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= config.max_placement_retries)
        throw std::runtime_error("placement failed: disk " + std::to_string(i));
      double radius = uni(0.2, 0.45);
      Vec3 pos = near_table_xy(0.6);
      pos.z() = table_h + uni(0.05, 0.8);
      Vec3 normal = uni(0, 1) < 0.5 ? Vec3::UnitZ()
                                    : Vec3(uni(-1, 1), uni(-1, 1), uni(-1, 1)).normalized();
      BoundedInstance disk = detail::disk_plane(next_id, normal, pos, radius);
      if (try_place(disk)) {
        scene.instances.push_back(disk);
        ++next_id;
        break;
      }
    }
  }

  // Random orientation helper with the horizontal/vertical bias.
  auto biased_direction = [&]() -> Vec3 {
    if (uni(0, 1) < config.axis_aligned_fraction) {
      if (uni(0, 1) < 0.5) return Vec3::UnitZ();
      double az = uni(0, 2 * kPi);
      return Vec3(std::cos(az), std::sin(az), 0.0);
    }
    Vec3 v;
    std::normal_distribution<double> gauss(0.0, 1.0);
    do {
      v = Vec3(gauss(rng), gauss(rng), gauss(rng));
    } while (v.norm() < 1e-6);
    return Vec3(v.normalized());
  };

  struct Placement {
    SurfaceClass cls;
    int index;
  };
  std::vector<Placement> order;
  for (int i = 0; i < config.sphere_count; ++i) order.push_back({SurfaceClass::kSphere, i});
  for (int i = 0; i < config.cylinder_count; ++i) order.push_back({SurfaceClass::kCylinder, i});
  for (int i = 0; i < config.cone_count; ++i) order.push_back({SurfaceClass::kCone, i});

  auto object_size = [&]() { return uni(config.min_object_size, config.max_object_size); };

  for (const Placement& pl : order) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= config.max_placement_retries)
        throw std::runtime_error("placement failed: " + std::string(class_short_name(pl.cls)) +
                                 " " + std::to_string(pl.index) + " of scene with " +
                                 std::to_string(scene.instances.size()) + " instances placed");
      BoundedInstance inst;
      if (pl.cls == SurfaceClass::kSphere) {
        double radius = 0.5 * object_size();
        Vec3 pos = near_table_xy(0.4);
        // Half the spheres intersect the table top, the rest float above.
        pos.z() = uni(0, 1) < 0.5 ? table_h + radius * uni(0.3, 0.95)
                                  : table_h + radius + uni(0.05, 0.5);
        inst.model = Sphere{pos, radius};
        inst.instance_id = next_id;
        inst.extent = ExtentKind::kFull;
      } else if (pl.cls == SurfaceClass::kCylinder) {
        double radius = uni(0.3, 0.5) * object_size();
        double height = uni(0.8, 1.6) * object_size();
        Vec3 mid = near_table_xy(0.4);
        mid.z() = table_h + uni(0.1, 0.7);
        inst = detail::bounded_cylinder(next_id, mid, biased_direction(), radius, height);
      } else {
        double half_angle = deg_to_rad(uni(12.0, 38.0));
        double height = uni(0.8, 1.5) * object_size();
        Vec3 axis = biased_direction();
        if (uni(0, 1) < 0.5) axis = -axis;
        Vec3 mid = near_table_xy(0.4);
        mid.z() = table_h + uni(0.1, 0.7);
        inst = detail::bounded_cone(next_id, mid - 0.5 * height * axis, axis, half_angle, height);
      }
      if (try_place(inst)) {
        scene.instances.push_back(inst);
        ++next_id;
        break;
      }
    }
  }

  // Boxes: six rectangular plane faces each, sharing one placement footprint.
  for (int b = 0; b < config.box_count; ++b) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= config.max_placement_retries)
        throw std::runtime_error("placement failed: box " + std::to_string(b));
      Vec3 half(0.5 * uni(0.5, 1.0) * object_size(), 0.5 * uni(0.5, 1.0) * object_size(),
                0.5 * uni(0.5, 1.0) * object_size());
      Vec3 pos = near_table_xy(0.4);
      pos.z() = table_h + uni(0.05, 0.5) + half.z();
      Mat3 rot;
      if (uni(0, 1) < config.axis_aligned_fraction) {
        double box_yaw = uni(0, 2 * kPi);
        rot = Eigen::AngleAxisd(box_yaw, Vec3::UnitZ()).toRotationMatrix();
      } else {
        rot = (Eigen::AngleAxisd(uni(0, 2 * kPi), Vec3::UnitZ()) *
               Eigen::AngleAxisd(uni(0, kPi), Vec3::UnitY()) *
               Eigen::AngleAxisd(uni(0, 2 * kPi), Vec3::UnitZ()))
                  .toRotationMatrix();
      }
      BoundedInstance probe;
      probe.extent = ExtentKind::kRect;
      probe.center = pos;
      probe.half_u = half.norm();
      probe.half_v = 0.0;
      if (!try_place(probe)) continue;

      Vec3 ex = rot.col(0), ey = rot.col(1), ez = rot.col(2);
      scene.instances.push_back(
          detail::rect_plane(next_id++, ex, pos + half.x() * ex, ey, half.y(), half.z()));
      scene.instances.push_back(
          detail::rect_plane(next_id++, -ex, pos - half.x() * ex, ey, half.y(), half.z()));
      scene.instances.push_back(
          detail::rect_plane(next_id++, ey, pos + half.y() * ey, ez, half.z(), half.x()));
      scene.instances.push_back(
          detail::rect_plane(next_id++, -ey, pos - half.y() * ey, ez, half.z(), half.x()));
      scene.instances.push_back(
          detail::rect_plane(next_id++, ez, pos + half.z() * ez, ex, half.x(), half.y()));
      scene.instances.push_back(
          detail::rect_plane(next_id++, -ez, pos - half.z() * ez, ex, half.x(), half.y()));
      break;
    }
  }

  // Two freeform patches standing in for non-primitive background objects.
  for (int i = 0; i < 2; ++i) {
    BicubicPatch patch;
    patch.instance_id = next_id++;
    double size = uni(0.7, 1.2);
    Vec3 base = near_table_xy(0.8);
    base.z() = table_h + uni(0.1, 0.6);
    Vec3 normal = Vec3(uni(-0.4, 0.4), uni(-0.4, 0.4), 1.0).normalized();
    auto [u, v] = orthonormal_basis(normal);
    for (int iu = 0; iu < 4; ++iu) {
      for (int iv = 0; iv < 4; ++iv) {
        double fu = (iu / 3.0 - 0.5) * size;
        double fv = (iv / 3.0 - 0.5) * size;
        double bump = uni(-0.18, 0.18) * size;
        patch.p(iu, iv) = base + fu * u + fv * v + bump * normal;
      }
    }
    scene.other_surfaces.push_back(patch);
  }

  return scene;
}

// ---------------------------------------------------------------------------
// Scan poses

struct ScanPose {
  RigidTransform camera_to_world;  // camera axes: x right, y down, z forward
  Vec3 look_at = Vec3::Zero();
  double distance = 0.0;
};

struct PoseGridConfig {
  double lon_start = -kPi;
  double lon_step = kPi / 6.0;
  int lon_count = 12;
  double lat_start = -kPi / 6.0;
  double lat_step = kPi / 12.0;
  int lat_count = 8;
  int distances_per_direction = 2;
  double min_distance = 1.5;
  double max_distance = 4.0;
  double direction_jitter = kPi / 24.0;  // uniform in [-jitter, jitter]
  std::uint64_t seed = 0;
};

inline RigidTransform look_at_pose(const Vec3& eye, const Vec3& target) {
  Vec3 forward = (target - eye).normalized();
  Vec3 world_down(0, 0, -1);
  Vec3 right = world_down.cross(forward);
  if (right.norm() < 1e-9) right = Vec3::UnitX();  // looking straight up/down
  right.normalize();
  Vec3 down = forward.cross(right);
  RigidTransform pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.translation = eye;
  return pose;
}

/// Viewing directions on the longitude/latitude grid, two uniform distances
/// per direction, and per-pose uniform angular jitter applied to the viewing
/// direction. Deterministic given the config seed.
inline std::vector<ScanPose> sample_scan_poses(const SceneDescription& scene,
                                               const PoseGridConfig& config = {}) {
  std::mt19937_64 rng(config.seed);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const Vec3& target = scene.table_center;

  std::vector<ScanPose> poses;
  poses.reserve(static_cast<std::size_t>(config.lon_count) * config.lat_count *
                config.distances_per_direction);
  for (int ilon = 0; ilon < config.lon_count; ++ilon) {
    double lon = config.lon_start + ilon * config.lon_step;
    for (int ilat = 0; ilat < config.lat_count; ++ilat) {
      double lat = config.lat_start + ilat * config.lat_step;
      Vec3 dir(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat));
      for (int k = 0; k < config.distances_per_direction; ++k) {
        double dist = uni(config.min_distance, config.max_distance);
        Vec3 eye = target + dist * dir;
        RigidTransform pose = look_at_pose(eye, target);
        if (config.direction_jitter > 0.0) {
          double jx = uni(-config.direction_jitter, config.direction_jitter);
          double jy = uni(-config.direction_jitter, config.direction_jitter);
          // Horizontal jitter about the camera y axis, vertical about x.
          pose.rotation = pose.rotation *
                          (Eigen::AngleAxisd(jx, Vec3::UnitY()) *
                           Eigen::AngleAxisd(jy, Vec3::UnitX()))
                              .toRotationMatrix();
        }
        poses.push_back({pose, target, dist});
      }
    }
  }
  return poses;
}

}  // namespace primfit
