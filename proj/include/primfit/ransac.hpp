#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "primfit/minimal_fit.hpp"
#include "primfit/primitives.hpp"
#include "primfit/refine.hpp"

namespace primfit {

/// Detector parameters. Defaults follow the tuned baseline configuration:
/// 1000 supporting points, 0.03 m inlier distance, 30 degrees for consensus
/// scoring, 45 degrees for final inlier expansion, overlooking probability
/// 1e-4.
struct RansacParams {
  int min_support = 1000;
  double inlier_dist = 0.03;
  double angle_score = deg_to_rad(30.0);
  double angle_expand = deg_to_rad(45.0);
  double p_outlook = 1e-4;
  /// Upper bound on minimal samples drawn per extraction round (all classes
  /// combined). When reached, the best candidate is accepted if it clears
  /// min_support.
  int max_candidates_per_round = 8000;
  /// Candidates generated per class between acceptance checks.
  int batch_size = 64;
  /// Radius of the localized sampling ball as a fraction of the scene
  /// diameter.
  double local_radius_fraction = 0.02;
  /// Scene diameter in meters; 0 derives it from the input bounding box.
  /// Callers detecting on class subsets should pass the full scan's scale.
  double scene_diameter = 0.0;
  /// Candidate pre-ranking scores against at most this many points; the
  /// acceptance decision always uses an exact score. 0 disables subsetting.
  int score_subset = 4096;
  /// Least-squares refinement of accepted candidates.
  bool refit = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (inlier_dist <= 0.0) throw std::invalid_argument("inlier_dist must be positive");
    if (!(0.0 < angle_score && angle_score <= angle_expand && angle_expand < kPi / 2.0))
      throw std::invalid_argument("require 0 < angle_score <= angle_expand < pi/2");
    if (!(0.0 < p_outlook && p_outlook < 1.0))
      throw std::invalid_argument("p_outlook must be in (0,1)");
    if (min_support < 3) throw std::invalid_argument("min_support must be >= 3");
  }
};

/// Input points with unit normals. Pixel provenance (index into a
/// width x height grid) enables the image-connected-component filter;
/// leave `pixels` empty for free point sets.
struct PointSet {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<int> pixels;
  int image_width = 0;
  int image_height = 0;

  int size() const { return static_cast<int>(positions.size()); }
  bool has_pixels() const { return !pixels.empty(); }
};

struct Candidate {
  PrimitiveModel model;
  int score = 0;             // always equals inliers.size()
  std::vector<int> inliers;  // indices into the input point set
};

/// Probability that s independent minimal samples of size k all missed a
/// primitive supported by n of N points: (1 - (n/N)^k)^s.
inline double overlooking_probability(std::int64_t n, std::int64_t N, std::int64_t s, int k) {
  if (N <= 0 || n <= 0) return 1.0;
  double hit = std::pow(static_cast<double>(n) / static_cast<double>(N), k);
  return std::pow(1.0 - hit, static_cast<double>(s));
}

namespace detail {

/// Non-throwing surface normal for the scoring hot path; returns nullopt at
/// degenerate query points (sphere center, axis, apex).
inline std::optional<Vec3> surface_normal_if(const PrimitiveModel& m, const Vec3& q) {
  if (const Plane* p = std::get_if<Plane>(&m)) return surface_normal_at(*p, q);
  if (const Sphere* s = std::get_if<Sphere>(&m)) {
    Vec3 d = q - s->center;
    double n = d.norm();
    if (n < 1e-9) return std::nullopt;
    return Vec3(d / n);
  }
  if (const Cylinder* c = std::get_if<Cylinder>(&m)) {
    Vec3 w = q - c->axis_point;
    Vec3 radial = w - w.dot(c->axis_dir) * c->axis_dir;
    double rho = radial.norm();
    if (rho < 1e-9) return std::nullopt;
    return Vec3(radial / rho);
  }
  const Cone& k = std::get<Cone>(m);
  Vec3 w = q - k.apex;
  double s = w.dot(k.axis_dir);
  Vec3 radial = w - s * k.axis_dir;
  double rho = radial.norm();
  if (rho < 1e-9) return std::nullopt;
  return Vec3(std::cos(k.half_angle) * (radial / rho) - std::sin(k.half_angle) * k.axis_dir);
}

inline bool is_inlier(const PrimitiveModel& model, const Vec3& p, const Vec3& n,
                      double inlier_dist, double cos_angle) {
  if (distance(model, p) > inlier_dist) return false;
  std::optional<Vec3> mn = surface_normal_if(model, project(model, p));
  if (!mn) return false;
  return std::abs(mn->dot(n)) >= cos_angle;  // normals compared up to sign
}

inline int count_inliers(const PrimitiveModel& model, const PointSet& points,
                         std::span<const int> indices, double inlier_dist, double cos_angle) {
  int count = 0;
  for (int i : indices)
    if (is_inlier(model, points.positions[static_cast<std::size_t>(i)],
                  points.normals[static_cast<std::size_t>(i)], inlier_dist, cos_angle))
      ++count;
  return count;
}

inline std::vector<int> collect_inliers(const PrimitiveModel& model, const PointSet& points,
                                        std::span<const int> indices, double inlier_dist,
                                        double cos_angle) {
  std::vector<int> out;
  for (int i : indices)
    if (is_inlier(model, points.positions[static_cast<std::size_t>(i)],
                  points.normals[static_cast<std::size_t>(i)], inlier_dist, cos_angle))
      out.push_back(i);
  return out;
}

/// Uniform hash grid for localized sample neighborhoods.
class SpatialGrid {
 public:
  SpatialGrid(const PointSet& points, std::span<const int> indices, double cell)
      : cell_(std::max(cell, 1e-9)) {
    cells_.reserve(indices.size());
    for (int i : indices)
      cells_[key(points.positions[static_cast<std::size_t>(i)])].push_back(i);
  }

  void gather_ball(const PointSet& points, const Vec3& center, double radius,
                   std::vector<int>& out) const {
    out.clear();
    const double r2 = radius * radius;
    Eigen::Vector3i base = cell_of(center);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          auto it = cells_.find(pack(base.x() + dx, base.y() + dy, base.z() + dz));
          if (it == cells_.end()) continue;
          for (int i : it->second)
            if ((points.positions[static_cast<std::size_t>(i)] - center).squaredNorm() <= r2)
              out.push_back(i);
        }
  }

 private:
  Eigen::Vector3i cell_of(const Vec3& p) const {
    return Eigen::Vector3i(static_cast<int>(std::floor(p.x() / cell_)),
                           static_cast<int>(std::floor(p.y() / cell_)),
                           static_cast<int>(std::floor(p.z() / cell_)));
  }
  static std::uint64_t pack(int x, int y, int z) {
    auto u = [](int v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1FFFFF; };
    return u(x) | (u(y) << 21) | (u(z) << 42);
  }
  std::uint64_t key(const Vec3& p) const {
    Eigen::Vector3i c = cell_of(p);
    return pack(c.x(), c.y(), c.z());
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

/// Cheap candidate polish: least-squares refit against the candidate's own
/// inliers (collected at the expansion angle over a bounded subsample).
/// Minimal-sample models built from noisy estimated normals carry large
/// axis/apex errors that depress their consensus well below the instance
/// size; a refined model scores the instance it actually belongs to.
inline PrimitiveModel polish_candidate(const PrimitiveModel& model, const PointSet& points,
                                       std::span<const int> indices, double inlier_dist,
                                       double cos_expand) {
  constexpr int kMaxRefitPoints = 600;
  std::vector<int> inliers = collect_inliers(model, points, indices, inlier_dist, cos_expand);
  if (static_cast<int>(inliers.size()) < 12) return model;
  std::vector<OrientedPoint> pts;
  const int stride = std::max<int>(1, static_cast<int>(inliers.size()) / kMaxRefitPoints);
  for (std::size_t i = 0; i < inliers.size(); i += static_cast<std::size_t>(stride))
    pts.push_back({points.positions[static_cast<std::size_t>(inliers[i])],
                   points.normals[static_cast<std::size_t>(inliers[i])]});
  RefitResult refined = refit_least_squares(model, pts, 6);
  return refined.model;
}

/// Largest 8-connected pixel component of the given point indices; points
/// without pixel provenance pass through unfiltered.
inline std::vector<int> largest_pixel_component(const PointSet& points,
                                                const std::vector<int>& indices) {
  if (!points.has_pixels() || indices.empty()) return indices;
  const int w = points.image_width;
  std::unordered_map<int, int> pixel_to_pos;  // pixel index -> position in `indices`
  pixel_to_pos.reserve(indices.size());
  for (std::size_t pos = 0; pos < indices.size(); ++pos)
    pixel_to_pos[points.pixels[static_cast<std::size_t>(indices[pos])]] =
        static_cast<int>(pos);

  std::vector<char> visited(indices.size(), 0);
  std::vector<int> best, current, stack;
  for (std::size_t start = 0; start < indices.size(); ++start) {
    if (visited[start]) continue;
    current.clear();
    stack.assign(1, static_cast<int>(start));
    visited[start] = 1;
    while (!stack.empty()) {
      int pos = stack.back();
      stack.pop_back();
      current.push_back(indices[static_cast<std::size_t>(pos)]);
      int pixel = points.pixels[static_cast<std::size_t>(indices[static_cast<std::size_t>(pos)])];
      int px = pixel % w, py = pixel / w;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= points.image_height) continue;
          auto it = pixel_to_pos.find(ny * w + nx);
          if (it == pixel_to_pos.end() || visited[static_cast<std::size_t>(it->second)]) continue;
          visited[static_cast<std::size_t>(it->second)] = 1;
          stack.push_back(it->second);
        }
    }
    if (current.size() > best.size()) best = current;
  }
  std::sort(best.begin(), best.end());
  return best;
}

}  // namespace detail

/// Exact consensus of a model against a point set: inliers are points within
/// inlier_dist of the surface whose normals deviate from the surface normal
/// by at most max_angle (up to sign).
inline Candidate score_candidate(const PrimitiveModel& model, const PointSet& points,
                                 double inlier_dist, double max_angle) {
  std::vector<int> all(static_cast<std::size_t>(points.size()));
  for (int i = 0; i < points.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  Candidate c;
  c.model = model;
  c.inliers =
      detail::collect_inliers(model, points, all, inlier_dist, std::cos(max_angle));
  c.score = static_cast<int>(c.inliers.size());
  return c;
}

/// Greedy multi-instance detection over the allowed classes. Per round,
/// localized minimal samples generate candidates for every allowed class;
/// the best candidate is accepted once its overlooking probability drops
/// below p_outlook (or the round sample cap is reached), then its inliers
/// are expanded at angle_expand, reduced to the largest image-connected
/// component, refined, and removed from the working set. Stops when no
/// candidate reaches min_support. Deterministic given params.seed.
inline std::vector<Candidate> detect_primitives(const PointSet& points,
                                                std::span<const SurfaceClass> allowed_classes,
                                                const RansacParams& params) {
  params.validate();
  std::vector<Candidate> results;
  if (points.size() < params.min_support || allowed_classes.empty()) return results;

  std::mt19937_64 rng(params.seed);
  const double cos_score = std::cos(params.angle_score);
  const double cos_expand = std::cos(params.angle_expand);

  // Scene diameter from the bounding box.
  Vec3 lo = points.positions.front(), hi = lo;
  for (const Vec3& p : points.positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diameter =
      params.scene_diameter > 0.0 ? params.scene_diameter : std::max((hi - lo).norm(), 1e-6);
  const Vec3 bbox_center = 0.5 * (lo + hi);
  const double local_radius = params.local_radius_fraction * diameter;
  const double max_model_extent = 10.0 * diameter;  // reject runaway fits

  std::vector<int> remaining(static_cast<std::size_t>(points.size()));
  for (int i = 0; i < points.size(); ++i) remaining[static_cast<std::size_t>(i)] = i;

  auto model_sane = [&](const PrimitiveModel& m) {
    if (!model_is_valid(m)) return false;
    if (const Sphere* s = std::get_if<Sphere>(&m)) return s->radius < max_model_extent;
    if (const Cylinder* c = std::get_if<Cylinder>(&m)) return c->radius < max_model_extent;
    if (const Cone* k = std::get_if<Cone>(&m)) {
      // Wide cones with far-away apexes degenerate toward planes.
      return k->half_angle < deg_to_rad(80.0) &&
             (k->apex - bbox_center).norm() < 2.0 * diameter;
    }
    return true;
  };

  int failed_rounds = 0;
  while (static_cast<int>(remaining.size()) >= params.min_support && failed_rounds < 5) {
    const std::int64_t n_remaining = static_cast<std::int64_t>(remaining.size());
    detail::SpatialGrid grid(points, remaining, local_radius);

    // Deterministic scoring subset (stride sample of the working set).
    std::span<const int> subset(remaining);
    std::vector<int> subset_storage;
    if (params.score_subset > 0 && n_remaining > params.score_subset) {
      subset_storage.reserve(static_cast<std::size_t>(params.score_subset));
      double step = static_cast<double>(n_remaining) / params.score_subset;
      for (int i = 0; i < params.score_subset; ++i)
        subset_storage.push_back(remaining[static_cast<std::size_t>(i * step)]);
      subset = subset_storage;
    }
    const double subset_scale =
        static_cast<double>(n_remaining) / static_cast<double>(subset.size());

    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    std::vector<int> ball;
    auto draw_sample = [&](int k, std::array<int, 3>& out) {
      for (int attempt = 0; attempt < 10; ++attempt) {
        int seed_idx = remaining[pick(rng)];
        out[0] = seed_idx;
        if (k == 1) return true;
        grid.gather_ball(points, points.positions[static_cast<std::size_t>(seed_idx)],
                         local_radius, ball);
        if (static_cast<int>(ball.size()) < k) continue;  // seed included in ball
        bool ok = true;
        for (int j = 1; j < k && ok; ++j) {
          std::uniform_int_distribution<std::size_t> pick_ball(0, ball.size() - 1);
          for (int tries = 0;; ++tries) {
            if (tries >= 20) {
              ok = false;
              break;
            }
            int cand = ball[pick_ball(rng)];
            bool dup = false;
            for (int q = 0; q < j; ++q) dup = dup || out[static_cast<std::size_t>(q)] == cand;
            if (!dup) {
              out[static_cast<std::size_t>(j)] = cand;
              break;
            }
          }
        }
        if (ok) return true;
      }
      // Uniform fallback.
      for (int j = 0; j < k; ++j) {
        for (int tries = 0;; ++tries) {
          if (tries >= 50) return false;
          int cand = remaining[pick(rng)];
          bool dup = false;
          for (int q = 0; q < j; ++q) dup = dup || out[static_cast<std::size_t>(q)] == cand;
          if (!dup) {
            out[static_cast<std::size_t>(j)] = cand;
            break;
          }
        }
      }
      return true;
    };

    auto sample_model = [&](SurfaceClass cls) -> std::optional<PrimitiveModel> {
      std::array<int, 3> idx{};
      int k = minimal_sample_size(cls);
      if (!draw_sample(k, idx)) return std::nullopt;
      auto op = [&](int j) {
        return OrientedPoint{points.positions[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])],
                             points.normals[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])]};
      };
      switch (cls) {
        case SurfaceClass::kPlane: {
          auto fit = fit_plane_min(op(0).position, op(1).position, op(2).position);
          if (fit) return PrimitiveModel(*fit);
          return std::nullopt;
        }
        case SurfaceClass::kSphere: {
          auto fit = fit_sphere_min(op(0), op(1));
          if (fit) return PrimitiveModel(*fit);
          return std::nullopt;
        }
        case SurfaceClass::kCylinder: {
          auto fit = fit_cylinder_min(op(0), op(1));
          if (fit) return PrimitiveModel(*fit);
          return std::nullopt;
        }
        default: {
          auto fit = fit_cone_min(op(0), op(1), op(2));
          if (fit) return PrimitiveModel(*fit);
          return std::nullopt;
        }
      }
    };

    // One extraction round.
    struct Best {
      PrimitiveModel model;
      SurfaceClass cls = SurfaceClass::kInvalid;
      std::int64_t exact = -1;
    } best;
    std::array<std::int64_t, 4> samples_drawn{0, 0, 0, 0};
    std::int64_t round_samples = 0;
    bool accepted = false;

    while (!accepted && round_samples < params.max_candidates_per_round) {
      for (SurfaceClass cls : allowed_classes) {
        PrimitiveModel batch_best_model;
        double batch_best_est = -1.0;
        for (int b = 0; b < params.batch_size; ++b) {
          ++samples_drawn[static_cast<std::size_t>(cls)];
          ++round_samples;
          std::optional<PrimitiveModel> model = sample_model(cls);
          if (!model || !model_sane(*model)) continue;
          double est = subset_scale * detail::count_inliers(*model, points, subset,
                                                            params.inlier_dist, cos_score);
          if (est > batch_best_est) {
            batch_best_est = est;
            batch_best_model = *model;
          }
        }
        if (batch_best_est < 0.0) continue;
        // Polish and exact-score only candidates that could beat the
        // incumbent; the subset estimate is unbiased, so a 5% margin covers
        // its noise while skipping rediscoveries of the current best.
        if (best.exact >= 0 && batch_best_est < 1.05 * static_cast<double>(best.exact)) continue;
        PrimitiveModel polished = detail::polish_candidate(
            batch_best_model, points, subset, params.inlier_dist, cos_expand);
        if (model_sane(polished)) batch_best_model = polished;
        std::int64_t exact = detail::count_inliers(batch_best_model, points, remaining,
                                                   params.inlier_dist, cos_score);
        bool wins = exact > best.exact ||
                    (exact == best.exact && best.cls != SurfaceClass::kInvalid &&
                     static_cast<int>(cls) < static_cast<int>(best.cls));
        if (wins) {
          best.model = batch_best_model;
          best.cls = cls;
          best.exact = exact;
        }
      }

      if (best.exact >= params.min_support) {
        double p = overlooking_probability(best.exact, n_remaining,
                                           samples_drawn[static_cast<std::size_t>(best.cls)],
                                           minimal_sample_size(best.cls));
        if (p <= params.p_outlook) accepted = true;
      }
    }
    // Round cap reached: take the best candidate anyway when it clears the
    // support threshold.
    if (!accepted && best.exact >= params.min_support) accepted = true;
    if (!accepted) break;  // nothing reaches min_support

    // Expansion at the wider angle, connected-component filter, refinement.
    std::vector<int> expanded = detail::collect_inliers(best.model, points, remaining,
                                                        params.inlier_dist, cos_expand);
    std::vector<int> component = detail::largest_pixel_component(points, expanded);
    if (static_cast<int>(component.size()) < params.min_support) {
      ++failed_rounds;
      continue;
    }
    failed_rounds = 0;

    PrimitiveModel final_model = best.model;
    if (params.refit) {
      std::vector<OrientedPoint> inlier_points;
      inlier_points.reserve(component.size());
      for (int i : component)
        inlier_points.push_back({points.positions[static_cast<std::size_t>(i)],
                                 points.normals[static_cast<std::size_t>(i)]});
      RefitResult refined = refit_least_squares(final_model, inlier_points);
      if (model_sane(refined.model) && model_class(refined.model) == best.cls) {
        final_model = refined.model;
        // Re-collect against the refined model so the removed set matches
        // the reported one; a raw minimal-sample model can be tilted enough
        // to leave contiguous remnants of its own instance behind.
        expanded = detail::collect_inliers(final_model, points, remaining, params.inlier_dist,
                                           cos_expand);
        std::vector<int> refined_component = detail::largest_pixel_component(points, expanded);
        if (static_cast<int>(refined_component.size()) >= params.min_support)
          component = std::move(refined_component);
      }
    }

    Candidate out;
    out.model = final_model;
    out.inliers = component;
    out.score = static_cast<int>(component.size());
    results.push_back(std::move(out));

    // Remove the extracted points from the working set.
    std::vector<char> taken(static_cast<std::size_t>(points.size()), 0);
    for (int i : component) taken[static_cast<std::size_t>(i)] = 1;
    std::vector<int> next;
    next.reserve(remaining.size() - component.size());
    for (int i : remaining)
      if (!taken[static_cast<std::size_t>(i)]) next.push_back(i);
    remaining = std::move(next);
  }
  return results;
}

}  // namespace primfit
