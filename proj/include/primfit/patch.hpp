#pragma once

#include <Eigen/Dense>

#include <array>
#include <limits>
#include <optional>
#include <vector>

#include "primfit/core.hpp"

namespace primfit {

/// Bicubic Bezier patch over [0,1]^2, control points row-major P(i,j) with i
/// along u. Serves as the freeform "Other" background surface.
struct BicubicPatch {
  std::array<Vec3, 16> control{};
  int instance_id = 0;

  const Vec3& p(int i, int j) const { return control[static_cast<std::size_t>(i) * 4 + j]; }
  Vec3& p(int i, int j) { return control[static_cast<std::size_t>(i) * 4 + j]; }

  static std::array<double, 4> bernstein(double t) {
    double s = 1.0 - t;
    return {s * s * s, 3 * s * s * t, 3 * s * t * t, t * t * t};
  }
  static std::array<double, 4> bernstein_deriv(double t) {
    double s = 1.0 - t;
    return {-3 * s * s, 3 * s * s - 6 * s * t, 6 * s * t - 3 * t * t, 3 * t * t};
  }

  Vec3 eval(double u, double v) const { return weighted(bernstein(u), bernstein(v)); }
  Vec3 deriv_u(double u, double v) const { return weighted(bernstein_deriv(u), bernstein(v)); }
  Vec3 deriv_v(double u, double v) const { return weighted(bernstein(u), bernstein_deriv(v)); }

 private:
  Vec3 weighted(const std::array<double, 4>& bu, const std::array<double, 4>& bv) const {
    Vec3 out = Vec3::Zero();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out += bu[i] * bv[j] * p(i, j);
    return out;
  }
};

namespace detail {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }

  bool hit_by(const Vec3& origin, const Vec3& dir, double t_max) const {
    double t0 = 0.0, t1 = t_max;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(dir[k]) < 1e-15) {
        if (origin[k] < lo[k] || origin[k] > hi[k]) return false;
        continue;
      }
      double inv = 1.0 / dir[k];
      double a = (lo[k] - origin[k]) * inv;
      double b = (hi[k] - origin[k]) * inv;
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
      if (t0 > t1) return false;
    }
    return true;
  }
};

using ControlGrid = std::array<Vec3, 16>;

inline void split_curve(const Vec3 c[4], Vec3 left[4], Vec3 right[4]) {
  Vec3 m01 = 0.5 * (c[0] + c[1]), m12 = 0.5 * (c[1] + c[2]), m23 = 0.5 * (c[2] + c[3]);
  Vec3 m012 = 0.5 * (m01 + m12), m123 = 0.5 * (m12 + m23);
  Vec3 mid = 0.5 * (m012 + m123);
  left[0] = c[0]; left[1] = m01; left[2] = m012; left[3] = mid;
  right[0] = mid; right[1] = m123; right[2] = m23; right[3] = c[3];
}

inline void split_grid_u(const ControlGrid& g, ControlGrid& a, ControlGrid& b) {
  for (int j = 0; j < 4; ++j) {
    Vec3 col[4], l[4], r[4];
    for (int i = 0; i < 4; ++i) col[i] = g[static_cast<std::size_t>(i) * 4 + j];
    split_curve(col, l, r);
    for (int i = 0; i < 4; ++i) {
      a[static_cast<std::size_t>(i) * 4 + j] = l[i];
      b[static_cast<std::size_t>(i) * 4 + j] = r[i];
    }
  }
}

inline void split_grid_v(const ControlGrid& g, ControlGrid& a, ControlGrid& b) {
  for (int i = 0; i < 4; ++i) {
    Vec3 row[4], l[4], r[4];
    for (int j = 0; j < 4; ++j) row[j] = g[static_cast<std::size_t>(i) * 4 + j];
    split_curve(row, l, r);
    for (int j = 0; j < 4; ++j) {
      a[static_cast<std::size_t>(i) * 4 + j] = l[j];
      b[static_cast<std::size_t>(i) * 4 + j] = r[j];
    }
  }
}

}  // namespace detail

/// Ray-casting acceleration for one patch: de Casteljau subdivision into
/// cells whose control hulls give rigorous bounds, plus Newton refinement of
/// candidate hits seeded at cell centers.
class PatchIntersector {
 public:
  // depth alternates split axes; 6 gives an 8x8 cell grid.
  explicit PatchIntersector(const BicubicPatch& patch, int depth = 6) : patch_(patch) {
    subdivide(patch.control, 0.0, 1.0, 0.0, 1.0, depth);
    for (const auto& c : patch_.control) outer_.grow(c);
  }

  /// Smallest ray parameter t > t_eps hitting the patch, or nullopt.
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir,
                                  double t_max = std::numeric_limits<double>::max()) const {
    if (!outer_.hit_by(origin, dir, t_max)) return std::nullopt;
    double best = std::numeric_limits<double>::max();
    for (const auto& cell : cells_) {
      if (!cell.box.hit_by(origin, dir, t_max)) continue;
      if (auto t = newton(origin, dir, 0.5 * (cell.u0 + cell.u1), 0.5 * (cell.v0 + cell.v1)))
        best = std::min(best, *t);
    }
    if (best == std::numeric_limits<double>::max() || best > t_max) return std::nullopt;
    return best;
  }

 private:
  struct Cell {
    detail::Aabb box;
    double u0, u1, v0, v1;
  };

  void subdivide(const detail::ControlGrid& g, double u0, double u1, double v0, double v1,
                 int depth) {
    if (depth == 0) {
      Cell cell{{}, u0, u1, v0, v1};
      for (const auto& p : g) cell.box.grow(p);
      // Small inflation keeps silhouette rays from slipping between cells.
      Vec3 pad = 1e-9 * Vec3::Ones() + 1e-6 * (cell.box.hi - cell.box.lo);
      cell.box.lo -= pad;
      cell.box.hi += pad;
      cells_.push_back(cell);
      return;
    }
    detail::ControlGrid a, b;
    if ((depth & 1) == 0) {
      detail::split_grid_u(g, a, b);
      double um = 0.5 * (u0 + u1);
      subdivide(a, u0, um, v0, v1, depth - 1);
      subdivide(b, um, u1, v0, v1, depth - 1);
    } else {
      detail::split_grid_v(g, a, b);
      double vm = 0.5 * (v0 + v1);
      subdivide(a, u0, u1, v0, vm, depth - 1);
      subdivide(b, u0, u1, vm, v1, depth - 1);
    }
  }

  std::optional<double> newton(const Vec3& origin, const Vec3& dir, double u, double v) const {
    double t = 0.0;
    {
      // Initial t from projecting the seed surface point onto the ray.
      Vec3 s = patch_.eval(u, v);
      t = (s - origin).dot(dir) / dir.squaredNorm();
    }
    for (int iter = 0; iter < 16; ++iter) {
      Vec3 f = patch_.eval(u, v) - origin - t * dir;
      if (f.norm() < 1e-10) break;
      Mat3 jac;
      jac.col(0) = patch_.deriv_u(u, v);
      jac.col(1) = patch_.deriv_v(u, v);
      jac.col(2) = -dir;
      Eigen::FullPivLU<Mat3> lu(jac);
      if (!lu.isInvertible()) return std::nullopt;
      Vec3 step = lu.solve(f);
      u -= step[0];
      v -= step[1];
      t -= step[2];
      if (u < -0.5 || u > 1.5 || v < -0.5 || v > 1.5) return std::nullopt;
    }
    const double eps = 1e-9;
    if (u < -eps || u > 1.0 + eps || v < -eps || v > 1.0 + eps) return std::nullopt;
    if (t <= 1e-6) return std::nullopt;
    Vec3 f = patch_.eval(std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)) - origin - t * dir;
    if (f.norm() > 1e-7) return std::nullopt;
    return t;
  }

  BicubicPatch patch_;
  detail::Aabb outer_;
  std::vector<Cell> cells_;
};

}  // namespace primfit
