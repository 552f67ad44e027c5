#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "primfit/minimal_fit.hpp"
#include "primfit/primitives.hpp"

namespace primfit {

struct RefitResult {
  PrimitiveModel model;
  bool converged = false;     // parameter step dropped below tolerance
  double residual_before = 0.0;  // sum of squared distances at the seed
  double residual_after = 0.0;
};

namespace detail {

inline double sum_sq_distance(const PrimitiveModel& m, std::span<const OrientedPoint> pts) {
  double s = 0.0;
  for (const auto& op : pts) {
    double d = distance(m, op.position);
    s += d * d;
  }
  return s;
}

// Gauss-Newton over a minimal parameter vector with a numeric Jacobian.
// Steps are only accepted when they reduce the residual (with backtracking),
// so the result never regresses past the seed. A tiny Tikhonov term keeps
// under-determined normal equations solvable.
inline bool gauss_newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                         Eigen::VectorXd& params, int max_iterations, double step_tol) {
  const int np = static_cast<int>(params.size());
  Eigen::VectorXd r = residuals(params);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) return false;

  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::MatrixXd jac(r.size(), np);
    for (int j = 0; j < np; ++j) {
      double h = 1e-7 * std::max(1.0, std::abs(params[j]));
      Eigen::VectorXd p_hi = params, p_lo = params;
      p_hi[j] += h;
      p_lo[j] -= h;
      jac.col(j) = (residuals(p_hi) - residuals(p_lo)) / (2.0 * h);
    }

    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = jac.transpose() * r;
    double damping = 1e-10 * std::max(jtj.trace(), 1e-12);
    Eigen::VectorXd step;
    bool solved = false;
    for (int attempt = 0; attempt < 8 && !solved; ++attempt, damping *= 100.0) {
      Eigen::MatrixXd sys = jtj;
      sys.diagonal().array() += damping;
      step = sys.ldlt().solve(-jtr);
      solved = step.allFinite();
    }
    if (!solved) return false;
    if (step.norm() < step_tol) return true;

    // Backtracking line search on the GN step.
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 10; ++bt, alpha *= 0.5) {
      Eigen::VectorXd trial = params + alpha * step;
      Eigen::VectorXd rt = residuals(trial);
      double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct < cost) {
        params = trial;
        r = rt;
        cost = ct;
        accepted = true;
        break;
      }
    }
    if (!accepted) return false;  // stalled at a (local) minimum
    if ((alpha * step).norm() < step_tol) return true;
  }
  return false;
}

}  // namespace detail

/// Least-squares refinement of a primitive over its inlier points, seeded at
/// the input model. Minimal parameterizations per class: plane 3, sphere 4,
/// cylinder 5, cone 6. The returned model never has a larger total squared
/// distance than the seed; on solver failure the seed comes back unchanged
/// with converged = false.
inline RefitResult refit_least_squares(const PrimitiveModel& seed,
                                       std::span<const OrientedPoint> inliers,
                                       int max_iterations = 20, double step_tol = 1e-8) {
  RefitResult out{seed, false, detail::sum_sq_distance(seed, inliers), 0.0};
  out.residual_after = out.residual_before;
  if (inliers.empty()) return out;

  const int n = static_cast<int>(inliers.size());
  // Signed residuals keep the Jacobian smooth across the surface; the
  // squared cost matches the squared distance away from apex clamps.
  auto eval = [&](const PrimitiveModel& m) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = signed_offset(m, inliers[i].position);
    return r;
  };

  std::function<PrimitiveModel(const Eigen::VectorXd&)> decode;
  int np = 0;

  if (const Plane* pl = std::get_if<Plane>(&seed)) {
    np = 3;
    Plane base = *pl;
    auto [u, v] = orthonormal_basis(base.normal);
    decode = [base, u, v](const Eigen::VectorXd& q) {
      Vec3 nn = (base.normal + q[0] * u + q[1] * v).normalized();
      return PrimitiveModel(Plane{nn, base.offset + q[2]});
    };
  } else if (const Sphere* sp = std::get_if<Sphere>(&seed)) {
    np = 4;
    Sphere base = *sp;
    decode = [base](const Eigen::VectorXd& q) {
      return PrimitiveModel(
          Sphere{base.center + Vec3(q[0], q[1], q[2]), std::max(1e-9, base.radius + q[3])});
    };
  } else if (const Cylinder* cy = std::get_if<Cylinder>(&seed)) {
    np = 5;
    Cylinder base = *cy;
    auto [u, v] = orthonormal_basis(base.axis_dir);
    decode = [base, u, v](const Eigen::VectorXd& q) {
      Vec3 axis = (base.axis_dir + q[2] * u + q[3] * v).normalized();
      Vec3 point = base.axis_point + q[0] * u + q[1] * v;
      return PrimitiveModel(
          canonicalized(Cylinder{point, axis, std::max(1e-9, base.radius + q[4])}));
    };
  } else {
    np = 6;
    Cone base = std::get<Cone>(seed);
    auto [u, v] = orthonormal_basis(base.axis_dir);
    decode = [base, u, v](const Eigen::VectorXd& q) {
      Vec3 axis = (base.axis_dir + q[3] * u + q[4] * v).normalized();
      double angle = std::clamp(base.half_angle + q[5], 1e-6, kPi / 2.0 - 1e-6);
      return PrimitiveModel(Cone{base.apex + Vec3(q[0], q[1], q[2]), axis, angle});
    };
  }

  auto residuals = [&](const Eigen::VectorXd& q) { return eval(decode(q)); };
  Eigen::VectorXd params = Eigen::VectorXd::Zero(np);
  bool converged = detail::gauss_newton(residuals, params, max_iterations, step_tol);

  PrimitiveModel refined = decode(params);
  double after = detail::sum_sq_distance(refined, inliers);
  if (!model_is_valid(refined) || after > out.residual_before) {
    // Solver failure: keep the seed.
    return out;
  }
  out.model = refined;
  out.converged = converged;
  out.residual_after = after;
  return out;
}

}  // namespace primfit
