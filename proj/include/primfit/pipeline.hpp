#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "primfit/labels.hpp"
#include "primfit/range_image.hpp"
#include "primfit/ransac.hpp"
#include "primfit/seg_oracle.hpp"

namespace primfit {

/// A detected primitive tied back to the scan grid through its inlier
/// pixels.
struct FittedPrimitive {
  PrimitiveModel model;
  SurfaceClass cls = SurfaceClass::kInvalid;
  std::vector<int> inlier_pixels;
};

/// Cached per-scan geometry: camera-frame points and PCA normals.
struct ScanPoints {
  PointMap points;
  NormalMap normals;
};

inline ScanPoints prepare_scan_points(const RangeImage& img, int normal_window = 5) {
  ScanPoints sp;
  sp.points = unproject(img);
  sp.normals = estimate_normals(sp.points, normal_window);
  return sp;
}

namespace detail {

inline PointSet point_set_from_pixels(const ScanPoints& sp, std::span<const int> pixels) {
  PointSet ps;
  ps.image_width = sp.points.width();
  ps.image_height = sp.points.height();
  ps.positions.reserve(pixels.size());
  for (int pixel : pixels) {
    const Vec3& p = sp.points[static_cast<std::size_t>(pixel)];
    const Vec3& n = sp.normals[static_cast<std::size_t>(pixel)];
    if (!point_valid(p) || !normal_valid(n)) continue;
    ps.positions.push_back(p);
    ps.normals.push_back(n);
    ps.pixels.push_back(pixel);
  }
  return ps;
}

inline std::vector<FittedPrimitive> to_fitted(const std::vector<Candidate>& candidates,
                                              const PointSet& ps) {
  std::vector<FittedPrimitive> out;
  out.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    FittedPrimitive fp;
    fp.model = c.model;
    fp.cls = model_class(c.model);
    fp.inlier_pixels.reserve(c.inliers.size());
    for (int i : c.inliers) fp.inlier_pixels.push_back(ps.pixels[static_cast<std::size_t>(i)]);
    out.push_back(std::move(fp));
  }
  return out;
}

}  // namespace detail

/// Per-class primitive fitting from argmax hypothesis sets: pixels split by
/// argmax class, boundary and background sets dropped, one single-class
/// detection per primitive class, results unioned. Per-class detector seeds
/// derive from params.seed so runs stay reproducible.
inline std::vector<FittedPrimitive> primitive_fitting(const ScanPoints& sp,
                                                      const ProbabilityMaps& maps,
                                                      const RansacParams& params) {
  ArgmaxSegmentation seg = argmax_segmentation(maps);

  // Localized sampling scales with the whole scan, not one class subset.
  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
  bool seen = false;
  for (std::size_t i = 0; i < sp.points.size(); ++i) {
    if (!point_valid(sp.points[i])) continue;
    if (!seen) {
      lo = hi = sp.points[i];
      seen = true;
    } else {
      lo = lo.cwiseMin(sp.points[i]);
      hi = hi.cwiseMax(sp.points[i]);
    }
  }
  const double scan_diameter = seen ? (hi - lo).norm() : 0.0;

  std::vector<FittedPrimitive> out;
  for (int k = 0; k < 4 && k < static_cast<int>(seg.pixel_sets.size()); ++k) {
    const std::vector<int>& pixels = seg.pixel_sets[static_cast<std::size_t>(k)];
    PointSet ps = detail::point_set_from_pixels(sp, pixels);
    if (ps.size() < params.min_support) continue;
    RansacParams class_params = params;
    class_params.seed = params.seed * 4 + static_cast<std::uint64_t>(k);
    if (class_params.scene_diameter <= 0.0) class_params.scene_diameter = scan_diameter;
    std::array<SurfaceClass, 1> allowed{static_cast<SurfaceClass>(k)};
    auto candidates = detect_primitives(ps, allowed, class_params);
    auto fitted = detail::to_fitted(candidates, ps);
    out.insert(out.end(), fitted.begin(), fitted.end());
  }
  return out;
}

inline std::vector<FittedPrimitive> primitive_fitting(const RangeImage& img,
                                                      const ProbabilityMaps& maps,
                                                      const RansacParams& params) {
  return primitive_fitting(prepare_scan_points(img), maps, params);
}

/// Baseline: one detection over the whole valid point set with all four
/// classes allowed.
inline std::vector<FittedPrimitive> eransac_baseline(const ScanPoints& sp,
                                                     const RansacParams& params) {
  std::vector<int> all_pixels;
  all_pixels.reserve(sp.points.size());
  for (int i = 0; i < static_cast<int>(sp.points.size()); ++i) all_pixels.push_back(i);
  PointSet ps = detail::point_set_from_pixels(sp, all_pixels);
  std::array<SurfaceClass, 4> allowed{SurfaceClass::kPlane, SurfaceClass::kSphere,
                                      SurfaceClass::kCylinder, SurfaceClass::kCone};
  return detail::to_fitted(detect_primitives(ps, allowed, params), ps);
}

inline std::vector<FittedPrimitive> eransac_baseline(const RangeImage& img,
                                                     const RansacParams& params) {
  return eransac_baseline(prepare_scan_points(img), params);
}

// ---------------------------------------------------------------------------
// Matching and scoring

/// Intersection-over-true: the fraction of a true instance's pixels covered
/// by the prediction's inliers.
inline double iot(const FittedPrimitive& prediction, std::span<const int> instance_pixels) {
  if (instance_pixels.empty()) throw std::invalid_argument("empty true instance");
  std::vector<int> pred = prediction.inlier_pixels;
  std::sort(pred.begin(), pred.end());
  std::int64_t hit = 0;
  for (int pixel : instance_pixels)
    if (std::binary_search(pred.begin(), pred.end(), pixel)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(instance_pixels.size());
}

/// Mean distance of all instance points to the predicted primitive.
inline double fitting_error(std::span<const Vec3> instance_points, const PrimitiveModel& model) {
  if (instance_points.empty()) return 0.0;
  double sum = 0.0;
  for (const Vec3& p : instance_points) sum += distance(model, p);
  return sum / static_cast<double>(instance_points.size());
}

struct Match {
  int prediction = -1;              // index into the prediction list
  std::uint32_t instance_id = 0;
  double iot = 0.0;
  double fit_error = 0.0;           // meters
  bool best_for_instance = false;   // smallest fit error among the instance's matches
};

/// Per-scan evaluation bookkeeping, indexed by primitive class (0..3).
struct ScanEvaluation {
  std::vector<Match> matches;
  std::array<std::int64_t, 4> n_predictions{};
  std::array<std::int64_t, 4> n_true{};
  std::array<std::int64_t, 4> n_predictions_matched{};  // N_p2t contribution
  std::array<std::int64_t, 4> n_true_matched{};         // N_t2p contribution
  std::array<double, 4> err_matched_sum{};              // over matched predictions
  std::array<std::int64_t, 4> err_matched_count{};
  std::array<double, 4> err_best_sum{};                 // over best matches only
  std::array<std::int64_t, 4> err_best_count{};
};

inline constexpr double kIotThreshold = 0.3;

/// Matches predictions against ground-truth instances of one scan. A
/// prediction matches the same-class instance maximizing IoT, provided
/// IoT > 0.3 (ties broken by smaller fitting error); each true instance with
/// matches counts once toward N_t2p through its smallest-error prediction.
/// Instances need min_visible_pixels ground-truth pixels to count as true.
inline ScanEvaluation match_detections(const std::vector<FittedPrimitive>& predictions,
                                       const LabelMap& gt, const PointMap& observed_points,
                                       int min_visible_pixels = 1) {
  ScanEvaluation eval;

  // Collect per-instance pixel sets for primitive classes.
  struct InstanceData {
    SurfaceClass cls = SurfaceClass::kInvalid;
    std::vector<int> pixels;
  };
  std::map<std::uint32_t, InstanceData> instances;
  for (int i = 0; i < static_cast<int>(gt.class_id.size()); ++i) {
    SurfaceClass cls = static_cast<SurfaceClass>(gt.class_id[static_cast<std::size_t>(i)]);
    if (!is_primitive_class(cls)) continue;
    std::uint32_t id = gt.instance_id[static_cast<std::size_t>(i)];
    InstanceData& data = instances[id];
    data.cls = cls;
    data.pixels.push_back(i);
  }
  for (auto it = instances.begin(); it != instances.end();) {
    if (static_cast<int>(it->second.pixels.size()) < min_visible_pixels)
      it = instances.erase(it);
    else
      ++it;
  }
  for (const auto& [id, data] : instances)
    ++eval.n_true[static_cast<std::size_t>(data.cls)];

  // Instance points for fitting errors (observed, camera frame).
  auto instance_points = [&](const InstanceData& data) {
    std::vector<Vec3> pts;
    pts.reserve(data.pixels.size());
    for (int pixel : data.pixels) {
      const Vec3& p = observed_points[static_cast<std::size_t>(pixel)];
      if (point_valid(p)) pts.push_back(p);
    }
    return pts;
  };

  // Greedy per-prediction assignment to the best-IoT same-class instance.
  std::map<std::uint32_t, std::vector<std::size_t>> instance_matches;
  for (int pi = 0; pi < static_cast<int>(predictions.size()); ++pi) {
    const FittedPrimitive& pred = predictions[static_cast<std::size_t>(pi)];
    if (!is_primitive_class(pred.cls)) continue;
    ++eval.n_predictions[static_cast<std::size_t>(pred.cls)];

    std::vector<char> member(gt.class_id.size(), 0);
    for (int pixel : pred.inlier_pixels) member[static_cast<std::size_t>(pixel)] = 1;

    std::uint32_t best_id = 0;
    double best_iot = kIotThreshold;
    double best_err = 0.0;
    for (const auto& [id, data] : instances) {
      if (data.cls != pred.cls) continue;
      std::int64_t hit = 0;
      for (int pixel : data.pixels) hit += member[static_cast<std::size_t>(pixel)];
      double ratio = static_cast<double>(hit) / static_cast<double>(data.pixels.size());
      if (ratio <= kIotThreshold) continue;
      double err = fitting_error(instance_points(data), pred.model);
      if (ratio > best_iot || (ratio == best_iot && best_id != 0 && err < best_err)) {
        best_id = id;
        best_iot = ratio;
        best_err = err;
      }
    }
    if (best_id == 0) continue;

    Match match;
    match.prediction = pi;
    match.instance_id = best_id;
    match.iot = best_iot;
    match.fit_error = best_err;
    instance_matches[best_id].push_back(eval.matches.size());
    eval.matches.push_back(match);
    ++eval.n_predictions_matched[static_cast<std::size_t>(pred.cls)];
    eval.err_matched_sum[static_cast<std::size_t>(pred.cls)] += best_err;
    ++eval.err_matched_count[static_cast<std::size_t>(pred.cls)];
  }

  // Best match per instance (smallest fitting error).
  for (const auto& [id, match_ids] : instance_matches) {
    std::size_t best = match_ids.front();
    for (std::size_t mi : match_ids)
      if (eval.matches[mi].fit_error < eval.matches[best].fit_error) best = mi;
    eval.matches[best].best_for_instance = true;
    SurfaceClass cls = instances[id].cls;
    ++eval.n_true_matched[static_cast<std::size_t>(cls)];
    eval.err_best_sum[static_cast<std::size_t>(cls)] += eval.matches[best].fit_error;
    ++eval.err_best_count[static_cast<std::size_t>(cls)];
  }
  return eval;
}

// ---------------------------------------------------------------------------
// Aggregated detection report

struct ReportRow {
  std::int64_t n_p = 0;    // predictions
  std::int64_t n_t = 0;    // true instances
  std::int64_t n_p2t = 0;  // predictions with a matched instance
  std::int64_t n_t2p = 0;  // instances with a best prediction
  double pap = 0.0;
  double par = 0.0;
  double ratio = 0.0;      // N_t2p / N_p
  bool pap_defined = false;
  double err_matched_cm = 0.0;
  double err_best_cm = 0.0;

  void finalize(double err_matched_sum_m, std::int64_t err_matched_n, double err_best_sum_m,
                std::int64_t err_best_n) {
    pap_defined = n_p > 0;
    pap = pap_defined ? static_cast<double>(n_p2t) / static_cast<double>(n_p) : 0.0;
    par = n_t > 0 ? static_cast<double>(n_t2p) / static_cast<double>(n_t) : 0.0;
    ratio = n_p > 0 ? static_cast<double>(n_t2p) / static_cast<double>(n_p) : 0.0;
    err_matched_cm = err_matched_n > 0 ? 100.0 * err_matched_sum_m / err_matched_n : 0.0;
    err_best_cm = err_best_n > 0 ? 100.0 * err_best_sum_m / err_best_n : 0.0;
  }
};

/// Table-shaped summary: one row per primitive class plus the ALL row, with
/// PAP/PAR counted over the whole evaluated scan set and errors in cm.
struct DetectionReport {
  std::array<ReportRow, 4> per_class;
  ReportRow all;
};

inline DetectionReport aggregate_report(std::span<const ScanEvaluation> scans) {
  DetectionReport report;
  std::array<double, 4> err_matched_sum{}, err_best_sum{};
  std::array<std::int64_t, 4> err_matched_n{}, err_best_n{};
  for (const ScanEvaluation& scan : scans) {
    for (std::size_t k = 0; k < 4; ++k) {
      report.per_class[k].n_p += scan.n_predictions[k];
      report.per_class[k].n_t += scan.n_true[k];
      report.per_class[k].n_p2t += scan.n_predictions_matched[k];
      report.per_class[k].n_t2p += scan.n_true_matched[k];
      err_matched_sum[k] += scan.err_matched_sum[k];
      err_matched_n[k] += scan.err_matched_count[k];
      err_best_sum[k] += scan.err_best_sum[k];
      err_best_n[k] += scan.err_best_count[k];
    }
  }
  double all_matched_sum = 0.0, all_best_sum = 0.0;
  std::int64_t all_matched_n = 0, all_best_n = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    report.per_class[k].finalize(err_matched_sum[k], err_matched_n[k], err_best_sum[k],
                                 err_best_n[k]);
    report.all.n_p += report.per_class[k].n_p;
    report.all.n_t += report.per_class[k].n_t;
    report.all.n_p2t += report.per_class[k].n_p2t;
    report.all.n_t2p += report.per_class[k].n_t2p;
    all_matched_sum += err_matched_sum[k];
    all_matched_n += err_matched_n[k];
    all_best_sum += err_best_sum[k];
    all_best_n += err_best_n[k];
  }
  report.all.finalize(all_matched_sum, all_matched_n, all_best_sum, all_best_n);
  return report;
}

/// Builds the ALL row directly from externally given totals, for arithmetic
/// checks against published counts.
inline ReportRow report_row_from_counts(std::int64_t n_p, std::int64_t n_t, std::int64_t n_p2t,
                                        std::int64_t n_t2p) {
  ReportRow row;
  row.n_p = n_p;
  row.n_t = n_t;
  row.n_p2t = n_p2t;
  row.n_t2p = n_t2p;
  row.finalize(0.0, 0, 0.0, 0);
  return row;
}

}  // namespace primfit
