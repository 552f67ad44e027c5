#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "primfit/labels.hpp"

namespace primfit {

/// Per-class probability images {Y_k} under a label scheme. Invalid and
/// ignored pixels carry zero probability in every plane and are excluded
/// from argmax hypothesis sets and from the loss.
struct ProbabilityMaps {
  LabelScheme scheme = LabelScheme::kK4;
  std::vector<Image<float>> planes;

  int class_count() const { return static_cast<int>(planes.size()); }
  int width() const { return planes.empty() ? 0 : planes.front().width(); }
  int height() const { return planes.empty() ? 0 : planes.front().height(); }
};

/// Knobs of the segmentation oracle standing in for a trained network.
/// Applied in order: boundary morphology (label level), per-pixel flips,
/// Gaussian smoothing of each plane, temperature softening, renormalization.
struct CorruptionConfig {
  double flip_rate = 0.0;         // probability of reassigning a pixel's class
  double blur_radius = 0.0;       // Gaussian sigma in pixels
  int boundary_erode_dilate = 0;  // >0 dilates the boundary class, <0 erodes
  double temperature = 1.0;       // logit softening, 1 = none
  std::uint64_t seed = 0;
};

namespace detail {

inline bool is_class_label(std::uint8_t v) { return v < SchemeLabelMap::kIgnore; }

inline void gaussian_blur_plane(Image<float>& plane, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-0.5 * (i / sigma) * (i / sigma));
    kernel[static_cast<std::size_t>(i + radius)] = static_cast<float>(w);
    sum += w;
  }
  for (auto& w : kernel) w = static_cast<float>(w / sum);

  const int width = plane.width(), height = plane.height();
  Image<float> tmp(width, height, 0.0f);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        int xx = std::clamp(x + i, 0, width - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] * plane.at(xx, y);
      }
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        int yy = std::clamp(y + i, 0, height - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] * tmp.at(x, yy);
      }
      plane.at(x, y) = acc;
    }
  }
}

/// Morphological perturbation of the boundary class at the label level.
/// Dilation grows boundary into neighboring class pixels; erosion replaces
/// exposed boundary pixels with the majority neighboring class label.
inline SchemeLabelMap perturb_boundary(const SchemeLabelMap& gt, int amount) {
  if (amount == 0 || !scheme_has_boundary(gt.scheme)) return gt;
  const std::uint8_t boundary = 4;
  SchemeLabelMap out = gt;
  const int w = gt.width(), h = gt.height();
  for (int pass = 0; pass < std::abs(amount); ++pass) {
    SchemeLabelMap prev = out;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::uint8_t v = prev.labels.at(x, y);
        if (amount > 0) {
          if (!is_class_label(v) || v == boundary) continue;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              int xx = x + dx, yy = y + dy;
              if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
              if (prev.labels.at(xx, yy) == boundary) {
                out.labels.at(x, y) = boundary;
                goto next_pixel;
              }
            }
        } else {
          if (v != boundary) continue;
          int votes[6] = {0, 0, 0, 0, 0, 0};
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              int xx = x + dx, yy = y + dy;
              if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
              std::uint8_t nb = prev.labels.at(xx, yy);
              if (is_class_label(nb) && nb != boundary) ++votes[nb];
            }
          int best = -1, best_count = 0;
          for (int k = 0; k < 6; ++k)
            if (votes[k] > best_count) {
              best = k;
              best_count = votes[k];
            }
          if (best >= 0) out.labels.at(x, y) = static_cast<std::uint8_t>(best);
        }
      next_pixel:;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Ground-truth-derived probability maps with controlled corruption, the
/// stand-in for CNN inference. Deterministic given the corruption seed.
inline ProbabilityMaps oracle_probability_maps(const SchemeLabelMap& gt,
                                               const CorruptionConfig& corruption = {}) {
  const int k_count = scheme_class_count(gt.scheme);
  const int w = gt.width(), h = gt.height();
  SchemeLabelMap base = detail::perturb_boundary(gt, corruption.boundary_erode_dilate);

  std::mt19937_64 rng(corruption.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> other_class(0, k_count - 2);

  ProbabilityMaps maps;
  maps.scheme = gt.scheme;
  maps.planes.assign(static_cast<std::size_t>(k_count), Image<float>(w, h, 0.0f));

  // One-hot with seeded per-pixel flips to a different class.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = base.labels.at(x, y);
      if (!detail::is_class_label(v)) continue;
      int cls = v;
      if (corruption.flip_rate > 0.0 && coin(rng) < corruption.flip_rate) {
        int pick = other_class(rng);
        cls = pick >= cls ? pick + 1 : pick;
      }
      maps.planes[static_cast<std::size_t>(cls)].at(x, y) = 1.0f;
    }
  }

  for (auto& plane : maps.planes) detail::gaussian_blur_plane(plane, corruption.blur_radius);

  const bool soften = corruption.temperature != 1.0;
  const double inv_t = 1.0 / corruption.temperature;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!detail::is_class_label(gt.labels.at(x, y))) {
        for (auto& plane : maps.planes) plane.at(x, y) = 0.0f;
        continue;
      }
      double sum = 0.0;
      for (auto& plane : maps.planes) {
        double v = plane.at(x, y);
        if (soften) v = std::pow(v + 1e-12, inv_t);
        plane.at(x, y) = static_cast<float>(v);
        sum += v;
      }
      if (sum < 1e-12) {
        for (auto& plane : maps.planes) plane.at(x, y) = static_cast<float>(1.0 / k_count);
      } else {
        for (auto& plane : maps.planes)
          plane.at(x, y) = static_cast<float>(plane.at(x, y) / sum);
      }
    }
  }
  return maps;
}

// ---------------------------------------------------------------------------
// Argmax hypothesis sets

struct ArgmaxSegmentation {
  /// Per-pixel winning class index, kInvalid where no probability mass.
  Image<std::uint8_t> classes;
  /// M_k: pixel indices assigned to each class.
  std::vector<std::vector<int>> pixel_sets;
};

/// Classic argmax over {Y_k}; ties break toward the lowest class index.
inline ArgmaxSegmentation argmax_segmentation(const ProbabilityMaps& maps) {
  const int k_count = maps.class_count();
  const int w = maps.width(), h = maps.height();
  ArgmaxSegmentation out;
  out.classes = Image<std::uint8_t>(w, h, SchemeLabelMap::kInvalid);
  out.pixel_sets.assign(static_cast<std::size_t>(k_count), {});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = -1;
      float best_p = 0.0f;
      for (int k = 0; k < k_count; ++k) {
        float p = maps.planes[static_cast<std::size_t>(k)].at(x, y);
        if (p > best_p) {
          best_p = p;
          best = k;
        }
      }
      if (best < 0) continue;  // invalid or ignored pixel
      out.classes.at(x, y) = static_cast<std::uint8_t>(best);
      out.pixel_sets[static_cast<std::size_t>(best)].push_back(out.classes.index(x, y));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation metrics (precision / recall / IoU / F1 per class + accuracy)

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double iou = 0.0;
  double f1 = 0.0;
};

struct SegmentationMetrics {
  std::vector<ClassMetrics> per_class;
  ClassMetrics average;  // unweighted over classes
  double accuracy = 0.0;
  std::int64_t evaluated_pixels = 0;
};

/// Confusion-matrix metrics over valid, non-ignored ground-truth pixels.
/// Classes absent from both prediction and truth score 1.0 by convention.
inline SegmentationMetrics segmentation_metrics(const Image<std::uint8_t>& pred,
                                                const SchemeLabelMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw std::invalid_argument("prediction/ground-truth size mismatch");
  const int k_count = scheme_class_count(gt.scheme);
  std::vector<std::int64_t> tp(static_cast<std::size_t>(k_count), 0);
  std::vector<std::int64_t> fp(static_cast<std::size_t>(k_count), 0);
  std::vector<std::int64_t> fn(static_cast<std::size_t>(k_count), 0);
  std::int64_t correct = 0, total = 0;

  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    std::uint8_t truth = gt.labels[i];
    if (!detail::is_class_label(truth)) continue;
    std::uint8_t guess = pred[i];
    if (guess >= k_count) continue;  // prediction marked invalid
    ++total;
    if (guess == truth) {
      ++correct;
      ++tp[truth];
    } else {
      ++fp[guess];
      ++fn[truth];
    }
  }

  SegmentationMetrics out;
  out.evaluated_pixels = total;
  out.per_class.resize(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    auto& m = out.per_class[static_cast<std::size_t>(k)];
    std::int64_t t = tp[k], p_den = tp[k] + fp[k], r_den = tp[k] + fn[k];
    m.precision = p_den > 0 ? static_cast<double>(t) / p_den : (r_den == 0 ? 1.0 : 0.0);
    m.recall = r_den > 0 ? static_cast<double>(t) / r_den : (p_den == 0 ? 1.0 : 0.0);
    std::int64_t u = tp[k] + fp[k] + fn[k];
    m.iou = u > 0 ? static_cast<double>(t) / u : 1.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    out.average.precision += m.precision / k_count;
    out.average.recall += m.recall / k_count;
    out.average.iou += m.iou / k_count;
    out.average.f1 += m.f1 / k_count;
  }
  out.accuracy = total > 0 ? static_cast<double>(correct) / total : 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Multi-binomial loss

/// Class weights beta_k, proportional to one over the per-class pixel count
/// and normalized so they sum to the class count.
struct LossWeights {
  std::vector<double> beta;

  static LossWeights uniform(int k_count) {
    return LossWeights{std::vector<double>(static_cast<std::size_t>(k_count), 1.0)};
  }

  static LossWeights from_class_counts(const std::vector<std::int64_t>& counts) {
    LossWeights w;
    w.beta.resize(counts.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      w.beta[k] = 1.0 / static_cast<double>(std::max<std::int64_t>(counts[k], 1));
      sum += w.beta[k];
    }
    for (auto& b : w.beta) b *= static_cast<double>(counts.size()) / sum;
    return w;
  }
};

/// Pixel counts per scheme class over a label-map set, the input to the
/// weight rule.
inline std::vector<std::int64_t> class_pixel_counts(std::span<const SchemeLabelMap> maps) {
  if (maps.empty()) return {};
  std::vector<std::int64_t> counts(
      static_cast<std::size_t>(scheme_class_count(maps.front().scheme)), 0);
  for (const auto& m : maps)
    for (std::uint8_t v : m.labels)
      if (detail::is_class_label(v)) ++counts[v];
  return counts;
}

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> per_class;
};

/// Weighted sum over classes of per-pixel binary cross entropies
/// -ybar log y - (1 - ybar) log(1 - y), over valid non-ignored pixels, with
/// probabilities clamped to [1e-7, 1 - 1e-7].
inline LossBreakdown multi_binomial_loss(const ProbabilityMaps& maps, const SchemeLabelMap& gt,
                                         const LossWeights& weights) {
  const int k_count = scheme_class_count(gt.scheme);
  if (maps.class_count() != k_count || static_cast<int>(weights.beta.size()) != k_count)
    throw std::invalid_argument("scheme/class count mismatch");
  constexpr double kEps = 1e-7;

  LossBreakdown out;
  out.per_class.assign(static_cast<std::size_t>(k_count), 0.0);
  for (int k = 0; k < k_count; ++k) {
    const auto& plane = maps.planes[static_cast<std::size_t>(k)];
    double acc = 0.0;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
      std::uint8_t truth = gt.labels[i];
      if (!detail::is_class_label(truth)) continue;
      double y = std::clamp(static_cast<double>(plane[i]), kEps, 1.0 - kEps);
      acc += truth == k ? -std::log(y) : -std::log(1.0 - y);
    }
    out.per_class[static_cast<std::size_t>(k)] = acc;
    out.total += weights.beta[static_cast<std::size_t>(k)] * acc;
  }
  return out;
}

}  // namespace primfit
