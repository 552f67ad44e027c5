#pragma once

#include <array>
#include <optional>
#include <vector>

#include "primfit/core.hpp"

namespace primfit {

/// Per-pixel ground-truth class and instance ids. instance_id 0 means none;
/// valid pixels always carry a positive instance id.
struct LabelMap {
  Image<std::uint8_t> class_id;    // SurfaceClass values
  Image<std::uint32_t> instance_id;

  LabelMap() = default;
  LabelMap(int w, int h)
      : class_id(w, h, static_cast<std::uint8_t>(SurfaceClass::kInvalid)),
        instance_id(w, h, 0u) {}

  int width() const { return class_id.width(); }
  int height() const { return class_id.height(); }

  SurfaceClass class_at(int x, int y) const {
    return static_cast<SurfaceClass>(class_id.at(x, y));
  }
  bool valid_at(int x, int y) const {
    return class_at(x, y) != SurfaceClass::kInvalid;
  }
};

/// Instance-aware boundary mask: a pixel is boundary when its window holds
/// two or more distinct instances or any invalid pixel. Invalid pixels are
/// never boundary themselves. Windows truncate at image borders.
inline Image<std::uint8_t> compute_boundaries(const LabelMap& labels, int window = 5) {
  const int r = window / 2;
  const int w = labels.width(), h = labels.height();
  Image<std::uint8_t> mask(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!labels.valid_at(x, y)) continue;
      std::uint32_t first_instance = 0;
      bool boundary = false;
      for (int dy = -r; dy <= r && !boundary; ++dy) {
        int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          if (!labels.valid_at(xx, yy)) {
            boundary = true;
            break;
          }
          std::uint32_t id = labels.instance_id.at(xx, yy);
          if (first_instance == 0) {
            first_instance = id;
          } else if (id != first_instance) {
            boundary = true;
            break;
          }
        }
      }
      mask.at(x, y) = boundary ? 1 : 0;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Label schemes

/// Class alphabets for the segmentation task. Primitive classes always take
/// indices 0..3; Boundary and Other append when the scheme includes them.
enum class LabelScheme : std::uint8_t {
  kK4 = 0,          // {Plane, Sphere, Cylinder, Cone}, Other ignored
  kK5Boundary = 1,  // + Boundary
  kK5Other = 2,     // + Other
  kK6 = 3,          // + Boundary + Other
};

enum class SegClass : std::uint8_t {
  kPlane = 0,
  kSphere = 1,
  kCylinder = 2,
  kCone = 3,
  kBoundary = 4,
  kOther = 5,
};

inline const char* scheme_name(LabelScheme s) {
  switch (s) {
    case LabelScheme::kK4: return "k4";
    case LabelScheme::kK5Boundary: return "k5b";
    case LabelScheme::kK5Other: return "k5o";
    case LabelScheme::kK6: return "k6";
  }
  return "?";
}

inline std::optional<LabelScheme> scheme_from_name(const std::string& s) {
  if (s == "k4") return LabelScheme::kK4;
  if (s == "k5b") return LabelScheme::kK5Boundary;
  if (s == "k5o") return LabelScheme::kK5Other;
  if (s == "k6") return LabelScheme::kK6;
  return std::nullopt;
}

inline bool scheme_has_boundary(LabelScheme s) {
  return s == LabelScheme::kK5Boundary || s == LabelScheme::kK6;
}
inline bool scheme_has_other(LabelScheme s) {
  return s == LabelScheme::kK5Other || s == LabelScheme::kK6;
}

inline std::vector<SegClass> scheme_alphabet(LabelScheme s) {
  std::vector<SegClass> out{SegClass::kPlane, SegClass::kSphere, SegClass::kCylinder,
                            SegClass::kCone};
  if (scheme_has_boundary(s)) out.push_back(SegClass::kBoundary);
  if (scheme_has_other(s)) out.push_back(SegClass::kOther);
  return out;
}

inline int scheme_class_count(LabelScheme s) {
  return 4 + (scheme_has_boundary(s) ? 1 : 0) + (scheme_has_other(s) ? 1 : 0);
}

inline const char* seg_class_name(SegClass c) {
  switch (c) {
    case SegClass::kPlane: return "PLN";
    case SegClass::kSphere: return "SPH";
    case SegClass::kCylinder: return "CYL";
    case SegClass::kCone: return "CON";
    case SegClass::kBoundary: return "BND";
    case SegClass::kOther: return "OTH";
  }
  return "???";
}

/// Per-pixel labels under a scheme: values in [0, K) index the scheme
/// alphabet; kIgnore marks valid pixels outside the alphabet (Other under
/// K4/K5b); kInvalid marks zero-depth pixels.
struct SchemeLabelMap {
  static constexpr std::uint8_t kIgnore = 254;
  static constexpr std::uint8_t kInvalid = 255;

  LabelScheme scheme = LabelScheme::kK4;
  Image<std::uint8_t> labels;

  int width() const { return labels.width(); }
  int height() const { return labels.height(); }
};

/// Builds scheme labels from ground truth. Precedence per pixel:
/// Boundary > Other > primitive class, with classes absent from the scheme
/// mapped to kIgnore.
inline SchemeLabelMap make_scheme_labels(const LabelMap& labels,
                                         const Image<std::uint8_t>& boundary,
                                         LabelScheme scheme) {
  const int w = labels.width(), h = labels.height();
  SchemeLabelMap out{scheme, Image<std::uint8_t>(w, h, SchemeLabelMap::kInvalid)};
  out.scheme = scheme;
  const bool has_boundary = scheme_has_boundary(scheme);
  const bool has_other = scheme_has_other(scheme);
  const std::uint8_t boundary_index = 4;
  const std::uint8_t other_index = has_boundary ? 5 : 4;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      SurfaceClass c = labels.class_at(x, y);
      if (c == SurfaceClass::kInvalid) continue;
      std::uint8_t& dst = out.labels.at(x, y);
      if (has_boundary && boundary.at(x, y)) {
        dst = boundary_index;
      } else if (c == SurfaceClass::kOther) {
        dst = has_other ? other_index : SchemeLabelMap::kIgnore;
      } else {
        dst = static_cast<std::uint8_t>(c);
      }
    }
  }
  return out;
}

}  // namespace primfit
