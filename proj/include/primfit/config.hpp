#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "primfit/labels.hpp"
#include "primfit/ransac.hpp"
#include "primfit/render.hpp"
#include "primfit/scene.hpp"
#include "primfit/seg_oracle.hpp"

namespace primfit {

/// Whole-experiment configuration: dataset recipe, scanner, corruption,
/// detector parameters, label scheme, output directory. Serializes to a
/// sectioned key-value text that doubles as the reproduction manifest.
struct ExperimentConfig {
  // [dataset]
  int scenes = 4;
  int scans_per_scene = 9;
  std::uint64_t seed = 1;

  // [scene]
  SceneGenConfig scene_gen;

  // [poses]
  PoseGridConfig pose_grid;  // per-scene seed derived from the master seed

  // [scanner]
  ScannerConfig scanner;  // per-scan noise seed derived from the master seed

  // [labels]
  LabelScheme scheme = LabelScheme::kK6;

  // [corruption]
  CorruptionConfig corruption;

  // [ransac]
  RansacParams ransac;

  // [eval]
  int min_visible_pixels = 1;

  // [output]
  std::string out_dir = "out";
  int jobs = 1;

  void validate() const {
    if (scenes < 1) throw std::invalid_argument("dataset.scenes must be >= 1");
    if (scans_per_scene < 1 || scans_per_scene > 192)
      throw std::invalid_argument("dataset.scans_per_scene must be in [1,192]");
    if (scanner.noise_sigma < 0) throw std::invalid_argument("scanner.sigma must be >= 0");
    if (corruption.flip_rate < 0 || corruption.flip_rate > 1)
      throw std::invalid_argument("corruption.flip_rate must be in [0,1]");
    if (corruption.temperature <= 0)
      throw std::invalid_argument("corruption.temperature must be > 0");
    if (jobs < 1) throw std::invalid_argument("output.jobs must be >= 1");
    ransac.validate();
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic per-artifact seeds: every scene, scan, and stage gets an
/// independent stream derived from the master seed, so worker-pool order
/// never changes outputs.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t scene, std::uint64_t scan,
                                 std::uint64_t stage) {
  std::uint64_t h = detail::splitmix64(master ^ 0xA5A5A5A5A5A5A5A5ull);
  h = detail::splitmix64(h ^ scene);
  h = detail::splitmix64(h ^ (scan + 0x100000001ull));
  return detail::splitmix64(h ^ (stage + 0x200000002ull));
}

// ---------------------------------------------------------------------------
// Key-value text format: [section] headers, key = value lines, # comments.

class ConfigText {
 public:
  static ConfigText parse(const std::string& text) {
    ConfigText out;
    std::istringstream lines(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": malformed section header");
        section = trimmed.substr(1, trimmed.size() - 2);
        continue;
      }
      auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": expected key = value");
      std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
      out.values_[section + "." + key] = value;
    }
    return out;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& raw(const std::string& key) const { return values_.at(key); }

  /// Rejects keys outside the schema, naming the offender.
  void require_known(std::initializer_list<const char*> known) const {
    for (const auto& [key, value] : values_) {
      bool ok = false;
      for (const char* k : known) ok = ok || key == k;
      if (!ok) throw std::runtime_error("config field " + key + ": unknown key");
    }
  }

  double number(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t consumed = 0;
      double v = std::stod(it->second, &consumed);
      if (consumed != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config field " + key + ": not a number: " + it->second);
    }
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t consumed = 0;
      std::int64_t v = std::stoll(it->second, &consumed);
      if (consumed != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config field " + key + ": not an integer: " + it->second);
    }
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

 private:
  static std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::string> values_;
};

inline ExperimentConfig config_from_text(const std::string& text) {
  ConfigText kv = ConfigText::parse(text);
  kv.require_known({"dataset.scenes", "dataset.scans_per_scene", "dataset.seed",
                    "scene.room_extent", "scene.room_height", "scene.spheres",
                    "scene.cylinders", "scene.cones", "scene.boxes",
                    "scene.axis_aligned_fraction", "scene.min_object_size",
                    "scene.max_object_size", "poses.min_distance", "poses.max_distance",
                    "poses.jitter", "scanner.width", "scanner.height", "scanner.fx",
                    "scanner.fy", "scanner.cx", "scanner.cy", "scanner.sigma",
                    "scanner.max_range", "scanner.depth_proportional_noise", "labels.scheme",
                    "corruption.flip_rate", "corruption.blur_radius",
                    "corruption.boundary_erode_dilate", "corruption.temperature",
                    "ransac.min_support", "ransac.inlier_dist", "ransac.angle_score_deg",
                    "ransac.angle_expand_deg", "ransac.p_outlook",
                    "ransac.max_candidates_per_round", "ransac.score_subset", "ransac.refit",
                    "eval.min_visible_pixels", "output.dir", "output.jobs"});
  ExperimentConfig cfg;

  cfg.scenes = static_cast<int>(kv.integer("dataset.scenes", cfg.scenes));
  cfg.scans_per_scene =
      static_cast<int>(kv.integer("dataset.scans_per_scene", cfg.scans_per_scene));
  cfg.seed = static_cast<std::uint64_t>(kv.integer("dataset.seed", static_cast<std::int64_t>(cfg.seed)));

  cfg.scene_gen.room_extent = kv.number("scene.room_extent", cfg.scene_gen.room_extent);
  cfg.scene_gen.room_height = kv.number("scene.room_height", cfg.scene_gen.room_height);
  cfg.scene_gen.sphere_count =
      static_cast<int>(kv.integer("scene.spheres", cfg.scene_gen.sphere_count));
  cfg.scene_gen.cylinder_count =
      static_cast<int>(kv.integer("scene.cylinders", cfg.scene_gen.cylinder_count));
  cfg.scene_gen.cone_count = static_cast<int>(kv.integer("scene.cones", cfg.scene_gen.cone_count));
  cfg.scene_gen.box_count = static_cast<int>(kv.integer("scene.boxes", cfg.scene_gen.box_count));
  cfg.scene_gen.axis_aligned_fraction =
      kv.number("scene.axis_aligned_fraction", cfg.scene_gen.axis_aligned_fraction);
  cfg.scene_gen.min_object_size = kv.number("scene.min_object_size", cfg.scene_gen.min_object_size);
  cfg.scene_gen.max_object_size = kv.number("scene.max_object_size", cfg.scene_gen.max_object_size);

  cfg.pose_grid.min_distance = kv.number("poses.min_distance", cfg.pose_grid.min_distance);
  cfg.pose_grid.max_distance = kv.number("poses.max_distance", cfg.pose_grid.max_distance);
  cfg.pose_grid.direction_jitter = kv.number("poses.jitter", cfg.pose_grid.direction_jitter);

  cfg.scanner.width = static_cast<int>(kv.integer("scanner.width", cfg.scanner.width));
  cfg.scanner.height = static_cast<int>(kv.integer("scanner.height", cfg.scanner.height));
  cfg.scanner.intrinsics.fx = kv.number("scanner.fx", cfg.scanner.intrinsics.fx);
  cfg.scanner.intrinsics.fy = kv.number("scanner.fy", cfg.scanner.intrinsics.fy);
  cfg.scanner.intrinsics.cx = kv.number("scanner.cx", (cfg.scanner.width - 1) / 2.0);
  cfg.scanner.intrinsics.cy = kv.number("scanner.cy", (cfg.scanner.height - 1) / 2.0);
  cfg.scanner.noise_sigma = kv.number("scanner.sigma", cfg.scanner.noise_sigma);
  cfg.scanner.max_range = kv.number("scanner.max_range", cfg.scanner.max_range);
  cfg.scanner.depth_proportional_noise =
      kv.integer("scanner.depth_proportional_noise", 0) != 0;

  std::string scheme = kv.text("labels.scheme", scheme_name(cfg.scheme));
  auto parsed_scheme = scheme_from_name(scheme);
  if (!parsed_scheme)
    throw std::runtime_error("config field labels.scheme: unknown scheme " + scheme +
                             " (expected k4, k5b, k5o, k6)");
  cfg.scheme = *parsed_scheme;

  cfg.corruption.flip_rate = kv.number("corruption.flip_rate", cfg.corruption.flip_rate);
  cfg.corruption.blur_radius = kv.number("corruption.blur_radius", cfg.corruption.blur_radius);
  cfg.corruption.boundary_erode_dilate = static_cast<int>(
      kv.integer("corruption.boundary_erode_dilate", cfg.corruption.boundary_erode_dilate));
  cfg.corruption.temperature = kv.number("corruption.temperature", cfg.corruption.temperature);

  cfg.ransac.min_support = static_cast<int>(kv.integer("ransac.min_support", cfg.ransac.min_support));
  cfg.ransac.inlier_dist = kv.number("ransac.inlier_dist", cfg.ransac.inlier_dist);
  cfg.ransac.angle_score = deg_to_rad(kv.number("ransac.angle_score_deg", rad_to_deg(cfg.ransac.angle_score)));
  cfg.ransac.angle_expand =
      deg_to_rad(kv.number("ransac.angle_expand_deg", rad_to_deg(cfg.ransac.angle_expand)));
  cfg.ransac.p_outlook = kv.number("ransac.p_outlook", cfg.ransac.p_outlook);
  cfg.ransac.max_candidates_per_round = static_cast<int>(
      kv.integer("ransac.max_candidates_per_round", cfg.ransac.max_candidates_per_round));
  cfg.ransac.score_subset =
      static_cast<int>(kv.integer("ransac.score_subset", cfg.ransac.score_subset));
  cfg.ransac.refit = kv.integer("ransac.refit", cfg.ransac.refit ? 1 : 0) != 0;

  cfg.min_visible_pixels =
      static_cast<int>(kv.integer("eval.min_visible_pixels", cfg.min_visible_pixels));

  cfg.out_dir = kv.text("output.dir", cfg.out_dir);
  cfg.jobs = static_cast<int>(kv.integer("output.jobs", cfg.jobs));
  cfg.validate();
  return cfg;
}

namespace detail {

// Full-precision doubles so a manifest reparses to the exact configuration.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[dataset]\n";
  os << "scenes = " << cfg.scenes << "\n";
  os << "scans_per_scene = " << cfg.scans_per_scene << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "[scene]\n";
  os << "room_extent = " << detail::num(cfg.scene_gen.room_extent) << "\n";
  os << "room_height = " << detail::num(cfg.scene_gen.room_height) << "\n";
  os << "spheres = " << cfg.scene_gen.sphere_count << "\n";
  os << "cylinders = " << cfg.scene_gen.cylinder_count << "\n";
  os << "cones = " << cfg.scene_gen.cone_count << "\n";
  os << "boxes = " << cfg.scene_gen.box_count << "\n";
  os << "axis_aligned_fraction = " << detail::num(cfg.scene_gen.axis_aligned_fraction) << "\n";
  os << "min_object_size = " << detail::num(cfg.scene_gen.min_object_size) << "\n";
  os << "max_object_size = " << detail::num(cfg.scene_gen.max_object_size) << "\n";
  os << "[poses]\n";
  os << "min_distance = " << detail::num(cfg.pose_grid.min_distance) << "\n";
  os << "max_distance = " << detail::num(cfg.pose_grid.max_distance) << "\n";
  os << "jitter = " << detail::num(cfg.pose_grid.direction_jitter) << "\n";
  os << "[scanner]\n";
  os << "width = " << cfg.scanner.width << "\n";
  os << "height = " << cfg.scanner.height << "\n";
  os << "fx = " << detail::num(cfg.scanner.intrinsics.fx) << "\n";
  os << "fy = " << detail::num(cfg.scanner.intrinsics.fy) << "\n";
  os << "cx = " << detail::num(cfg.scanner.intrinsics.cx) << "\n";
  os << "cy = " << detail::num(cfg.scanner.intrinsics.cy) << "\n";
  os << "sigma = " << detail::num(cfg.scanner.noise_sigma) << "\n";
  os << "max_range = " << detail::num(cfg.scanner.max_range) << "\n";
  os << "depth_proportional_noise = " << (cfg.scanner.depth_proportional_noise ? 1 : 0) << "\n";
  os << "[labels]\n";
  os << "scheme = " << scheme_name(cfg.scheme) << "\n";
  os << "[corruption]\n";
  os << "flip_rate = " << detail::num(cfg.corruption.flip_rate) << "\n";
  os << "blur_radius = " << detail::num(cfg.corruption.blur_radius) << "\n";
  os << "boundary_erode_dilate = " << cfg.corruption.boundary_erode_dilate << "\n";
  os << "temperature = " << detail::num(cfg.corruption.temperature) << "\n";
  os << "[ransac]\n";
  os << "min_support = " << cfg.ransac.min_support << "\n";
  os << "inlier_dist = " << detail::num(cfg.ransac.inlier_dist) << "\n";
  os << "angle_score_deg = " << detail::num(rad_to_deg(cfg.ransac.angle_score)) << "\n";
  os << "angle_expand_deg = " << detail::num(rad_to_deg(cfg.ransac.angle_expand)) << "\n";
  os << "p_outlook = " << detail::num(cfg.ransac.p_outlook) << "\n";
  os << "max_candidates_per_round = " << cfg.ransac.max_candidates_per_round << "\n";
  os << "score_subset = " << cfg.ransac.score_subset << "\n";
  os << "refit = " << (cfg.ransac.refit ? 1 : 0) << "\n";
  os << "[eval]\n";
  os << "min_visible_pixels = " << cfg.min_visible_pixels << "\n";
  os << "[output]\n";
  os << "dir = " << cfg.out_dir << "\n";
  os << "jobs = " << cfg.jobs << "\n";
  return os.str();
}

/// FNV-1a over the canonical config text; stamped into manifests so a rerun
/// can prove it used the same configuration.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::string text = config_to_text(cfg);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return config_from_text(buf.str());
}

}  // namespace primfit
