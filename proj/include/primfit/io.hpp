#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "primfit/labels.hpp"
#include "primfit/pipeline.hpp"
#include "primfit/range_image.hpp"
#include "primfit/scene.hpp"
#include "primfit/seg_oracle.hpp"

namespace primfit {

static_assert(std::endian::native == std::endian::little,
              "serializers write little-endian host bytes");

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("truncated stream");
  return value;
}

inline void write_magic(std::ostream& os, const char tag[4]) { os.write(tag, 4); }

inline std::string read_tag(std::istream& is) {
  char buf[4];
  is.read(buf, 4);
  if (!is) throw std::runtime_error("truncated stream");
  return std::string(buf, 4);
}

inline void write_header(std::ostream& os, const char descriptor[4], std::uint32_t width,
                         std::uint32_t height) {
  write_magic(os, "BAGS");
  write_pod<std::uint32_t>(os, 1u);  // version
  write_pod(os, width);
  write_pod(os, height);
  write_magic(os, descriptor);
}

inline std::pair<std::uint32_t, std::uint32_t> read_header(std::istream& is,
                                                           const char expected[4]) {
  if (read_tag(is) != "BAGS") throw std::runtime_error("bad magic, expected BAGS");
  auto version = read_pod<std::uint32_t>(is);
  if (version != 1u) throw std::runtime_error("unsupported container version");
  auto width = read_pod<std::uint32_t>(is);
  auto height = read_pod<std::uint32_t>(is);
  std::string desc = read_tag(is);
  if (desc != std::string(expected, 4))
    throw std::runtime_error("unexpected channel descriptor " + desc);
  return {width, height};
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Range image container, descriptor "DPTH": f64 intrinsics and camera pose,
// then row-major f32 depth.

inline void write_range_image(std::ostream& os, const RangeImage& img) {
  detail::write_header(os, "DPTH", static_cast<std::uint32_t>(img.width),
                       static_cast<std::uint32_t>(img.height));
  detail::write_pod(os, img.intrinsics.fx);
  detail::write_pod(os, img.intrinsics.fy);
  detail::write_pod(os, img.intrinsics.cx);
  detail::write_pod(os, img.intrinsics.cy);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) detail::write_pod(os, img.camera_to_world.rotation(r, c));
  for (int r = 0; r < 3; ++r) detail::write_pod(os, img.camera_to_world.translation[r]);
  os.write(reinterpret_cast<const char*>(img.depth.data()),
           static_cast<std::streamsize>(img.depth.size() * sizeof(float)));
}

inline RangeImage read_range_image(std::istream& is) {
  auto [w, h] = detail::read_header(is, "DPTH");
  RangeImage img(static_cast<int>(w), static_cast<int>(h));
  img.intrinsics.fx = detail::read_pod<double>(is);
  img.intrinsics.fy = detail::read_pod<double>(is);
  img.intrinsics.cx = detail::read_pod<double>(is);
  img.intrinsics.cy = detail::read_pod<double>(is);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) img.camera_to_world.rotation(r, c) = detail::read_pod<double>(is);
  for (int r = 0; r < 3; ++r) img.camera_to_world.translation[r] = detail::read_pod<double>(is);
  is.read(reinterpret_cast<char*>(img.depth.data()),
          static_cast<std::streamsize>(img.depth.size() * sizeof(float)));
  if (!is) throw std::runtime_error("truncated depth payload");
  return img;
}

inline void save_range_image(const std::string& path, const RangeImage& img) {
  auto os = detail::open_out(path);
  write_range_image(os, img);
}

inline RangeImage load_range_image(const std::string& path) {
  auto is = detail::open_in(path);
  return read_range_image(is);
}

// ---------------------------------------------------------------------------
// Label map container, descriptor "LABL": row-major u8 class ids then u32
// instance ids.

inline void write_label_map(std::ostream& os, const LabelMap& labels) {
  detail::write_header(os, "LABL", static_cast<std::uint32_t>(labels.width()),
                       static_cast<std::uint32_t>(labels.height()));
  os.write(reinterpret_cast<const char*>(labels.class_id.data()),
           static_cast<std::streamsize>(labels.class_id.size()));
  os.write(reinterpret_cast<const char*>(labels.instance_id.data()),
           static_cast<std::streamsize>(labels.instance_id.size() * sizeof(std::uint32_t)));
}

inline LabelMap read_label_map(std::istream& is) {
  auto [w, h] = detail::read_header(is, "LABL");
  LabelMap labels(static_cast<int>(w), static_cast<int>(h));
  is.read(reinterpret_cast<char*>(labels.class_id.data()),
          static_cast<std::streamsize>(labels.class_id.size()));
  is.read(reinterpret_cast<char*>(labels.instance_id.data()),
          static_cast<std::streamsize>(labels.instance_id.size() * sizeof(std::uint32_t)));
  if (!is) throw std::runtime_error("truncated label payload");
  return labels;
}

inline void save_label_map(const std::string& path, const LabelMap& labels) {
  auto os = detail::open_out(path);
  write_label_map(os, labels);
}

inline LabelMap load_label_map(const std::string& path) {
  auto is = detail::open_in(path);
  return read_label_map(is);
}

// ---------------------------------------------------------------------------
// Probability map container, descriptor "PROB": class count u32, scheme u8,
// then K row-major f32 planes.

inline void write_probability_maps(std::ostream& os, const ProbabilityMaps& maps) {
  detail::write_header(os, "PROB", static_cast<std::uint32_t>(maps.width()),
                       static_cast<std::uint32_t>(maps.height()));
  detail::write_pod(os, static_cast<std::uint32_t>(maps.class_count()));
  detail::write_pod(os, static_cast<std::uint8_t>(maps.scheme));
  for (const auto& plane : maps.planes)
    os.write(reinterpret_cast<const char*>(plane.data()),
             static_cast<std::streamsize>(plane.size() * sizeof(float)));
}

inline ProbabilityMaps read_probability_maps(std::istream& is) {
  auto [w, h] = detail::read_header(is, "PROB");
  auto k_count = detail::read_pod<std::uint32_t>(is);
  auto scheme = static_cast<LabelScheme>(detail::read_pod<std::uint8_t>(is));
  if (static_cast<int>(k_count) != scheme_class_count(scheme))
    throw std::runtime_error("probability plane count does not match scheme");
  ProbabilityMaps maps;
  maps.scheme = scheme;
  maps.planes.assign(k_count, Image<float>(static_cast<int>(w), static_cast<int>(h), 0.0f));
  for (auto& plane : maps.planes) {
    is.read(reinterpret_cast<char*>(plane.data()),
            static_cast<std::streamsize>(plane.size() * sizeof(float)));
  }
  if (!is) throw std::runtime_error("truncated probability payload");
  return maps;
}

inline void save_probability_maps(const std::string& path, const ProbabilityMaps& maps) {
  auto os = detail::open_out(path);
  write_probability_maps(os, maps);
}

inline ProbabilityMaps load_probability_maps(const std::string& path) {
  auto is = detail::open_in(path);
  return read_probability_maps(is);
}

// ---------------------------------------------------------------------------
// Scene text format: one instance per line, doubles printed with enough
// digits to round-trip exactly.

namespace detail {

inline void put_double(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << ' ' << buf;
}

inline void put_vec(std::ostream& os, const Vec3& v) {
  put_double(os, v.x());
  put_double(os, v.y());
  put_double(os, v.z());
}

inline Vec3 get_vec(std::istream& is) {
  Vec3 v;
  is >> v.x() >> v.y() >> v.z();
  return v;
}

}  // namespace detail

inline std::string scene_to_text(const SceneDescription& scene) {
  std::ostringstream os;
  os << "scene_format 1\n";
  os << "room";
  detail::put_double(os, scene.room_extent);
  detail::put_double(os, scene.room_height);
  os << "\ntable_center";
  detail::put_vec(os, scene.table_center);
  os << '\n';
  for (const BoundedInstance& inst : scene.instances) {
    os << "instance " << inst.instance_id << ' ' << class_name(inst.cls());
    switch (inst.cls()) {
      case SurfaceClass::kPlane: {
        const Plane& p = std::get<Plane>(inst.model);
        detail::put_vec(os, p.normal);
        detail::put_double(os, p.offset);
        break;
      }
      case SurfaceClass::kSphere: {
        const Sphere& s = std::get<Sphere>(inst.model);
        detail::put_vec(os, s.center);
        detail::put_double(os, s.radius);
        break;
      }
      case SurfaceClass::kCylinder: {
        const Cylinder& c = std::get<Cylinder>(inst.model);
        detail::put_vec(os, c.axis_point);
        detail::put_vec(os, c.axis_dir);
        detail::put_double(os, c.radius);
        break;
      }
      case SurfaceClass::kCone: {
        const Cone& c = std::get<Cone>(inst.model);
        detail::put_vec(os, c.apex);
        detail::put_vec(os, c.axis_dir);
        detail::put_double(os, c.half_angle);
        break;
      }
      default: break;
    }
    switch (inst.extent) {
      case ExtentKind::kRect:
        os << " rect";
        detail::put_vec(os, inst.center);
        detail::put_vec(os, inst.u_axis);
        detail::put_vec(os, inst.v_axis);
        detail::put_double(os, inst.half_u);
        detail::put_double(os, inst.half_v);
        break;
      case ExtentKind::kDisk:
        os << " disk";
        detail::put_vec(os, inst.center);
        detail::put_vec(os, inst.u_axis);
        detail::put_vec(os, inst.v_axis);
        detail::put_double(os, inst.half_u);
        break;
      case ExtentKind::kFull:
        os << " full";
        break;
      case ExtentKind::kAxialSpan:
        os << " span";
        detail::put_double(os, inst.span_min);
        detail::put_double(os, inst.span_max);
        break;
    }
    os << '\n';
  }
  for (const BicubicPatch& patch : scene.other_surfaces) {
    os << "patch " << patch.instance_id;
    for (const Vec3& c : patch.control) detail::put_vec(os, c);
    os << '\n';
  }
  return os.str();
}

inline SceneDescription scene_from_text(const std::string& text) {
  SceneDescription scene;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string kind;
    is >> kind;
    if (kind == "scene_format") {
      int version = 0;
      is >> version;
      if (version != 1) throw std::runtime_error("unsupported scene format version");
    } else if (kind == "room") {
      is >> scene.room_extent >> scene.room_height;
    } else if (kind == "table_center") {
      scene.table_center = detail::get_vec(is);
    } else if (kind == "instance") {
      BoundedInstance inst;
      std::string cls;
      is >> inst.instance_id >> cls;
      if (cls == "plane") {
        Plane p;
        p.normal = detail::get_vec(is);
        is >> p.offset;
        inst.model = p;
      } else if (cls == "sphere") {
        Sphere s;
        s.center = detail::get_vec(is);
        is >> s.radius;
        inst.model = s;
      } else if (cls == "cylinder") {
        Cylinder c;
        c.axis_point = detail::get_vec(is);
        c.axis_dir = detail::get_vec(is);
        is >> c.radius;
        inst.model = c;
      } else if (cls == "cone") {
        Cone c;
        c.apex = detail::get_vec(is);
        c.axis_dir = detail::get_vec(is);
        is >> c.half_angle;
        inst.model = c;
      } else {
        throw std::runtime_error("unknown instance class: " + cls);
      }
      std::string extent;
      is >> extent;
      if (extent == "rect") {
        inst.extent = ExtentKind::kRect;
        inst.center = detail::get_vec(is);
        inst.u_axis = detail::get_vec(is);
        inst.v_axis = detail::get_vec(is);
        is >> inst.half_u >> inst.half_v;
      } else if (extent == "disk") {
        inst.extent = ExtentKind::kDisk;
        inst.center = detail::get_vec(is);
        inst.u_axis = detail::get_vec(is);
        inst.v_axis = detail::get_vec(is);
        is >> inst.half_u;
        inst.half_v = inst.half_u;
      } else if (extent == "full") {
        inst.extent = ExtentKind::kFull;
      } else if (extent == "span") {
        inst.extent = ExtentKind::kAxialSpan;
        is >> inst.span_min >> inst.span_max;
      } else {
        throw std::runtime_error("unknown extent kind: " + extent);
      }
      if (!is) throw std::runtime_error("malformed instance line: " + line);
      scene.instances.push_back(inst);
    } else if (kind == "patch") {
      BicubicPatch patch;
      is >> patch.instance_id;
      for (Vec3& c : patch.control) c = detail::get_vec(is);
      if (!is) throw std::runtime_error("malformed patch line");
      scene.other_surfaces.push_back(patch);
    } else {
      throw std::runtime_error("unknown scene line: " + line);
    }
  }
  return scene;
}

inline void save_scene(const std::string& path, const SceneDescription& scene) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << scene_to_text(scene);
}

inline SceneDescription load_scene(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return scene_from_text(buf.str());
}

// ---------------------------------------------------------------------------
// Fits text format: one detection per line with its model parameters and
// inlier pixel indices.

inline std::string fits_to_text(const std::vector<FittedPrimitive>& fits) {
  std::ostringstream os;
  os << "fits_format 1\n";
  os << "count " << fits.size() << "\n";
  for (const FittedPrimitive& fit : fits) {
    os << "fit " << class_name(fit.cls);
    switch (fit.cls) {
      case SurfaceClass::kPlane: {
        const Plane& p = std::get<Plane>(fit.model);
        detail::put_vec(os, p.normal);
        detail::put_double(os, p.offset);
        break;
      }
      case SurfaceClass::kSphere: {
        const Sphere& s = std::get<Sphere>(fit.model);
        detail::put_vec(os, s.center);
        detail::put_double(os, s.radius);
        break;
      }
      case SurfaceClass::kCylinder: {
        const Cylinder& c = std::get<Cylinder>(fit.model);
        detail::put_vec(os, c.axis_point);
        detail::put_vec(os, c.axis_dir);
        detail::put_double(os, c.radius);
        break;
      }
      default: {
        const Cone& c = std::get<Cone>(fit.model);
        detail::put_vec(os, c.apex);
        detail::put_vec(os, c.axis_dir);
        detail::put_double(os, c.half_angle);
        break;
      }
    }
    os << ' ' << fit.inlier_pixels.size();
    for (int pixel : fit.inlier_pixels) os << ' ' << pixel;
    os << '\n';
  }
  return os.str();
}

inline std::vector<FittedPrimitive> fits_from_text(const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  std::vector<FittedPrimitive> fits;
  std::size_t expected = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string kind;
    is >> kind;
    if (kind == "fits_format") {
      int version = 0;
      is >> version;
      if (version != 1) throw std::runtime_error("unsupported fits format version");
    } else if (kind == "count") {
      is >> expected;
    } else if (kind == "fit") {
      FittedPrimitive fit;
      std::string cls;
      is >> cls;
      if (cls == "plane") {
        Plane p;
        p.normal = detail::get_vec(is);
        is >> p.offset;
        fit.model = p;
        fit.cls = SurfaceClass::kPlane;
      } else if (cls == "sphere") {
        Sphere s;
        s.center = detail::get_vec(is);
        is >> s.radius;
        fit.model = s;
        fit.cls = SurfaceClass::kSphere;
      } else if (cls == "cylinder") {
        Cylinder c;
        c.axis_point = detail::get_vec(is);
        c.axis_dir = detail::get_vec(is);
        is >> c.radius;
        fit.model = c;
        fit.cls = SurfaceClass::kCylinder;
      } else if (cls == "cone") {
        Cone c;
        c.apex = detail::get_vec(is);
        c.axis_dir = detail::get_vec(is);
        is >> c.half_angle;
        fit.model = c;
        fit.cls = SurfaceClass::kCone;
      } else {
        throw std::runtime_error("unknown fit class: " + cls);
      }
      std::size_t n = 0;
      is >> n;
      fit.inlier_pixels.resize(n);
      for (std::size_t i = 0; i < n; ++i) is >> fit.inlier_pixels[i];
      if (!is) throw std::runtime_error("malformed fit line");
      fits.push_back(std::move(fit));
    } else {
      throw std::runtime_error("unknown fits line: " + kind);
    }
  }
  if (fits.size() != expected)
    throw std::runtime_error("fits count mismatch: header says " + std::to_string(expected) +
                             ", found " + std::to_string(fits.size()));
  return fits;
}

inline void save_fits(const std::string& path, const std::vector<FittedPrimitive>& fits) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << fits_to_text(fits);
}

inline std::vector<FittedPrimitive> load_fits(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return fits_from_text(buf.str());
}

// ---------------------------------------------------------------------------
// Detection report rendering: aligned text table plus machine-readable CSV.

inline std::string report_to_text(const DetectionReport& report, const std::string& title) {
  std::ostringstream os;
  os << "# " << title << "\n";
  auto row_name = [](int k) {
    return k < 4 ? class_short_name(static_cast<SurfaceClass>(k)) : "ALL";
  };
  auto row = [&](int k) -> const ReportRow& {
    return k < 4 ? report.per_class[static_cast<std::size_t>(k)] : report.all;
  };
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-5s %8s %8s %8s %8s %9s %7s %7s %12s %12s\n", "class", "N_p",
                "N_t", "N_p2t", "N_t2p", "Nt2p/Np", "PAP", "PAR", "ErrMatch(cm)", "ErrBest(cm)");
  os << buf;
  for (int k = 0; k < 5; ++k) {
    const ReportRow& r = row(k);
    std::snprintf(buf, sizeof(buf),
                  "%-5s %8lld %8lld %8lld %8lld %9.3f %7.3f %7.3f %12.3f %12.3f%s\n", row_name(k),
                  static_cast<long long>(r.n_p), static_cast<long long>(r.n_t),
                  static_cast<long long>(r.n_p2t), static_cast<long long>(r.n_t2p), r.ratio,
                  r.pap, r.par, r.err_matched_cm, r.err_best_cm,
                  r.pap_defined ? "" : "  (no predictions)");
    os << buf;
  }
  return os.str();
}

inline std::string report_to_csv(const DetectionReport& report) {
  std::ostringstream os;
  os << "class,n_p,n_t,n_p2t,n_t2p,ratio,pap,par,err_matched_cm,err_best_cm,pap_defined\n";
  char buf[256];
  for (int k = 0; k < 5; ++k) {
    const ReportRow& r =
        k < 4 ? report.per_class[static_cast<std::size_t>(k)] : report.all;
    const char* name = k < 4 ? class_short_name(static_cast<SurfaceClass>(k)) : "ALL";
    std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%lld,%lld,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", name,
                  static_cast<long long>(r.n_p), static_cast<long long>(r.n_t),
                  static_cast<long long>(r.n_p2t), static_cast<long long>(r.n_t2p), r.ratio,
                  r.pap, r.par, r.err_matched_cm, r.err_best_cm, r.pap_defined ? 1 : 0);
    os << buf;
  }
  return os.str();
}

inline DetectionReport report_from_csv(const std::string& text) {
  DetectionReport report;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(is, field, ',')) fields.push_back(field);
    if (fields.size() != 11) throw std::runtime_error("malformed report csv row: " + line);
    ReportRow row;
    row.n_p = std::stoll(fields[1]);
    row.n_t = std::stoll(fields[2]);
    row.n_p2t = std::stoll(fields[3]);
    row.n_t2p = std::stoll(fields[4]);
    row.ratio = std::stod(fields[5]);
    row.pap = std::stod(fields[6]);
    row.par = std::stod(fields[7]);
    row.err_matched_cm = std::stod(fields[8]);
    row.err_best_cm = std::stod(fields[9]);
    row.pap_defined = fields[10] == "1";
    if (fields[0] == "ALL") {
      report.all = row;
    } else {
      for (int k = 0; k < 4; ++k)
        if (fields[0] == class_short_name(static_cast<SurfaceClass>(k)))
          report.per_class[static_cast<std::size_t>(k)] = row;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// PLY export (ascii, per-vertex color).

struct PlyMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint8_t, 3>> colors;
  std::vector<std::array<int, 3>> faces;
};

inline void save_ply(const std::string& path, const PlyMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << mesh.vertices.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  os << "element face " << mesh.faces.size() << "\n";
  os << "property list uchar int vertex_indices\n";
  os << "end_header\n";
  char buf[160];
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    const auto& c = mesh.colors[i];
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d %d %d\n", v.x(), v.y(), v.z(), c[0], c[1],
                  c[2]);
    os << buf;
  }
  for (const auto& f : mesh.faces) os << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

/// Class color legend (boundary, plane, sphere, cylinder, cone, other).
inline std::array<std::uint8_t, 3> class_color(SurfaceClass cls, bool boundary) {
  if (boundary) return {220, 30, 30};
  switch (cls) {
    case SurfaceClass::kPlane: return {180, 180, 180};
    case SurfaceClass::kSphere: return {60, 140, 240};
    case SurfaceClass::kCylinder: return {240, 200, 50};
    case SurfaceClass::kCone: return {70, 190, 110};
    case SurfaceClass::kOther: return {110, 60, 160};
    case SurfaceClass::kInvalid: return {0, 0, 0};
  }
  return {0, 0, 0};
}

/// Point cloud of one scan in world coordinates, colored by ground-truth
/// class with boundary pixels highlighted.
inline PlyMesh cloud_to_ply(const RangeImage& img, const LabelMap& labels,
                            const Image<std::uint8_t>& boundary) {
  PlyMesh mesh;
  PointMap points = unproject(img);
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const Vec3& p = points[static_cast<std::size_t>(i)];
    if (!point_valid(p)) continue;
    mesh.vertices.push_back(img.camera_to_world.apply(p));
    SurfaceClass cls = static_cast<SurfaceClass>(labels.class_id[static_cast<std::size_t>(i)]);
    mesh.colors.push_back(class_color(cls, boundary[static_cast<std::size_t>(i)] != 0));
  }
  return mesh;
}

namespace detail {

inline void add_quad(PlyMesh& mesh, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                     const std::array<std::uint8_t, 3>& color) {
  int base = static_cast<int>(mesh.vertices.size());
  for (const Vec3& v : {a, b, c, d}) {
    mesh.vertices.push_back(v);
    mesh.colors.push_back(color);
  }
  mesh.faces.push_back({base, base + 1, base + 2});
  mesh.faces.push_back({base, base + 2, base + 3});
}

}  // namespace detail

/// Triangle mesh of a fitted primitive, sized from its inlier points,
/// expressed through the given transform (camera to world for scan fits).
inline void append_primitive_mesh(PlyMesh& mesh, const FittedPrimitive& fit,
                                  const PointMap& points, const RigidTransform& to_world,
                                  const std::array<std::uint8_t, 3>& color) {
  PrimitiveModel world_model = transformed(fit.model, to_world);
  std::vector<Vec3> inliers;
  inliers.reserve(fit.inlier_pixels.size());
  for (int pixel : fit.inlier_pixels) {
    const Vec3& p = points[static_cast<std::size_t>(pixel)];
    if (point_valid(p)) inliers.push_back(to_world.apply(p));
  }
  if (inliers.empty()) return;

  constexpr int kSegments = 32;
  if (const Plane* plane = std::get_if<Plane>(&world_model)) {
    auto [u, v] = orthonormal_basis(plane->normal);
    Vec3 origin = plane->offset * plane->normal;
    double lo_u = 1e30, hi_u = -1e30, lo_v = 1e30, hi_v = -1e30;
    for (const Vec3& p : inliers) {
      double pu = (p - origin).dot(u), pv = (p - origin).dot(v);
      lo_u = std::min(lo_u, pu);
      hi_u = std::max(hi_u, pu);
      lo_v = std::min(lo_v, pv);
      hi_v = std::max(hi_v, pv);
    }
    detail::add_quad(mesh, origin + lo_u * u + lo_v * v, origin + hi_u * u + lo_v * v,
                     origin + hi_u * u + hi_v * v, origin + lo_u * u + hi_v * v, color);
  } else if (const Sphere* sphere = std::get_if<Sphere>(&world_model)) {
    const int rings = 16;
    for (int r = 0; r < rings; ++r) {
      double phi0 = kPi * r / rings - kPi / 2, phi1 = kPi * (r + 1) / rings - kPi / 2;
      for (int s = 0; s < kSegments; ++s) {
        double th0 = 2 * kPi * s / kSegments, th1 = 2 * kPi * (s + 1) / kSegments;
        auto at = [&](double phi, double th) {
          return Vec3(sphere->center +
                      sphere->radius * Vec3(std::cos(phi) * std::cos(th),
                                            std::cos(phi) * std::sin(th), std::sin(phi)));
        };
        detail::add_quad(mesh, at(phi0, th0), at(phi0, th1), at(phi1, th1), at(phi1, th0), color);
      }
    }
  } else if (const Cylinder* cyl = std::get_if<Cylinder>(&world_model)) {
    double lo = 1e30, hi = -1e30;
    for (const Vec3& p : inliers) {
      double s = (p - cyl->axis_point).dot(cyl->axis_dir);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    auto [u, v] = orthonormal_basis(cyl->axis_dir);
    for (int s = 0; s < kSegments; ++s) {
      double th0 = 2 * kPi * s / kSegments, th1 = 2 * kPi * (s + 1) / kSegments;
      auto rim = [&](double th) { return std::cos(th) * u + std::sin(th) * v; };
      Vec3 a = cyl->axis_point + lo * cyl->axis_dir + cyl->radius * rim(th0);
      Vec3 b = cyl->axis_point + lo * cyl->axis_dir + cyl->radius * rim(th1);
      Vec3 c = cyl->axis_point + hi * cyl->axis_dir + cyl->radius * rim(th1);
      Vec3 d = cyl->axis_point + hi * cyl->axis_dir + cyl->radius * rim(th0);
      detail::add_quad(mesh, a, b, c, d, color);
    }
  } else {
    const Cone& cone = std::get<Cone>(world_model);
    double lo = 1e30, hi = -1e30;
    for (const Vec3& p : inliers) {
      double s = (p - cone.apex).dot(cone.axis_dir);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    lo = std::max(lo, 0.0);
    auto [u, v] = orthonormal_basis(cone.axis_dir);
    double tan_a = std::tan(cone.half_angle);
    for (int s = 0; s < kSegments; ++s) {
      double th0 = 2 * kPi * s / kSegments, th1 = 2 * kPi * (s + 1) / kSegments;
      auto rim = [&](double th, double h) {
        return Vec3(cone.apex + h * cone.axis_dir +
                    h * tan_a * (std::cos(th) * u + std::sin(th) * v));
      };
      detail::add_quad(mesh, rim(th0, lo), rim(th1, lo), rim(th1, hi), rim(th0, hi), color);
    }
  }
}

/// Randomly colored fitted primitives of one scan as a world-frame mesh.
inline PlyMesh fits_to_ply(const std::vector<FittedPrimitive>& fits, const RangeImage& img,
                           std::uint64_t color_seed) {
  PlyMesh mesh;
  PointMap points = unproject(img);
  std::mt19937_64 rng(color_seed);
  std::uniform_int_distribution<int> channel(40, 255);
  for (const FittedPrimitive& fit : fits) {
    std::array<std::uint8_t, 3> color{static_cast<std::uint8_t>(channel(rng)),
                                      static_cast<std::uint8_t>(channel(rng)),
                                      static_cast<std::uint8_t>(channel(rng))};
    append_primitive_mesh(mesh, fit, points, img.camera_to_world, color);
  }
  return mesh;
}

}  // namespace primfit
