#include "primfit/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

namespace primfit {
namespace {

TEST(BinaryContainer, RangeImageRoundTrip) {
  RangeImage img(32, 24);
  img.intrinsics = {101.5, 99.25, 15.5, 11.5};
  img.camera_to_world.rotation =
      Eigen::AngleAxisd(0.37, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  img.camera_to_world.translation = Vec3(0.1, -2.5, 1.75);
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<float> depth(0.0f, 5.0f);
  for (auto& d : img.depth) d = depth(rng);

  std::stringstream buf;
  write_range_image(buf, img);
  RangeImage back = read_range_image(buf);

  EXPECT_EQ(back.width, img.width);
  EXPECT_EQ(back.height, img.height);
  EXPECT_EQ(back.depth, img.depth);
  EXPECT_DOUBLE_EQ(back.intrinsics.fx, img.intrinsics.fx);
  EXPECT_DOUBLE_EQ(back.intrinsics.cy, img.intrinsics.cy);
  EXPECT_TRUE(back.camera_to_world.rotation == img.camera_to_world.rotation);
  EXPECT_TRUE(back.camera_to_world.translation == img.camera_to_world.translation);
}

TEST(BinaryContainer, LabelMapRoundTrip) {
  LabelMap labels(17, 13);
  std::mt19937_64 rng(62);
  std::uniform_int_distribution<int> cls(0, 5), inst(0, 9);
  for (std::size_t i = 0; i < labels.class_id.size(); ++i) {
    labels.class_id[i] = static_cast<std::uint8_t>(cls(rng));
    labels.instance_id[i] = static_cast<std::uint32_t>(inst(rng));
  }
  std::stringstream buf;
  write_label_map(buf, labels);
  LabelMap back = read_label_map(buf);
  EXPECT_EQ(back.class_id, labels.class_id);
  EXPECT_EQ(back.instance_id, labels.instance_id);
}

TEST(BinaryContainer, ProbabilityMapsRoundTrip) {
  ProbabilityMaps maps;
  maps.scheme = LabelScheme::kK5Other;
  maps.planes.assign(5, Image<float>(9, 7, 0.0f));
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  for (auto& plane : maps.planes)
    for (auto& v : plane) v = unit(rng);

  std::stringstream buf;
  write_probability_maps(buf, maps);
  ProbabilityMaps back = read_probability_maps(buf);
  EXPECT_EQ(back.scheme, maps.scheme);
  ASSERT_EQ(back.class_count(), maps.class_count());
  for (int k = 0; k < maps.class_count(); ++k) EXPECT_EQ(back.planes[k], maps.planes[k]);
}

TEST(BinaryContainer, RejectsWrongDescriptor) {
  RangeImage img(4, 4);
  std::stringstream buf;
  write_range_image(buf, img);
  EXPECT_THROW(read_label_map(buf), std::runtime_error);
}

TEST(BinaryContainer, RejectsBadMagic) {
  std::stringstream buf;
  buf << "NOPE restoffile";
  EXPECT_THROW(read_range_image(buf), std::runtime_error);
}

TEST(BinaryContainer, RejectsTruncatedPayload) {
  RangeImage img(8, 8);
  std::stringstream buf;
  write_range_image(buf, img);
  std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 10));
  EXPECT_THROW(read_range_image(cut), std::runtime_error);
}

TEST(FitsText, RoundTrip) {
  std::vector<FittedPrimitive> fits;
  FittedPrimitive plane;
  plane.cls = SurfaceClass::kPlane;
  plane.model = Plane{Vec3(0, 0.6, 0.8), 1.25};
  plane.inlier_pixels = {0, 5, 17, 300, 301};
  fits.push_back(plane);
  FittedPrimitive cone;
  cone.cls = SurfaceClass::kCone;
  cone.model = Cone{Vec3(0.1, -0.2, 2.0), Vec3(0, 0, 1), 0.4};
  cone.inlier_pixels = {9, 10, 11};
  fits.push_back(cone);

  std::string text = fits_to_text(fits);
  std::vector<FittedPrimitive> back = fits_from_text(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].cls, SurfaceClass::kPlane);
  EXPECT_EQ(back[0].inlier_pixels, plane.inlier_pixels);
  EXPECT_DOUBLE_EQ(std::get<Plane>(back[0].model).offset, 1.25);
  EXPECT_EQ(back[1].inlier_pixels, cone.inlier_pixels);
  EXPECT_DOUBLE_EQ(std::get<Cone>(back[1].model).half_angle, 0.4);

  EXPECT_THROW(fits_from_text("fits_format 1\ncount 2\n"), std::runtime_error);
}

TEST(ReportCsv, RoundTrip) {
  ScanEvaluation eval;
  eval.n_predictions = {3, 1, 2, 0};
  eval.n_true = {4, 1, 2, 1};
  eval.n_predictions_matched = {2, 1, 1, 0};
  eval.n_true_matched = {2, 1, 1, 0};
  eval.err_best_sum = {0.004, 0.002, 0.001, 0.0};
  eval.err_best_count = {2, 1, 1, 0};
  eval.err_matched_sum = {0.005, 0.002, 0.001, 0.0};
  eval.err_matched_count = {2, 1, 1, 0};
  DetectionReport report = aggregate_report(std::span(&eval, 1));

  DetectionReport back = report_from_csv(report_to_csv(report));
  EXPECT_EQ(back.all.n_p, report.all.n_p);
  EXPECT_EQ(back.all.n_t2p, report.all.n_t2p);
  EXPECT_NEAR(back.all.par, report.all.par, 1e-6);
  EXPECT_NEAR(back.per_class[0].err_best_cm, report.per_class[0].err_best_cm, 1e-6);
  EXPECT_EQ(back.per_class[3].pap_defined, false);
}

TEST(PlyExport, PrimitiveMeshVerticesLieOnTheModel) {
  // A sphere fit exported to a mesh: every vertex sits on the sphere.
  RangeImage img(8, 8);
  for (auto& d : img.depth) d = 2.0f;
  FittedPrimitive fit;
  fit.cls = SurfaceClass::kSphere;
  fit.model = Sphere{Vec3(0, 0, 2.0), 0.5};
  for (int i = 0; i < 64; ++i) fit.inlier_pixels.push_back(i);

  PlyMesh mesh = fits_to_ply({fit}, img, 7);
  ASSERT_GT(mesh.vertices.size(), 100u);
  ASSERT_EQ(mesh.vertices.size(), mesh.colors.size());
  for (const Vec3& v : mesh.vertices)
    EXPECT_NEAR((v - Vec3(0, 0, 2.0)).norm(), 0.5, 1e-9);
  for (const auto& f : mesh.faces)
    for (int idx : f) ASSERT_LT(idx, static_cast<int>(mesh.vertices.size()));
}

TEST(SceneText, FilesRoundTripThroughDisk) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "primfit_io_test";
  fs::create_directories(dir);
  SceneDescription scene = generate_scene(99, {});
  std::string path = (dir / "scene.txt").string();
  save_scene(path, scene);
  SceneDescription back = load_scene(path);
  EXPECT_EQ(scene_to_text(back), scene_to_text(scene));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace primfit
