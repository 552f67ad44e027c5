// Batch front end: scene generation, virtual scanning, oracle segmentation,
// primitive fitting (pipeline and baseline), evaluation, and export, wired
// for reproducible seeded experiments.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "primfit/config.hpp"
#include "primfit/io.hpp"
#include "primfit/pipeline.hpp"
#include "primfit/render.hpp"

namespace fs = std::filesystem;
using namespace primfit;

namespace {

enum SeedStage : std::uint64_t {
  kStageScene = 1,
  kStagePoses = 2,
  kStageNoise = 3,
  kStageCorruption = 4,
  kStageRansac = 5,
  kStageRansacBaseline = 6,
  kStageColors = 7,
};

struct ScanRef {
  int scene = 0;
  int pose = 0;

  std::string stem() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s%03d_p%04d", scene, pose);
    return buf;
  }
};

std::vector<ScanRef> scan_list(const ExperimentConfig& cfg) {
  std::vector<ScanRef> scans;
  const int total_poses = cfg.pose_grid.lon_count * cfg.pose_grid.lat_count *
                          cfg.pose_grid.distances_per_direction;
  for (int s = 0; s < cfg.scenes; ++s)
    for (int j = 0; j < cfg.scans_per_scene; ++j)
      scans.push_back({s, j * total_poses / cfg.scans_per_scene});
  return scans;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(jobs, count); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

fs::path scene_path(const ExperimentConfig& cfg, int scene) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d.txt", scene);
  return fs::path(cfg.out_dir) / "scenes" / buf;
}

fs::path scan_path(const ExperimentConfig& cfg, const ScanRef& ref, const char* kind) {
  return fs::path(cfg.out_dir) / "scans" / (ref.stem() + kind);
}

fs::path maps_path(const ExperimentConfig& cfg, const ScanRef& ref) {
  return fs::path(cfg.out_dir) / "maps" / (ref.stem() + ".prob.bin");
}

fs::path fits_path(const ExperimentConfig& cfg, const ScanRef& ref, bool baseline) {
  return fs::path(cfg.out_dir) / (baseline ? "fits_baseline" : "fits") /
         (ref.stem() + ".fits.txt");
}

void require_exists(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path))
    throw std::runtime_error("missing artifact " + path.string() + " (run `primfit " + producer +
                             "` first)");
}

void write_manifest(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::ofstream os(fs::path(cfg.out_dir) / "manifest.txt");
  if (!os) throw std::runtime_error("cannot write manifest under " + cfg.out_dir);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  os << "# primfit manifest (re-run any subcommand with --config on this file)\n";
  os << "# config_hash " << hash << "\n";
  os << config_to_text(cfg);
}

SceneDescription load_scene_checked(const ExperimentConfig& cfg, int scene) {
  fs::path path = scene_path(cfg, scene);
  require_exists(path, "gen");
  return load_scene(path.string());
}

std::vector<ScanPose> scene_poses(const ExperimentConfig& cfg, const SceneDescription& scene,
                                  int scene_index) {
  PoseGridConfig grid = cfg.pose_grid;
  grid.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(scene_index), 0, kStagePoses);
  return sample_scan_poses(scene, grid);
}

// ---------------------------------------------------------------------------
// Subcommands

void run_gen(const ExperimentConfig& cfg) {
  write_manifest(cfg);
  fs::create_directories(fs::path(cfg.out_dir) / "scenes");
  for (int s = 0; s < cfg.scenes; ++s) {
    SceneDescription scene =
        generate_scene(derive_seed(cfg.seed, static_cast<std::uint64_t>(s), 0, kStageScene),
                       cfg.scene_gen);
    save_scene(scene_path(cfg, s).string(), scene);
  }
  std::cout << "[gen] wrote " << cfg.scenes << " scenes under " << cfg.out_dir << "/scenes\n";
}

void run_scan(const ExperimentConfig& cfg) {
  write_manifest(cfg);
  fs::create_directories(fs::path(cfg.out_dir) / "scans");
  std::vector<ScanRef> scans = scan_list(cfg);

  std::vector<SceneDescription> scenes;
  std::vector<std::vector<ScanPose>> poses;
  for (int s = 0; s < cfg.scenes; ++s) {
    scenes.push_back(load_scene_checked(cfg, s));
    poses.push_back(scene_poses(cfg, scenes.back(), s));
  }

  parallel_for(static_cast<int>(scans.size()), cfg.jobs, [&](int i) {
    const ScanRef& ref = scans[static_cast<std::size_t>(i)];
    ScannerConfig scanner = cfg.scanner;
    scanner.noise_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(ref.scene),
                                     static_cast<std::uint64_t>(ref.pose), kStageNoise);
    Scan scan = render_scan(scenes[static_cast<std::size_t>(ref.scene)],
                            poses[static_cast<std::size_t>(ref.scene)][static_cast<std::size_t>(ref.pose)],
                            scanner);
    save_range_image(scan_path(cfg, ref, ".depth.bin").string(), scan.image);
    save_label_map(scan_path(cfg, ref, ".labels.bin").string(), scan.labels);
  });
  std::cout << "[scan] rendered " << scans.size() << " scans under " << cfg.out_dir
            << "/scans\n";
}

void run_segment(const ExperimentConfig& cfg) {
  write_manifest(cfg);
  fs::create_directories(fs::path(cfg.out_dir) / "maps");
  std::vector<ScanRef> scans = scan_list(cfg);
  parallel_for(static_cast<int>(scans.size()), cfg.jobs, [&](int i) {
    const ScanRef& ref = scans[static_cast<std::size_t>(i)];
    fs::path labels_file = scan_path(cfg, ref, ".labels.bin");
    require_exists(labels_file, "scan");
    LabelMap labels = load_label_map(labels_file.string());
    SchemeLabelMap gt = make_scheme_labels(labels, compute_boundaries(labels), cfg.scheme);
    CorruptionConfig corruption = cfg.corruption;
    corruption.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(ref.scene),
                                  static_cast<std::uint64_t>(ref.pose), kStageCorruption);
    save_probability_maps(maps_path(cfg, ref).string(), oracle_probability_maps(gt, corruption));
  });
  std::cout << "[segment] wrote " << scans.size() << " probability maps (scheme "
            << scheme_name(cfg.scheme) << ")\n";
}

void run_fit(const ExperimentConfig& cfg, bool baseline) {
  write_manifest(cfg);
  fs::create_directories(fits_path(cfg, ScanRef{}, baseline).parent_path());
  std::vector<ScanRef> scans = scan_list(cfg);
  parallel_for(static_cast<int>(scans.size()), cfg.jobs, [&](int i) {
    const ScanRef& ref = scans[static_cast<std::size_t>(i)];
    fs::path depth_file = scan_path(cfg, ref, ".depth.bin");
    require_exists(depth_file, "scan");
    RangeImage img = load_range_image(depth_file.string());
    ScanPoints sp = prepare_scan_points(img);

    RansacParams params = cfg.ransac;
    params.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(ref.scene),
                              static_cast<std::uint64_t>(ref.pose),
                              baseline ? kStageRansacBaseline : kStageRansac);
    std::vector<FittedPrimitive> fits;
    if (baseline) {
      fits = eransac_baseline(sp, params);
    } else {
      fs::path maps_file = maps_path(cfg, ref);
      require_exists(maps_file, "segment");
      fits = primitive_fitting(sp, load_probability_maps(maps_file.string()), params);
    }
    save_fits(fits_path(cfg, ref, baseline).string(), fits);
  });
  std::cout << "[fit] " << (baseline ? "baseline" : "pipeline") << " fits for " << scans.size()
            << " scans\n";
}

DetectionReport evaluate(const ExperimentConfig& cfg, bool baseline) {
  std::vector<ScanRef> scans = scan_list(cfg);
  std::vector<ScanEvaluation> evals(scans.size());
  parallel_for(static_cast<int>(scans.size()), cfg.jobs, [&](int i) {
    const ScanRef& ref = scans[static_cast<std::size_t>(i)];
    fs::path depth_file = scan_path(cfg, ref, ".depth.bin");
    fs::path labels_file = scan_path(cfg, ref, ".labels.bin");
    fs::path fits_file = fits_path(cfg, ref, baseline);
    require_exists(depth_file, "scan");
    require_exists(labels_file, "scan");
    require_exists(fits_file, baseline ? "fit --baseline" : "fit");
    RangeImage img = load_range_image(depth_file.string());
    LabelMap labels = load_label_map(labels_file.string());
    std::vector<FittedPrimitive> fits = load_fits(fits_file.string());
    evals[static_cast<std::size_t>(i)] =
        match_detections(fits, labels, unproject(img), cfg.min_visible_pixels);
  });
  return aggregate_report(evals);
}

void run_eval(const ExperimentConfig& cfg, bool baseline) {
  write_manifest(cfg);
  fs::create_directories(fs::path(cfg.out_dir) / "reports");
  DetectionReport report = evaluate(cfg, baseline);
  std::string title = baseline ? "baseline (whole-cloud detection)" : "pipeline (per-class detection)";
  std::string text = report_to_text(report, title);
  const char* stem = baseline ? "report_baseline" : "report";
  {
    std::ofstream os(fs::path(cfg.out_dir) / "reports" / (std::string(stem) + ".txt"));
    os << text;
  }
  {
    std::ofstream os(fs::path(cfg.out_dir) / "reports" / (std::string(stem) + ".csv"));
    os << report_to_csv(report);
  }
  std::cout << text;
}

void run_compare(const std::string& path_a, const std::string& path_b) {
  auto load = [](const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open report: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return report_from_csv(buf.str());
  };
  DetectionReport a = load(path_a), b = load(path_b);
  std::printf("%-28s %12s %12s %10s\n", "metric (ALL)", "A", "B", "B-A");
  auto line = [](const char* name, double va, double vb) {
    std::printf("%-28s %12.4f %12.4f %+10.4f\n", name, va, vb, vb - va);
  };
  line("PAP", a.all.pap, b.all.pap);
  line("PAR", a.all.par, b.all.par);
  line("Nt2p/Np", a.all.ratio, b.all.ratio);
  line("fit error matched (cm)", a.all.err_matched_cm, b.all.err_matched_cm);
  line("fit error best (cm)", a.all.err_best_cm, b.all.err_best_cm);
  std::printf("%-28s %12lld %12lld %+10lld\n", "N_p", static_cast<long long>(a.all.n_p),
              static_cast<long long>(b.all.n_p),
              static_cast<long long>(b.all.n_p - a.all.n_p));
  std::printf("%-28s %12lld %12lld %+10lld\n", "N_t2p", static_cast<long long>(a.all.n_t2p),
              static_cast<long long>(b.all.n_t2p),
              static_cast<long long>(b.all.n_t2p - a.all.n_t2p));
}

void run_export(const ExperimentConfig& cfg, bool baseline) {
  fs::create_directories(fs::path(cfg.out_dir) / "export");
  std::vector<ScanRef> scans = scan_list(cfg);
  parallel_for(static_cast<int>(scans.size()), cfg.jobs, [&](int i) {
    const ScanRef& ref = scans[static_cast<std::size_t>(i)];
    fs::path depth_file = scan_path(cfg, ref, ".depth.bin");
    fs::path labels_file = scan_path(cfg, ref, ".labels.bin");
    require_exists(depth_file, "scan");
    require_exists(labels_file, "scan");
    RangeImage img = load_range_image(depth_file.string());
    LabelMap labels = load_label_map(labels_file.string());
    PlyMesh cloud = cloud_to_ply(img, labels, compute_boundaries(labels));
    save_ply((fs::path(cfg.out_dir) / "export" / (ref.stem() + ".cloud.ply")).string(), cloud);

    fs::path fits_file = fits_path(cfg, ref, baseline);
    if (fs::exists(fits_file)) {
      std::vector<FittedPrimitive> fits = load_fits(fits_file.string());
      std::uint64_t color_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(ref.scene),
                                             static_cast<std::uint64_t>(ref.pose), kStageColors);
      PlyMesh prims = fits_to_ply(fits, img, color_seed);
      const char* suffix = baseline ? ".prims_baseline.ply" : ".prims.ply";
      save_ply((fs::path(cfg.out_dir) / "export" / (ref.stem() + suffix)).string(), prims);
    }
  });
  std::cout << "[export] wrote point clouds and primitive meshes under " << cfg.out_dir
            << "/export\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated range-image primitive fitting: dataset generation, "
               "segmentation-guided detection, and evaluation"};
  app.require_subcommand(1);

  std::string config_file;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> scenes, scans_per_scene, jobs;
  std::optional<double> sigma, flip_rate;
  std::string scheme;
  bool baseline = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "configuration file (sectioned key=value)");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--scenes", scenes, "number of scenes");
    cmd->add_option("--scans-per-scene", scans_per_scene, "scans rendered per scene (<=192)");
    cmd->add_option("--sigma", sigma, "scanner noise sigma in meters");
    cmd->add_option("--scheme", scheme, "label scheme: k4, k5b, k5o, k6");
    cmd->add_option("--flip-rate", flip_rate, "oracle per-pixel flip probability");
    cmd->add_option("--jobs", jobs, "worker threads for per-scan stages");
    return cmd;
  };

  CLI::App* cmd_gen = add_common(app.add_subcommand("gen", "generate random scenes"));
  CLI::App* cmd_scan = add_common(app.add_subcommand("scan", "render the scan dataset"));
  CLI::App* cmd_segment =
      add_common(app.add_subcommand("segment", "produce oracle probability maps"));
  CLI::App* cmd_fit = add_common(app.add_subcommand("fit", "fit primitives per scan"));
  cmd_fit->add_flag("--baseline", baseline, "whole-cloud detection instead of the pipeline");
  CLI::App* cmd_eval = add_common(app.add_subcommand("eval", "evaluate fits into a report"));
  cmd_eval->add_flag("--baseline", baseline, "evaluate the baseline fits");
  std::vector<std::string> compare_paths;
  cmd_eval->add_option("--compare", compare_paths, "compare two report CSV files")
      ->expected(2);
  CLI::App* cmd_export = add_common(
      app.add_subcommand("export", "export colored point clouds and primitive meshes"));
  cmd_export->add_flag("--baseline", baseline, "export the baseline fits");
  CLI::App* cmd_all = add_common(app.add_subcommand(
      "all", "run gen, scan, segment, both fits, and both evaluations end to end"));

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_eval->parsed() && !compare_paths.empty()) {
      run_compare(compare_paths[0], compare_paths[1]);
      return 0;
    }

    ExperimentConfig cfg;
    if (!config_file.empty()) {
      cfg = load_config(config_file);
    } else if (!out_dir.empty() && fs::exists(fs::path(out_dir) / "manifest.txt")) {
      // Continuing a run: pick up its manifest so chained subcommands agree
      // on the dataset recipe without repeating --config.
      cfg = load_config((fs::path(out_dir) / "manifest.txt").string());
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (scenes) cfg.scenes = *scenes;
    if (scans_per_scene) cfg.scans_per_scene = *scans_per_scene;
    if (sigma) cfg.scanner.noise_sigma = *sigma;
    if (flip_rate) cfg.corruption.flip_rate = *flip_rate;
    if (jobs) cfg.jobs = *jobs;
    if (!scheme.empty()) {
      auto parsed = scheme_from_name(scheme);
      if (!parsed) throw std::runtime_error("unknown scheme " + scheme + " (k4, k5b, k5o, k6)");
      cfg.scheme = *parsed;
    }
    cfg.validate();

    if (cmd_gen->parsed()) {
      run_gen(cfg);
    } else if (cmd_scan->parsed()) {
      run_scan(cfg);
    } else if (cmd_segment->parsed()) {
      run_segment(cfg);
    } else if (cmd_fit->parsed()) {
      run_fit(cfg, baseline);
    } else if (cmd_eval->parsed()) {
      run_eval(cfg, baseline);
    } else if (cmd_export->parsed()) {
      run_export(cfg, baseline);
    } else if (cmd_all->parsed()) {
      run_gen(cfg);
      run_scan(cfg);
      run_segment(cfg);
      run_fit(cfg, false);
      run_fit(cfg, true);
      run_eval(cfg, false);
      run_eval(cfg, true);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
