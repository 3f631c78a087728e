// Command-line front end: odometry runs, map-only fusion, trajectory
// evaluation, microbenchmarks, and map export.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "ftdf/dataset.hpp"
#include "ftdf/errors.hpp"
#include "ftdf/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInsufficientData = 3;
constexpr int kExitResourceLimit = 4;

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// --config file first, then --set key=value overrides on top.
ftdf::PipelineConfig load_pipeline_config(const std::string& config_path,
                                          const std::vector<std::string>& overrides) {
  ftdf::KeyValueConfig cfg = config_path.empty()
                                 ? ftdf::KeyValueConfig()
                                 : ftdf::KeyValueConfig::from_file(config_path);
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ftdf::ConfigError("override \"" + item + "\" is not of the form key=value");
    }
    cfg.set(item.substr(0, eq), item.substr(eq + 1));
  }
  return ftdf::pipeline_config_from(cfg);
}

std::string config_key_help() {
  std::string out = "Configuration keys (--config file or --set key=value):\n";
  for (const ftdf::ConfigKeyDoc& doc : ftdf::pipeline_config_keys()) {
    char line[160];
    std::snprintf(line, sizeof(line), "  %-32s default %-14s %s\n", doc.key, doc.default_value,
                  doc.description);
    out += line;
  }
  return out;
}

void print_timing_report(const ftdf::TimingReport& report, std::ostream& os) {
  const auto row = [&](const char* name, const ftdf::PhaseStats& s) {
    char line[160];
    std::snprintf(line, sizeof(line), "  %-10s %9.3f ms +- %8.3f ms  (n=%zu)\n", name, s.mean_ms,
                  s.std_ms, s.count);
    os << line;
  };
  os << "Per-sweep timing (first " << report.warmup_excluded << " sweeps excluded as warm-up):\n";
  row("total", report.total);
  row("optimize", report.optimize);
  row("update", report.update);
}

void write_timing_csv(const ftdf::TimingReport& report,
                      const std::vector<ftdf::ScanTiming>& timings, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ftdf::IoError("cannot open " + path + " for writing");
  out << "# phase,count,mean_ms,std_ms\n";
  out << "total," << report.total.count << "," << report.total.mean_ms << ","
      << report.total.std_ms << "\n";
  out << "optimize," << report.optimize.count << "," << report.optimize.mean_ms << ","
      << report.optimize.std_ms << "\n";
  out << "update," << report.update.count << "," << report.update.mean_ms << ","
      << report.update.std_ms << "\n";
  out << "# t,total_ms,optimize_ms,update_ms,map_updated\n";
  for (const ftdf::ScanTiming& t : timings) {
    out << t.t << "," << t.total_ms << "," << t.optimize_ms << "," << t.update_ms << ","
        << (t.map_updated ? 1 : 0) << "\n";
  }
}

int cmd_run(const std::string& manifest_path, const std::string& config_path,
            const std::vector<std::string>& overrides, const std::string& out_dir,
            bool save_map) {
  const ftdf::DatasetManifest manifest = ftdf::load_manifest(manifest_path);
  const ftdf::PipelineConfig config = load_pipeline_config(config_path, overrides);
  fs::create_directories(out_dir);

  ftdf::ScanReader scans(manifest.scan_path, manifest.lidar_to_imu, manifest.time_offset);
  ftdf::ImuReader imu(manifest.imu_path);
  ftdf::OdometryPipeline pipeline(config);
  const ftdf::OdometryResult result =
      ftdf::run_odometry(pipeline, [&] { return scans.next(); }, [&] { return imu.next(); });

  const std::string traj_path = (fs::path(out_dir) / "trajectory.txt").string();
  ftdf::write_trajectory(result.trajectory, traj_path);
  const ftdf::TimingReport timing = ftdf::summarize_timings(result.timings);
  write_timing_csv(timing, result.timings, (fs::path(out_dir) / "timing.csv").string());
  if (save_map && pipeline.grid() != nullptr) {
    ftdf::save_grid_snapshot(*pipeline.grid(), (fs::path(out_dir) / "map.ftdf").string());
  }

  std::cout << "Processed " << result.stats.scans << " sweeps, " << result.stats.imu_samples
            << " IMU samples; " << result.stats.keyframes << " keyframes, "
            << result.stats.degraded << " degraded sweeps";
  if (result.stats.deskew_passthroughs > 0) {
    std::cout << " (" << result.stats.deskew_passthroughs << " sweeps left uncompensated)";
  }
  std::cout << "\nTrajectory written to " << traj_path << "\n";
  print_timing_report(timing, std::cout);

  if (!manifest.ground_truth_path.empty()) {
    const auto gt = ftdf::read_trajectory(manifest.ground_truth_path);
    const ftdf::AteResult ate = ftdf::evaluate_ate(result.trajectory, gt);
    std::printf("ATE RMSE: %.6f m over %zu associated poses\n", ate.rmse, ate.pairs);
  }
  return kExitOk;
}

int cmd_map(const std::string& scans_path, const std::string& poses_path,
            const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& out_path, int export_level) {
  const ftdf::PipelineConfig config = load_pipeline_config(config_path, overrides);
  const std::vector<ftdf::Scan> scans = ftdf::read_scans(scans_path);
  const std::vector<ftdf::TrajectoryRecord> poses = ftdf::read_trajectory(poses_path);
  if (poses.size() < scans.size()) {
    throw ftdf::ConfigError("pose file has " + std::to_string(poses.size()) +
                            " records for " + std::to_string(scans.size()) + " scans");
  }
  if (scans.empty()) throw ftdf::InsufficientOverlapError("no scans to fuse");

  // Grid placed the same way the odometry pipeline places it: horizontally
  // centered on the first pose.
  const Eigen::Vector3d p0 = poses.front().p;
  const double z_offset = config.map_z_offset.value_or(0.5 * config.map_size.z());
  const Eigen::Vector3d origin =
      p0 - Eigen::Vector3d(0.5 * config.map_size.x(), 0.5 * config.map_size.y(), z_offset);
  const auto dim = [&](double extent) {
    return static_cast<std::int64_t>(std::ceil(extent / config.resolution));
  };
  ftdf::TdfGrid grid(origin, config.resolution, dim(config.map_size.x()), dim(config.map_size.y()),
                     dim(config.map_size.z()), config.mask_bits, config.memory_budget_bytes);
  const ftdf::BinaryKernel kernel(config.kernel_radius, config.mask_bits);

  std::size_t skipped = 0;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const ftdf::Pose pose{poses[i].p, poses[i].q};
    std::vector<Eigen::Vector3d> world(scans[i].points.size());
    for (std::size_t j = 0; j < world.size(); ++j) world[j] = pose.apply(scans[i].points[j]);
    const auto stats = grid.insert_cloud(kernel, world, config.workers);
    skipped += stats.skipped_out_of_bounds;
  }

  ftdf::save_grid_snapshot(grid, out_path);
  ftdf::export_level_cells_ply(grid, out_path + ".ply", export_level);
  std::cout << "Fused " << scans.size() << " scans into " << out_path << " ("
            << grid.nx() << "x" << grid.ny() << "x" << grid.nz() << " cells";
  if (skipped > 0) std::cout << ", " << skipped << " points out of bounds";
  std::cout << ")\nLevel-" << export_level << " cells exported to " << out_path << ".ply\n";
  return kExitOk;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path, double max_dt) {
  const auto est = ftdf::read_trajectory(est_path);
  const auto gt = ftdf::read_trajectory(gt_path);
  const ftdf::AteResult ate = ftdf::evaluate_ate(est, gt, max_dt);
  std::printf("ATE RMSE: %.6f m\n", ate.rmse);
  std::printf("  mean:   %.6f m\n", ate.mean);
  std::printf("  median: %.6f m\n", ate.median);
  std::printf("  max:    %.6f m\n", ate.max);
  std::printf("  per-axis RMSE: %.6f %.6f %.6f m\n", ate.axis_rmse.x(), ate.axis_rmse.y(),
              ate.axis_rmse.z());
  std::printf("  associated poses: %zu\n", ate.pairs);
  return kExitOk;
}

int cmd_export(const std::string& grid_path, const std::string& out_path, int level,
               std::uint64_t budget_bytes) {
  const ftdf::TdfGrid grid = ftdf::load_grid_snapshot(grid_path, budget_bytes);
  ftdf::export_level_cells_ply(grid, out_path, level);
  std::cout << "Exported cells with decoded distance <= " << level << " cells to " << out_path
            << "\n";
  return kExitOk;
}

// --- Benchmarks ---------------------------------------------------------------

struct BenchRow {
  std::string name;
  std::size_t n = 0;
  double total_ms = 0.0;
  double per_item_ns = 0.0;
  std::string note;
};

void print_bench(const std::vector<BenchRow>& rows, const std::string& csv_path) {
  std::printf("%-36s %12s %12s %14s  %s\n", "benchmark", "items", "total ms", "per item ns",
              "note");
  for (const BenchRow& r : rows) {
    std::printf("%-36s %12zu %12.3f %14.1f  %s\n", r.name.c_str(), r.n, r.total_ms, r.per_item_ns,
                r.note.c_str());
  }
  if (csv_path.empty()) return;
  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw ftdf::IoError("cannot open " + csv_path + " for writing");
  out << "benchmark,items,total_ms,per_item_ns,note\n";
  for (const BenchRow& r : rows) {
    out << r.name << "," << r.n << "," << r.total_ms << "," << r.per_item_ns << "," << r.note
        << "\n";
  }
}

// Uniform cloud inside a box inset by the kernel radius so footprints never
// clip and every tier does identical work per point.
std::vector<Eigen::Vector3d> bench_cloud(const ftdf::TdfGrid& grid, int kernel_radius,
                                         std::size_t count, unsigned seed) {
  std::mt19937 rng(seed);
  const double margin = (kernel_radius + 2) * grid.resolution();
  const Eigen::Vector3d lo = grid.origin() + Eigen::Vector3d::Constant(margin);
  const Eigen::Vector3d hi =
      grid.origin() +
      Eigen::Vector3d(grid.nx() * grid.resolution(), grid.ny() * grid.resolution(),
                      grid.nz() * grid.resolution()) -
      Eigen::Vector3d::Constant(margin);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x());
  std::uniform_real_distribution<double> uy(lo.y(), hi.y());
  std::uniform_real_distribution<double> uz(lo.z(), hi.z());
  std::vector<Eigen::Vector3d> cloud(count);
  for (auto& p : cloud) p = Eigen::Vector3d(ux(rng), uy(rng), uz(rng));
  return cloud;
}

int cmd_bench(const std::string& csv_path, std::size_t points, int kernel_radius, int repeats,
              double budget_gb) {
  std::vector<BenchRow> rows;
  const ftdf::BinaryKernel kernel(kernel_radius, 64);
  const std::uint64_t budget = static_cast<std::uint64_t>(budget_gb * (1ull << 30));

  // Insertion across grid sizes: one identical cloud (drawn from the
  // smallest tier's interior, which every tier contains) is fused into each
  // grid, so only the cell count changes between rows.
  const struct {
    const char* label;
    std::int64_t nx, ny, nz;
  } tiers[] = {
      {"insert/1e6_cells", 100, 100, 100},
      {"insert/1e7_cells", 250, 200, 200},
      {"insert/1e8_cells", 500, 500, 400},
  };
  std::vector<Eigen::Vector3d> cloud;
  {
    ftdf::TdfGrid smallest(Eigen::Vector3d::Zero(), 0.05, tiers[0].nx, tiers[0].ny, tiers[0].nz,
                           64, budget);
    cloud = bench_cloud(smallest, kernel_radius, points, 7u);
  }
  for (const auto& tier : tiers) {
    BenchRow row;
    row.name = tier.label;
    row.n = points * static_cast<std::size_t>(repeats);
    try {
      ftdf::TdfGrid grid(Eigen::Vector3d::Zero(), 0.05, tier.nx, tier.ny, tier.nz, 64, budget);
      grid.insert_cloud(kernel, cloud);  // warm-up; repeat inserts are no-ops
      const auto t0 = Clock::now();
      for (int r = 0; r < repeats; ++r) grid.insert_cloud(kernel, cloud);
      row.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      row.per_item_ns = row.n > 0 ? 1e6 * row.total_ms / static_cast<double>(row.n) : 0.0;
    } catch (const ftdf::AllocationError& e) {
      row.note = std::string("skipped: ") + e.what();
      row.n = 0;
    }
    rows.push_back(row);
  }

  // Interpolation query throughput on the middle tier.
  {
    ftdf::TdfGrid grid(Eigen::Vector3d::Zero(), 0.05, 250, 200, 200, 64, budget);
    const auto cloud = bench_cloud(grid, kernel_radius, points, 7u);
    grid.insert_cloud(kernel, cloud);
    const auto queries = bench_cloud(grid, kernel_radius, 200000, 11u);
    BenchRow row;
    row.name = "interpolate/distance_gradient";
    row.n = queries.size();
    double checksum = 0.0;
    const auto t0 = Clock::now();
    for (const auto& q : queries) {
      if (auto dg = grid.distance_and_gradient_at(q)) checksum += dg->distance;
    }
    row.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    row.per_item_ns = 1e6 * row.total_ms / static_cast<double>(row.n);
    char note[64];
    std::snprintf(note, sizeof(note), "checksum %.3f", checksum);
    row.note = note;
    rows.push_back(row);
  }

  // Registration wall time vs cloud size against a synthetic room.
  {
    ftdf::TdfGrid grid(Eigen::Vector3d(-10, -10, -5), 0.05, 400, 400, 200, 64, budget);
    const ftdf::BinaryKernel reg_kernel(10, 64);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    std::uniform_real_distribution<double> uz(-4.0, 4.0);
    std::vector<Eigen::Vector3d> walls;
    for (int i = 0; i < 60000; ++i) {
      const int face = i % 3;
      Eigen::Vector3d p(u(rng), u(rng), uz(rng));
      if (face == 0) p.x() = 8.0;
      if (face == 1) p.y() = 8.0;
      if (face == 2) p.z() = 4.0;
      walls.push_back(p);
    }
    grid.insert_cloud(reg_kernel, walls);
    for (std::size_t cloud_size : {1000u, 5000u, 20000u}) {
      std::vector<Eigen::Vector3d> scan;
      scan.reserve(cloud_size);
      for (std::size_t i = 0; i < cloud_size; ++i) scan.push_back(walls[i % walls.size()]);
      ftdf::RegistrationConfig cfg;
      ftdf::Pose init;
      init.translation = Eigen::Vector3d(0.05, -0.04, 0.02);
      BenchRow row;
      row.name = "register/" + std::to_string(cloud_size) + "_points";
      row.n = 1;
      const auto t0 = Clock::now();
      const auto report = ftdf::register_cloud(scan, grid, init, cfg);
      row.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      row.per_item_ns = 1e6 * row.total_ms;
      row.note = "iterations " + std::to_string(report.iterations);
      rows.push_back(row);
    }
  }

  print_bench(rows, csv_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct LiDAR-inertial odometry over a binary-encoded truncated distance field"};
  app.require_subcommand(1);
  app.footer(config_key_help());

  std::string manifest_path, config_path, out_dir = "out";
  std::vector<std::string> overrides;
  bool save_map = false;

  CLI::App* run = app.add_subcommand("run", "Run odometry on a dataset manifest");
  run->add_option("--manifest", manifest_path, "dataset manifest file")->required();
  run->add_option("--config", config_path, "pipeline configuration file");
  run->add_option("--set", overrides, "override one config key (key=value)");
  run->add_option("--out", out_dir, "output directory (trajectory.txt, timing.csv)");
  run->add_flag("--save-map", save_map, "also write the final map snapshot");

  std::string scans_path, poses_path, map_out = "map.ftdf";
  int export_level = 0;
  CLI::App* map = app.add_subcommand("map", "Fuse scans at known poses into a map");
  map->add_option("--scans", scans_path, "scan file or directory")->required();
  map->add_option("--poses", poses_path, "trajectory file, one record per scan")->required();
  map->add_option("--config", config_path, "pipeline configuration file");
  map->add_option("--set", overrides, "override one config key (key=value)");
  map->add_option("--out", map_out, "output snapshot path");
  map->add_option("--level", export_level, "decoded-distance level for the point export");

  std::string est_path, gt_path;
  double eval_max_dt = 0.02;
  CLI::App* eval = app.add_subcommand("eval", "Absolute translation error of a trajectory");
  eval->add_option("estimate", est_path, "estimated trajectory")->required();
  eval->add_option("ground_truth", gt_path, "ground-truth trajectory")->required();
  eval->add_option("--max-dt", eval_max_dt, "association window, seconds");

  std::string bench_csv;
  std::size_t bench_points = 20000;
  int bench_radius = 20, bench_repeats = 3;
  double bench_budget_gb = 4.0;
  CLI::App* bench = app.add_subcommand("bench", "Insertion, interpolation and registration timings");
  bench->add_option("--csv", bench_csv, "also write machine-readable rows to this file");
  bench->add_option("--points", bench_points, "points per insertion pass");
  bench->add_option("--kernel-radius", bench_radius, "kernel radius in cells");
  bench->add_option("--repeats", bench_repeats, "timed passes per tier");
  bench->add_option("--budget-gb", bench_budget_gb, "per-grid allocation cap, GiB");

  std::string grid_path, ply_path = "cells.ply";
  int grid_level = 0;
  double export_budget_gb = 16.0;
  CLI::App* exp = app.add_subcommand("export", "Point export of a map snapshot");
  exp->add_option("--grid", grid_path, "map snapshot")->required();
  exp->add_option("--out", ply_path, "output PLY path");
  exp->add_option("--level", grid_level, "decoded-distance level to export");
  exp->add_option("--budget-gb", export_budget_gb, "allocation cap for loading, GiB");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(manifest_path, config_path, overrides, out_dir, save_map);
    if (map->parsed())
      return cmd_map(scans_path, poses_path, config_path, overrides, map_out, export_level);
    if (eval->parsed()) return cmd_eval(est_path, gt_path, eval_max_dt);
    if (bench->parsed())
      return cmd_bench(bench_csv, bench_points, bench_radius, bench_repeats, bench_budget_gb);
    if (exp->parsed())
      return cmd_export(grid_path, ply_path, grid_level,
                        static_cast<std::uint64_t>(export_budget_gb * (1ull << 30)));
  } catch (const ftdf::AllocationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitResourceLimit;
  } catch (const ftdf::InsufficientOverlapError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficientData;
  } catch (const ftdf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
