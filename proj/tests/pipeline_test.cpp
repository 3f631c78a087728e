#include "ftdf/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ftdf/errors.hpp"
#include "support/synthetic.hpp"

namespace ftdf {
namespace {

Scan timed_scan(double t_start, double t_end, std::vector<Eigen::Vector3d> points,
                bool with_times = true) {
  Scan scan;
  scan.t_start = t_start;
  scan.t_end = t_end;
  scan.points = std::move(points);
  if (with_times) {
    const double span = t_end - t_start;
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      scan.time_offsets.push_back(
          static_cast<float>(span * static_cast<double>(i) /
                             static_cast<double>(std::max<std::size_t>(scan.points.size() - 1, 1))));
    }
  }
  return scan;
}

TEST(Deskew, StationaryHistoryLeavesPointsInPlace) {
  Pose pose;
  pose.translation = Eigen::Vector3d(1.0, -2.0, 0.5);
  pose.rotation = exp_so3(Eigen::Vector3d(0.1, 0.2, 0.3));
  PoseBuffer buffer;
  for (int i = 0; i <= 20; ++i) buffer.push(0.01 * i, pose);

  const Scan scan = timed_scan(0.05, 0.15, {{1.0, 2.0, 3.0}, {-0.5, 0.4, 1.2}});
  std::string note;
  const Scan out = deskew(scan, buffer, 0.02, &note);
  EXPECT_TRUE(note.empty());
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    EXPECT_LT((out.points[i] - scan.points[i]).norm(), 1e-12);
  }
}

TEST(Deskew, ConstantYawRateMatchesClosedForm) {
  const double rate = 0.5;  // rad/s about +z
  PoseBuffer buffer;
  for (int i = 0; i <= 200; ++i) {
    const double t = 0.001 * i;
    Pose pose;
    pose.rotation = exp_so3(Eigen::Vector3d(0.0, 0.0, rate * t));
    buffer.push(t, pose);
  }

  const Eigen::Vector3d p(2.0, 1.0, 0.5);
  Scan scan = timed_scan(0.05, 0.15, {p, p, p});
  scan.time_offsets = {0.0f, 0.05f, 0.1f};
  std::string note;
  const Scan out = deskew(scan, buffer, 0.01, &note);
  ASSERT_TRUE(note.empty());

  // A point captured dt before the sweep end is rotated back by rate*dt.
  // Offsets are stored as float, so timestamps carry ~1e-9 s of quantization.
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const double dt = 0.1 - static_cast<double>(scan.time_offsets[i]);
    const Eigen::Vector3d expected = exp_so3(Eigen::Vector3d(0.0, 0.0, -rate * dt)) * p;
    EXPECT_LT((out.points[i] - expected).norm(), 1e-9) << "point " << i;
  }
  EXPECT_LT((out.points[2] - p).norm(), 2e-8);  // captured at the sweep end
}

TEST(Deskew, ConstantVelocityShiftsAgainstMotion) {
  const Eigen::Vector3d v(1.0, 0.0, 0.0);
  PoseBuffer buffer;
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.002 * i;
    Pose pose;
    pose.translation = v * t;
    buffer.push(t, pose);
  }
  const Eigen::Vector3d p(3.0, -1.0, 0.2);
  Scan scan = timed_scan(0.05, 0.15, {p});
  scan.time_offsets = {0.0f};
  const Scan out = deskew(scan, buffer, 0.01);
  // Captured 0.1 s before the end while the platform advanced 0.1 m.
  EXPECT_LT((out.points[0] - (p - Eigen::Vector3d(0.1, 0.0, 0.0))).norm(), 1e-9);
}

TEST(Deskew, MissingPointTimesPassesThrough) {
  PoseBuffer buffer;
  buffer.push(0.0, Pose::identity());
  buffer.push(1.0, Pose::identity());
  const Scan scan = timed_scan(0.2, 0.4, {{1.0, 2.0, 3.0}}, false);
  std::string note;
  const Scan out = deskew(scan, buffer, 0.01, &note);
  EXPECT_FALSE(note.empty());
  EXPECT_EQ(out.points[0], scan.points[0]);
}

TEST(Deskew, UncoveredSweepPassesThrough) {
  PoseBuffer buffer;
  buffer.push(0.0, Pose::identity());
  buffer.push(0.01, Pose::identity());
  const Scan scan = timed_scan(0.5, 0.6, {{1.0, 2.0, 3.0}});
  std::string note;
  const Scan out = deskew(scan, buffer, 0.02, &note);
  EXPECT_FALSE(note.empty());
  EXPECT_EQ(out.points[0], scan.points[0]);
}

TEST(KeyframeDue, TranslationPastThreshold) {
  Pose current;
  current.translation = Eigen::Vector3d(2.5, 0.0, 0.0);
  EXPECT_TRUE(keyframe_due(current, Pose::identity(), 2.0, 25.0));
  current.translation = Eigen::Vector3d(1.9, 0.0, 0.0);
  EXPECT_FALSE(keyframe_due(current, Pose::identity(), 2.0, 25.0));
}

TEST(KeyframeDue, RotationPastThreshold) {
  Pose current;
  current.rotation = exp_so3(Eigen::Vector3d(0.0, 0.0, 30.0 * std::numbers::pi / 180.0));
  EXPECT_TRUE(keyframe_due(current, Pose::identity(), 2.0, 25.0));
  current.rotation = exp_so3(Eigen::Vector3d(0.0, 0.0, 20.0 * std::numbers::pi / 180.0));
  EXPECT_FALSE(keyframe_due(current, Pose::identity(), 2.0, 25.0));
}

TEST(KeyframeDue, IdenticalPoseIsNotDue) {
  Pose pose;
  pose.translation = Eigen::Vector3d(4.0, 5.0, 6.0);
  pose.rotation = exp_so3(Eigen::Vector3d(0.4, -0.2, 0.9));
  EXPECT_FALSE(keyframe_due(pose, pose, 2.0, 25.0));
}

TEST(PipelineConfig, EmptyConfigKeepsDefaults) {
  const PipelineConfig cfg = pipeline_config_from(KeyValueConfig{});
  EXPECT_DOUBLE_EQ(cfg.resolution, 0.05);
  EXPECT_EQ(cfg.mask_bits, 64);
  EXPECT_EQ(cfg.kernel_radius, 20);
  EXPECT_DOUBLE_EQ(cfg.keyframe_translation, 2.0);
  EXPECT_DOUBLE_EQ(cfg.keyframe_rotation_deg, 25.0);
  EXPECT_FALSE(cfg.map_z_offset.has_value());
  EXPECT_TRUE(cfg.deskew);
  EXPECT_EQ(cfg.workers, 1);
  EXPECT_DOUBLE_EQ(cfg.ekf.gravity, 9.81);
}

TEST(PipelineConfig, OverridesApply) {
  KeyValueConfig kv;
  kv.set("resolution", "0.1");
  kv.set("kernel_radius", "10");
  kv.set("workers", "4");
  kv.set("deskew", "false");
  kv.set("map_z_offset", "1.25");
  kv.set("memory_budget_gb", "2");
  kv.set("map_size", "30, 12, 8");
  kv.set("gyro_noise", "5e-4");
  const PipelineConfig cfg = pipeline_config_from(kv);
  EXPECT_DOUBLE_EQ(cfg.resolution, 0.1);
  EXPECT_EQ(cfg.kernel_radius, 10);
  EXPECT_EQ(cfg.workers, 4);
  EXPECT_EQ(cfg.registration.workers, 4);  // worker count propagates
  EXPECT_FALSE(cfg.deskew);
  ASSERT_TRUE(cfg.map_z_offset.has_value());
  EXPECT_DOUBLE_EQ(*cfg.map_z_offset, 1.25);
  EXPECT_EQ(cfg.memory_budget_bytes, 2ull << 30);
  EXPECT_LT((cfg.map_size - Eigen::Vector3d(30, 12, 8)).norm(), 1e-12);
  EXPECT_DOUBLE_EQ(cfg.ekf.gyro_noise, 5e-4);
}

TEST(PipelineConfig, UnknownKeyIsRejected) {
  KeyValueConfig kv;
  kv.set("resolutoin", "0.1");  // typo must not silently default
  EXPECT_THROW(pipeline_config_from(kv), ConfigError);
}

TEST(PipelineConfig, EveryDocumentedKeyParses) {
  for (const ConfigKeyDoc& doc : pipeline_config_keys()) {
    KeyValueConfig kv;
    // map_z_offset documents derived behavior rather than a literal default.
    kv.set(doc.key, std::string(doc.key) == "map_z_offset" ? "12.5" : doc.default_value);
    EXPECT_NO_THROW(pipeline_config_from(kv)) << doc.key;
  }
}

TEST(PipelineConfig, InvalidValuesAreRejected) {
  const auto reject = [](const char* key, const char* value) {
    KeyValueConfig kv;
    kv.set(key, value);
    EXPECT_THROW(pipeline_config_from(kv), ConfigError) << key << "=" << value;
  };
  reject("resolution", "0");
  reject("workers", "0");
  reject("downsample", "0");
  reject("memory_budget_gb", "-1");
  reject("map_size", "10 0 10");
  reject("keyframe_translation", "-2");
}

TEST(TimingSummary, ExcludesWarmupAndGatesUpdateColumn) {
  std::vector<ScanTiming> timings;
  for (int i = 0; i < 5; ++i) {
    timings.push_back(ScanTiming{0.1 * i, 100.0, 50.0, 25.0, true});  // warm-up noise
  }
  timings.push_back(ScanTiming{0.5, 10.0, 4.0, 0.0, false});
  timings.push_back(ScanTiming{0.6, 12.0, 6.0, 8.0, true});
  timings.push_back(ScanTiming{0.7, 14.0, 8.0, 0.0, false});
  const TimingReport report = summarize_timings(timings, 5);
  EXPECT_EQ(report.warmup_excluded, 5u);
  EXPECT_EQ(report.total.count, 3u);
  EXPECT_DOUBLE_EQ(report.total.mean_ms, 12.0);
  EXPECT_DOUBLE_EQ(report.total.std_ms, 2.0);
  EXPECT_DOUBLE_EQ(report.optimize.mean_ms, 6.0);
  ASSERT_EQ(report.update.count, 1u);  // only the sweep that fused the map
  EXPECT_DOUBLE_EQ(report.update.mean_ms, 8.0);
  EXPECT_DOUBLE_EQ(report.update.std_ms, 0.0);
}

TEST(TimingSummary, ShortRunsAreEntirelyWarmup) {
  std::vector<ScanTiming> timings(3);
  const TimingReport report = summarize_timings(timings, 5);
  EXPECT_EQ(report.warmup_excluded, 3u);
  EXPECT_EQ(report.total.count, 0u);
  EXPECT_EQ(report.update.count, 0u);
}

TEST(TimingSummary, PhaseStatsMatchHandComputation) {
  const std::vector<double> samples = {1.0, 2.0, 3.0, 4.0};
  const PhaseStats stats = summarize_phase(samples);
  EXPECT_EQ(stats.count, 4u);
  EXPECT_DOUBLE_EQ(stats.mean_ms, 2.5);
  EXPECT_NEAR(stats.std_ms, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_EQ(summarize_phase({}).count, 0u);
}

// --- Full pipeline runs over a synthetic room -------------------------------

PipelineConfig room_config() {
  PipelineConfig cfg;
  cfg.map_size = Eigen::Vector3d(30.0, 20.0, 8.0);
  cfg.resolution = 0.1;
  cfg.mask_bits = 32;
  cfg.kernel_radius = 10;
  cfg.registration.min_valid_points = 50;
  return cfg;
}

// A closed 12 x 8 x 4 box (no interior ribs) with the sensor 1.5 m up.
struct RoomRig {
  test::World world = test::corridor_world(6.0, 6.0, 4.0, 4.0, 1e9);
  test::Motion stationary = [](double) {
    Pose pose;
    pose.translation = Eigen::Vector3d(0.0, 0.0, 1.5);
    return pose;
  };
  test::SweepPattern pattern;
};

std::vector<ImuSample> stationary_imu(double t_total, double rate, double accel_std,
                                      double gyro_std, unsigned seed) {
  std::mt19937 rng(seed);
  test::ImuNoise noise{gyro_std, accel_std};
  // A move time past t_total keeps the platform at rest for the whole stream.
  return test::ramp_cruise_imu(t_total, rate, 2.0 * t_total, 0.5, 1.0, 9.81, noise, rng);
}

TEST(OdometryPipeline, BootstrapSeedsFilterMapAndKeyframe) {
  RoomRig rig;
  OdometryPipeline pipeline(room_config());
  for (const ImuSample& s : stationary_imu(1.0, 200.0, 1e-3, 1e-4, 1)) pipeline.push_imu(s);
  EXPECT_FALSE(pipeline.initialized());

  const Scan scan = test::synth_sweep(rig.world, rig.stationary, 1.0, rig.pattern);
  ASSERT_GT(scan.points.size(), 1000u);
  const ScanResult result = pipeline.push_scan(scan);

  EXPECT_TRUE(result.bootstrap);
  EXPECT_TRUE(result.map_updated);
  EXPECT_TRUE(pipeline.initialized());
  ASSERT_NE(pipeline.grid(), nullptr);
  ASSERT_EQ(pipeline.keyframes().size(), 1u);
  ASSERT_EQ(pipeline.trajectory().size(), 1u);
  EXPECT_LT(pipeline.trajectory()[0].p.norm(), 1e-9);           // starts at the origin
  EXPECT_LT(pipeline.trajectory()[0].q.angularDistance(Eigen::Quaterniond::Identity()),
            0.01);  // leveled from gravity

  // The seeded map must score the seeding cloud as on-surface. An inserted
  // point can sit up to half a cell from its cell center per axis, so the
  // interpolated truncated-L1 value there is bounded by 1.5 cells.
  const Pose pose = pipeline.ekf().state().pose();
  const double bound = 1.5 * 0.1 + 1e-9;
  std::size_t on_surface = 0, valid = 0;
  for (std::size_t i = 0; i < scan.points.size(); i += 25) {
    const auto d = pipeline.grid()->distance_at(pose.apply(scan.points[i]));
    if (!d) continue;
    ++valid;
    if (*d <= bound) ++on_surface;
  }
  ASSERT_GT(valid, 20u);
  EXPECT_EQ(on_surface, valid);
}

OdometryResult run_stationary(OdometryPipeline& pipeline, const RoomRig& rig, int sweeps,
                              unsigned seed) {
  auto imu = stationary_imu(1.0 + 0.1 * (sweeps + 1), 200.0, 1e-3, 1e-4, seed);
  std::size_t imu_cursor = 0;
  int sweep_index = 0;
  return run_odometry(
      pipeline,
      [&]() -> std::optional<Scan> {
        if (sweep_index >= sweeps) return std::nullopt;
        const double t_start = 1.0 + 0.1 * sweep_index++;
        return test::synth_sweep(rig.world, rig.stationary, t_start, rig.pattern);
      },
      [&]() -> std::optional<ImuSample> {
        if (imu_cursor >= imu.size()) return std::nullopt;
        return imu[imu_cursor++];
      });
}

TEST(OdometryPipeline, StationaryPlatformHoldsPoseWithOneKeyframe) {
  RoomRig rig;
  OdometryPipeline pipeline(room_config());
  const OdometryResult result = run_stationary(pipeline, rig, 10, 7);

  ASSERT_EQ(result.trajectory.size(), 10u);
  for (const TrajectoryRecord& r : result.trajectory) {
    EXPECT_LT(r.p.norm(), 0.02) << "pose at t=" << r.t << " drifted";
  }
  EXPECT_EQ(result.stats.keyframes, 1u);  // never moved far enough for another
  EXPECT_EQ(result.stats.degraded, 0u);
}

TEST(OdometryPipeline, MapUpdatesHappenExactlyOnKeyframes) {
  RoomRig rig;
  OdometryPipeline pipeline(room_config());
  const OdometryResult result = run_stationary(pipeline, rig, 8, 11);
  std::size_t map_updates = 0;
  for (const ScanTiming& t : result.timings) map_updates += t.map_updated ? 1 : 0;
  EXPECT_EQ(map_updates, pipeline.keyframes().size());
}

TEST(OdometryPipeline, WorkerCountDoesNotChangeTheTrajectory) {
  RoomRig rig;
  PipelineConfig cfg = room_config();
  OdometryPipeline serial(cfg);
  cfg.workers = 4;
  cfg.registration.workers = 4;
  OdometryPipeline threaded(cfg);

  const OdometryResult a = run_stationary(serial, rig, 6, 13);
  const OdometryResult b = run_stationary(threaded, rig, 6, 13);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory[i].p.x(), b.trajectory[i].p.x());
    EXPECT_EQ(a.trajectory[i].p.y(), b.trajectory[i].p.y());
    EXPECT_EQ(a.trajectory[i].p.z(), b.trajectory[i].p.z());
    EXPECT_EQ(a.trajectory[i].q.coeffs(), b.trajectory[i].q.coeffs());
  }
}

TEST(OdometryPipeline, ReplayIsDeterministic) {
  RoomRig rig;
  OdometryPipeline first(room_config());
  OdometryPipeline second(room_config());
  const OdometryResult a = run_stationary(first, rig, 6, 17);
  const OdometryResult b = run_stationary(second, rig, 6, 17);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory[i].p.x(), b.trajectory[i].p.x());
    EXPECT_EQ(a.trajectory[i].q.coeffs(), b.trajectory[i].q.coeffs());
  }
}

TEST(OdometryPipeline, RegistrationFailureDegradesGracefully) {
  RoomRig rig;
  OdometryPipeline pipeline(room_config());
  for (const ImuSample& s : stationary_imu(1.1, 200.0, 1e-3, 1e-4, 19)) pipeline.push_imu(s);
  pipeline.push_scan(test::synth_sweep(rig.world, rig.stationary, 1.0, rig.pattern));

  // Every point of the next sweep lands hundreds of meters outside the map.
  Scan bad = timed_scan(1.1, 1.2, std::vector<Eigen::Vector3d>(200, {500.0, 0.0, 0.0}));
  const ScanResult result = pipeline.push_scan(bad);
  EXPECT_TRUE(result.degraded);
  EXPECT_FALSE(result.map_updated);
  EXPECT_FALSE(result.note.empty());
  EXPECT_EQ(pipeline.degraded_scans(), 1u);
  EXPECT_EQ(pipeline.keyframes().size(), 1u);
  ASSERT_EQ(pipeline.trajectory().size(), 2u);       // prediction still recorded
  EXPECT_LT(pipeline.trajectory()[1].p.norm(), 0.1);  // and stays near the origin
}

TEST(OdometryPipeline, RejectsMalformedScans) {
  OdometryPipeline pipeline(room_config());
  Scan empty;
  empty.t_start = 0.0;
  empty.t_end = 0.1;
  EXPECT_THROW(pipeline.push_scan(empty), ConfigError);

  Scan backwards = timed_scan(1.0, 0.5, {{1.0, 0.0, 0.0}}, false);
  EXPECT_THROW(pipeline.push_scan(backwards), StreamError);
}

TEST(OdometryPipeline, RejectsScanBehindTheFilterState) {
  RoomRig rig;
  OdometryPipeline pipeline(room_config());
  for (const ImuSample& s : stationary_imu(1.1, 200.0, 1e-3, 1e-4, 23)) pipeline.push_imu(s);
  pipeline.push_scan(test::synth_sweep(rig.world, rig.stationary, 1.0, rig.pattern));
  Scan stale = timed_scan(0.8, 0.9, {{1.0, 0.0, 0.0}}, false);
  EXPECT_THROW(pipeline.push_scan(stale), StreamError);
}

TEST(RunOdometry, EmptyScanStreamGivesEmptyTrajectory) {
  OdometryPipeline pipeline(room_config());
  auto imu = stationary_imu(0.5, 200.0, 0.0, 0.0, 29);
  std::size_t cursor = 0;
  const OdometryResult result = run_odometry(
      pipeline, []() -> std::optional<Scan> { return std::nullopt; },
      [&]() -> std::optional<ImuSample> {
        if (cursor >= imu.size()) return std::nullopt;
        return imu[cursor++];
      });
  EXPECT_TRUE(result.trajectory.empty());
  EXPECT_EQ(result.stats.scans, 0u);
  EXPECT_GT(result.stats.imu_samples, 0u);
  EXPECT_EQ(pipeline.grid(), nullptr);  // map never allocated, let alone touched
}

TEST(RunOdometry, OutOfOrderScansThrow) {
  RoomRig rig;
  OdometryPipeline pipeline(room_config());
  std::vector<Scan> scans = {test::synth_sweep(rig.world, rig.stationary, 1.0, rig.pattern),
                             test::synth_sweep(rig.world, rig.stationary, 0.5, rig.pattern)};
  std::size_t cursor = 0;
  auto imu = stationary_imu(1.1, 200.0, 0.0, 0.0, 31);
  std::size_t imu_cursor = 0;
  EXPECT_THROW(run_odometry(
                   pipeline,
                   [&]() -> std::optional<Scan> {
                     if (cursor >= scans.size()) return std::nullopt;
                     return scans[cursor++];
                   },
                   [&]() -> std::optional<ImuSample> {
                     if (imu_cursor >= imu.size()) return std::nullopt;
                     return imu[imu_cursor++];
                   }),
               StreamError);
}

TEST(RunOdometry, OutOfOrderImuThrows) {
  OdometryPipeline pipeline(room_config());
  std::vector<ImuSample> imu(3);
  imu[0].t = 0.1;
  imu[1].t = 0.2;
  imu[2].t = 0.15;
  std::size_t cursor = 0;
  EXPECT_THROW(run_odometry(
                   pipeline, []() -> std::optional<Scan> { return std::nullopt; },
                   [&]() -> std::optional<ImuSample> {
                     if (cursor >= imu.size()) return std::nullopt;
                     return imu[cursor++];
                   }),
               StreamError);
}

TEST(OdometryPipeline, ShortCorridorRunTracksGroundTruth) {
  // Ramp to 1 m/s and cover ~10 m of a ribbed corridor by the last sweep.
  const double t_move = 3.0, accel = 0.5, cruise = 1.0, t_total = 14.0;
  const test::World world = test::corridor_world(5.0, 15.0, 3.0, 4.0, 5.0);
  const test::Motion motion = [&](double t) {
    Pose pose = test::ramp_cruise_pose(t, t_move, accel, cruise);
    pose.translation.z() += 1.5;
    return pose;
  };

  PipelineConfig cfg = room_config();
  cfg.map_size = Eigen::Vector3d(44.0, 10.0, 8.0);

  std::mt19937 rng(37);
  test::ImuNoise noise{1e-4, 1e-3};
  auto imu = test::ramp_cruise_imu(t_total, 200.0, t_move, accel, cruise, 9.81, noise, rng);
  std::size_t imu_cursor = 0;
  int sweep_index = 0;
  const int sweeps = static_cast<int>((t_total - 1.2) / 0.1);

  // Dense rings: sparse ones leave ring-shaped grooves in the map that act as
  // a vantage-point anchor and bias registration along the corridor.
  test::SweepPattern pattern;
  pattern.rings = 32;
  pattern.azimuth_steps = 360;

  OdometryPipeline pipeline(cfg);
  std::vector<TrajectoryRecord> truth;
  const OdometryResult result = run_odometry(
      pipeline,
      [&]() -> std::optional<Scan> {
        if (sweep_index >= sweeps) return std::nullopt;
        const double t_start = 1.0 + 0.1 * sweep_index++;
        Scan scan = test::synth_sweep(world, motion, t_start, pattern);
        TrajectoryRecord gt;
        gt.t = scan.t_end;
        const Pose pose = motion(scan.t_end);
        gt.p = pose.translation;
        gt.q = pose.rotation;
        truth.push_back(gt);
        return scan;
      },
      [&]() -> std::optional<ImuSample> {
        if (imu_cursor >= imu.size()) return std::nullopt;
        return imu[imu_cursor++];
      });

  ASSERT_EQ(result.trajectory.size(), static_cast<std::size_t>(sweeps));
  EXPECT_EQ(result.stats.degraded, 0u);
  // ~10 m of travel against a 2 m keyframe gate: bootstrap plus four or five.
  EXPECT_GE(result.stats.keyframes, 4u);
  EXPECT_LE(result.stats.keyframes, 6u);

  const AteResult ate = evaluate_ate(result.trajectory, truth);
  EXPECT_LT(ate.rmse, 0.05) << "corridor drift too large";
}

}  // namespace
}  // namespace ftdf
