#include "ftdf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <set>

#include "ftdf/errors.hpp"

namespace ftdf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

constexpr ConfigKeyDoc kConfigKeys[] = {
    {"map_size", "60 60 25", "map extents in meters (x y z)"},
    {"map_z_offset", "map z size / 2", "initial height above the grid bottom, meters"},
    {"resolution", "0.05", "cell size, meters"},
    {"mask_bits", "64", "distance mask width in bits (4, 8, 16, 32 or 64)"},
    {"kernel_radius", "20", "fusion kernel radius, cells"},
    {"memory_budget_gb", "16", "map allocation cap, GiB"},
    {"keyframe_translation", "2.0", "keyframe translation threshold, meters"},
    {"keyframe_rotation_deg", "25", "keyframe rotation threshold, degrees"},
    {"lambda", "1.0", "robust loss scale factor"},
    {"max_iterations", "50", "optimizer iteration cap"},
    {"translation_tolerance", "1e-4", "optimizer convergence step, meters"},
    {"rotation_tolerance", "1e-4", "optimizer convergence step, radians"},
    {"min_valid_points", "100", "minimum in-map points for a usable registration"},
    {"workers", "1", "worker threads for fusion and residual evaluation"},
    {"deskew", "true", "motion-compensate sweeps with filter poses"},
    {"downsample", "1", "keep every Nth point (1 = all)"},
    {"gravity_window", "1.0", "seconds of initial IMU averaged for leveling"},
    {"gyro_noise", "1e-3", "gyro noise density, rad/s/sqrt(Hz)"},
    {"accel_noise", "1e-2", "accelerometer noise density, m/s^2/sqrt(Hz)"},
    {"gyro_bias_rw", "1e-5", "gyro bias random walk, rad/s^2/sqrt(Hz)"},
    {"accel_bias_rw", "1e-5", "accelerometer bias random walk, m/s^3/sqrt(Hz)"},
    {"gravity", "9.81", "gravity magnitude, m/s^2"},
    {"max_imu_gap", "0.1", "largest tolerated IMU gap, seconds"},
    {"init_position_std", "1e-4", "initial position uncertainty, meters"},
    {"init_velocity_std", "0.1", "initial velocity uncertainty, m/s"},
    {"init_orientation_std", "0.05", "initial orientation uncertainty, rad"},
    {"init_accel_bias_std", "0.1", "initial accelerometer bias uncertainty, m/s^2"},
    {"init_gyro_bias_std", "0.01", "initial gyro bias uncertainty, rad/s"},
    {"measurement_position_noise", "0.02", "registration position noise, meters"},
    {"measurement_orientation_noise", "0.00872", "registration orientation noise, rad"},
    {"measurement_velocity_noise", "0.3", "derived velocity noise, m/s"},
};

}  // namespace

std::span<const ConfigKeyDoc> pipeline_config_keys() { return kConfigKeys; }

PipelineConfig pipeline_config_from(const KeyValueConfig& cfg) {
  std::set<std::string> known;
  for (const ConfigKeyDoc& doc : kConfigKeys) known.insert(doc.key);
  for (const std::string& key : cfg.keys()) {
    if (!known.count(key)) {
      throw ConfigError(cfg.source() + ": unknown configuration key \"" + key + "\"");
    }
  }

  PipelineConfig out;
  out.map_size = cfg.get_vector3("map_size", out.map_size);
  if (cfg.has("map_z_offset")) out.map_z_offset = cfg.get_double("map_z_offset", 0.0);
  out.resolution = cfg.get_double("resolution", out.resolution);
  out.mask_bits = cfg.get_int("mask_bits", out.mask_bits);
  out.kernel_radius = cfg.get_int("kernel_radius", out.kernel_radius);
  const double budget_gb =
      cfg.get_double("memory_budget_gb", static_cast<double>(out.memory_budget_bytes) /
                                             static_cast<double>(1ull << 30));
  if (budget_gb <= 0.0) throw ConfigError(cfg.source() + ": memory_budget_gb must be positive");
  out.memory_budget_bytes = static_cast<std::uint64_t>(budget_gb * static_cast<double>(1ull << 30));
  out.keyframe_translation = cfg.get_double("keyframe_translation", out.keyframe_translation);
  out.keyframe_rotation_deg = cfg.get_double("keyframe_rotation_deg", out.keyframe_rotation_deg);
  out.registration.lambda = cfg.get_double("lambda", out.registration.lambda);
  out.registration.max_iterations = cfg.get_int("max_iterations", out.registration.max_iterations);
  out.registration.translation_tolerance =
      cfg.get_double("translation_tolerance", out.registration.translation_tolerance);
  out.registration.rotation_tolerance =
      cfg.get_double("rotation_tolerance", out.registration.rotation_tolerance);
  out.registration.min_valid_points =
      cfg.get_int("min_valid_points", out.registration.min_valid_points);
  out.workers = cfg.get_int("workers", out.workers);
  out.registration.workers = out.workers;
  out.deskew = cfg.get_bool("deskew", out.deskew);
  out.downsample = cfg.get_int("downsample", out.downsample);
  out.gravity_window = cfg.get_double("gravity_window", out.gravity_window);
  out.ekf.gyro_noise = cfg.get_double("gyro_noise", out.ekf.gyro_noise);
  out.ekf.accel_noise = cfg.get_double("accel_noise", out.ekf.accel_noise);
  out.ekf.gyro_bias_rw = cfg.get_double("gyro_bias_rw", out.ekf.gyro_bias_rw);
  out.ekf.accel_bias_rw = cfg.get_double("accel_bias_rw", out.ekf.accel_bias_rw);
  out.ekf.gravity = cfg.get_double("gravity", out.ekf.gravity);
  out.ekf.max_imu_gap = cfg.get_double("max_imu_gap", out.ekf.max_imu_gap);
  out.ekf.init_position_std = cfg.get_double("init_position_std", out.ekf.init_position_std);
  out.ekf.init_velocity_std = cfg.get_double("init_velocity_std", out.ekf.init_velocity_std);
  out.ekf.init_orientation_std =
      cfg.get_double("init_orientation_std", out.ekf.init_orientation_std);
  out.ekf.init_accel_bias_std =
      cfg.get_double("init_accel_bias_std", out.ekf.init_accel_bias_std);
  out.ekf.init_gyro_bias_std = cfg.get_double("init_gyro_bias_std", out.ekf.init_gyro_bias_std);
  out.measurement_position_noise =
      cfg.get_double("measurement_position_noise", out.measurement_position_noise);
  out.measurement_orientation_noise =
      cfg.get_double("measurement_orientation_noise", out.measurement_orientation_noise);
  out.measurement_velocity_noise =
      cfg.get_double("measurement_velocity_noise", out.measurement_velocity_noise);

  if (out.map_size.minCoeff() <= 0.0) {
    throw ConfigError(cfg.source() + ": map_size components must be positive");
  }
  if (out.resolution <= 0.0) throw ConfigError(cfg.source() + ": resolution must be positive");
  if (out.keyframe_translation <= 0.0 || out.keyframe_rotation_deg <= 0.0) {
    throw ConfigError(cfg.source() + ": keyframe thresholds must be positive");
  }
  if (out.downsample < 1) throw ConfigError(cfg.source() + ": downsample must be >= 1");
  if (out.workers < 1) throw ConfigError(cfg.source() + ": workers must be >= 1");
  return out;
}

Scan deskew(const Scan& scan, const PoseBuffer& buffer, double coverage_slack,
            std::string* note) {
  if (!scan.has_point_times()) {
    if (note) *note = "no per-point times; sweep left uncompensated";
    return scan;
  }
  // Endpoint lookups clamp, so tolerate up to coverage_slack seconds of
  // missing pose history at either end of the sweep.
  if (buffer.size() < 2 ||
      !buffer.covers(scan.t_start + coverage_slack, scan.t_end - coverage_slack)) {
    if (note) {
      *note = "pose history does not span the sweep; left uncompensated";
    }
    return scan;
  }

  Scan out = scan;
  const Pose end_inverse = buffer.pose_at(scan.t_end).pose.inverse();
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const double t_i = scan.t_start + static_cast<double>(scan.time_offsets[i]);
    const Pose at_capture = buffer.pose_at(t_i).pose;
    out.points[i] = end_inverse.apply(at_capture.apply(scan.points[i]));
  }
  return out;
}

bool keyframe_due(const Pose& current, const Pose& last_keyframe, double t_th_meters,
                  double q_th_degrees) {
  const double dt = (current.translation - last_keyframe.translation).norm();
  if (dt > t_th_meters) return true;
  const double angle_deg = rotation_angle_between(last_keyframe, current) * 180.0 / std::numbers::pi;
  return angle_deg > q_th_degrees;
}

OdometryPipeline::OdometryPipeline(const PipelineConfig& config)
    : config_(config),
      ekf_(config.ekf),
      kernel_(config.kernel_radius, config.mask_bits) {}

void OdometryPipeline::push_imu(const ImuSample& sample) {
  if (!ekf_.initialized()) {
    pending_imu_.push_back(sample);
    return;
  }
  ekf_.predict(sample);
}

std::vector<Eigen::Vector3d> OdometryPipeline::prepare_points(const Scan& scan,
                                                              ScanResult& result) {
  Scan working;
  working.t_start = scan.t_start;
  working.t_end = scan.t_end;
  const std::size_t step = static_cast<std::size_t>(config_.downsample);
  if (step <= 1) {
    working.points = scan.points;
    working.time_offsets = scan.time_offsets;
  } else {
    working.points.reserve(scan.points.size() / step + 1);
    if (scan.has_point_times()) working.time_offsets.reserve(scan.points.size() / step + 1);
    for (std::size_t i = 0; i < scan.points.size(); i += step) {
      working.points.push_back(scan.points[i]);
      if (scan.has_point_times()) working.time_offsets.push_back(scan.time_offsets[i]);
    }
  }

  if (config_.deskew) {
    std::string note;
    Scan compensated = deskew(working, ekf_.pose_buffer(), config_.ekf.max_imu_gap, &note);
    if (note.empty()) {
      result.deskew_applied = true;
    } else {
      ++deskew_passthroughs_;
      result.note = note;
    }
    return std::move(compensated.points);
  }
  return std::move(working.points);
}

void OdometryPipeline::bootstrap(const Scan& scan, ScanResult& result, double& update_ms) {
  // Level the initial orientation from the pre-initialization IMU backlog.
  Eigen::Vector3d mean_accel(0.0, 0.0, config_.ekf.gravity);
  std::size_t used = 0;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const ImuSample& s : pending_imu_) {
    if (s.t >= scan.t_end - config_.gravity_window && s.t <= scan.t_end) {
      sum += s.accel;
      ++used;
    }
  }
  if (used > 0) mean_accel = sum / static_cast<double>(used);
  pending_imu_.clear();
  ekf_.initialize(scan.t_end, orientation_from_gravity(mean_accel));

  // Allocate the map centered horizontally on the starting position.
  const Eigen::Vector3d p0 = ekf_.state().p;
  const double z_offset = config_.map_z_offset.value_or(0.5 * config_.map_size.z());
  const Eigen::Vector3d origin =
      p0 - Eigen::Vector3d(0.5 * config_.map_size.x(), 0.5 * config_.map_size.y(), z_offset);
  const auto dim = [&](double extent) {
    return static_cast<std::int64_t>(std::ceil(extent / config_.resolution));
  };
  grid_ = std::make_unique<TdfGrid>(origin, config_.resolution, dim(config_.map_size.x()),
                                    dim(config_.map_size.y()), dim(config_.map_size.z()),
                                    config_.mask_bits, config_.memory_budget_bytes);

  // With a single pose in the buffer motion compensation is the identity, so
  // the raw (downsampled) cloud seeds the map at the initial pose.
  ScanResult ignored;
  auto saved = config_.deskew;
  config_.deskew = false;
  std::vector<Eigen::Vector3d> points = prepare_points(scan, ignored);
  config_.deskew = saved;

  const Pose pose = ekf_.state().pose();
  std::vector<Eigen::Vector3d> world(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) world[i] = pose.apply(points[i]);
  const auto t_upd = Clock::now();
  grid_->insert_cloud(kernel_, world, config_.workers);
  update_ms = elapsed_ms(t_upd);

  keyframes_.push_back(Keyframe{scan.t_end, pose});
  last_measured_p_ = pose.translation;
  last_measured_t_ = scan.t_end;

  result.bootstrap = true;
  result.map_updated = true;
  result.registration.pose = pose;
  result.registration.status = RegistrationStatus::kConverged;
  result.registration.converged = true;
}

ScanResult OdometryPipeline::push_scan(const Scan& scan) {
  if (scan.points.empty()) throw ConfigError("scan has no points");
  if (scan.t_end < scan.t_start) throw StreamError("scan ends before it starts");

  const auto t0 = Clock::now();
  ScanResult result;
  double optimize_ms = 0.0;
  double update_ms = 0.0;

  if (!ekf_.initialized()) {
    bootstrap(scan, result, update_ms);
  } else {
    if (scan.t_end <= last_measured_t_) {
      throw StreamError("sweep ending at " + std::to_string(scan.t_end) +
                        " arrived after state time " + std::to_string(last_measured_t_));
    }
    ekf_.pose_buffer().drop_before(scan.t_start);
    std::vector<Eigen::Vector3d> points = prepare_points(scan, result);

    const Pose predicted = ekf_.state().pose();
    const auto t_opt = Clock::now();
    result.registration = register_cloud(points, *grid_, predicted, config_.registration);
    optimize_ms = elapsed_ms(t_opt);

    const bool usable = result.registration.status == RegistrationStatus::kConverged ||
                        result.registration.status == RegistrationStatus::kMaxIterations;
    if (usable) {
      PoseMeasurement meas;
      meas.position = result.registration.pose.translation;
      meas.orientation = result.registration.pose.rotation;
      meas.velocity = velocity_from_poses(last_measured_p_, last_measured_t_,
                                          meas.position, scan.t_end);
      meas.position_noise = config_.measurement_position_noise;
      meas.orientation_noise = config_.measurement_orientation_noise;
      meas.velocity_noise = config_.measurement_velocity_noise;
      if (!ekf_.update(meas)) {
        result.degraded = true;
        result.note = "non-finite registration result rejected by the filter";
      } else {
        last_measured_p_ = meas.position;
        last_measured_t_ = scan.t_end;
      }
    } else {
      result.degraded = true;
      result.note = result.registration.status == RegistrationStatus::kNoValidPoints
                        ? "too few points landed in the map; prediction stands"
                        : "registration diverged; prediction stands";
    }

    if (result.degraded) {
      ++degraded_scans_;
    } else if (keyframe_due(result.registration.pose, keyframes_.back().pose,
                            config_.keyframe_translation, config_.keyframe_rotation_deg)) {
      const auto t_upd = Clock::now();
      const Pose& pose = result.registration.pose;
      std::vector<Eigen::Vector3d> world(points.size());
      for (std::size_t i = 0; i < points.size(); ++i) world[i] = pose.apply(points[i]);
      grid_->insert_cloud(kernel_, world, config_.workers);
      keyframes_.push_back(Keyframe{scan.t_end, pose});
      result.map_updated = true;
      update_ms = elapsed_ms(t_upd);
    }
  }

  result.record.t = scan.t_end;
  result.record.p = ekf_.state().p;
  result.record.q = ekf_.state().q;
  trajectory_.push_back(result.record);

  ScanTiming timing;
  timing.t = scan.t_end;
  timing.total_ms = elapsed_ms(t0);
  timing.optimize_ms = optimize_ms;
  timing.update_ms = update_ms;
  timing.map_updated = result.map_updated;
  timings_.push_back(timing);
  return result;
}

PhaseStats summarize_phase(std::span<const double> samples_ms) {
  PhaseStats stats;
  stats.count = samples_ms.size();
  if (stats.count == 0) return stats;
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  stats.mean_ms = sum / static_cast<double>(stats.count);
  double sq = 0.0;
  for (double v : samples_ms) sq += (v - stats.mean_ms) * (v - stats.mean_ms);
  stats.std_ms = stats.count > 1 ? std::sqrt(sq / static_cast<double>(stats.count - 1)) : 0.0;
  return stats;
}

TimingReport summarize_timings(std::span<const ScanTiming> timings, std::size_t warmup_scans) {
  TimingReport report;
  report.warmup_excluded = std::min(warmup_scans, timings.size());
  std::vector<double> total, optimize, update;
  for (std::size_t i = report.warmup_excluded; i < timings.size(); ++i) {
    total.push_back(timings[i].total_ms);
    optimize.push_back(timings[i].optimize_ms);
    if (timings[i].map_updated) update.push_back(timings[i].update_ms);
  }
  report.total = summarize_phase(total);
  report.optimize = summarize_phase(optimize);
  report.update = summarize_phase(update);
  return report;
}

OdometryResult run_odometry(OdometryPipeline& pipeline, ScanSource next_scan, ImuSource next_imu) {
  OdometryResult result;
  std::optional<Scan> scan = next_scan ? next_scan() : std::nullopt;
  std::optional<ImuSample> imu = next_imu ? next_imu() : std::nullopt;
  bool have_last_imu = false, have_last_scan = false;
  double last_imu_t = 0.0, last_scan_t = 0.0;

  while (scan || imu) {
    if (imu && (!scan || imu->t <= scan->t_end)) {
      if (have_last_imu && imu->t <= last_imu_t) {
        throw StreamError("IMU stream out of order: " + std::to_string(imu->t) + " after " +
                          std::to_string(last_imu_t));
      }
      last_imu_t = imu->t;
      have_last_imu = true;
      pipeline.push_imu(*imu);
      ++result.stats.imu_samples;
      imu = next_imu();
    } else {
      if (have_last_scan && scan->t_end <= last_scan_t) {
        throw StreamError("scan stream out of order: sweep ending at " +
                          std::to_string(scan->t_end) + " after " + std::to_string(last_scan_t));
      }
      last_scan_t = scan->t_end;
      have_last_scan = true;
      pipeline.push_scan(*scan);
      ++result.stats.scans;
      scan = next_scan();
    }
  }

  result.trajectory = pipeline.trajectory();
  result.timings = pipeline.timings();
  result.stats.keyframes = pipeline.keyframes().size();
  result.stats.degraded = pipeline.degraded_scans();
  result.stats.deskew_passthroughs = pipeline.deskew_passthroughs();
  return result;
}

}  // namespace ftdf
