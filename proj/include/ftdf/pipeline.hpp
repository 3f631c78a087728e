#ifndef FTDF_PIPELINE_HPP
#define FTDF_PIPELINE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ftdf/config.hpp"
#include "ftdf/dataset.hpp"
#include "ftdf/ekf.hpp"
#include "ftdf/grid.hpp"
#include "ftdf/registration.hpp"
#include "ftdf/scan.hpp"

namespace ftdf {

struct PipelineConfig {
  // Map: the grid is allocated at the first scan so its horizontal center
  // sits on the initial position; the vertical offset places the initial
  // position that many meters above the grid bottom (default: centered).
  Eigen::Vector3d map_size = Eigen::Vector3d(60.0, 60.0, 25.0);  // meters
  std::optional<double> map_z_offset;
  double resolution = 0.05;  // meters per cell
  int mask_bits = 64;
  int kernel_radius = 20;  // cells
  std::uint64_t memory_budget_bytes = kDefaultGridMemoryBudget;

  // Keyframing: a map update happens when the pose has moved this far from
  // the most recent keyframe.
  double keyframe_translation = 2.0;   // meters
  double keyframe_rotation_deg = 25.0;

  RegistrationConfig registration;

  EkfConfig ekf;
  // Noise of the registration result when fused as an EKF measurement. The
  // velocity pseudo-measurement differences two registered positions one sweep
  // apart, so its noise floor is sqrt(2) * position noise / sweep period.
  double measurement_position_noise = 0.02;     // m
  double measurement_orientation_noise = 0.00872;  // rad (~0.5 deg)
  double measurement_velocity_noise = 0.3;      // m/s

  bool deskew = true;
  int downsample = 1;           // keep every Nth point (1 = all)
  double gravity_window = 1.0;  // s of pre-init IMU averaged for leveling
  int workers = 1;
};

// Documentation row for one configuration key; the CLI help enumerates these.
struct ConfigKeyDoc {
  const char* key;
  const char* default_value;
  const char* description;
};

std::span<const ConfigKeyDoc> pipeline_config_keys();

// Builds a PipelineConfig from key = value settings; unknown keys throw
// ConfigError so typos do not silently fall back to defaults.
PipelineConfig pipeline_config_from(const KeyValueConfig& cfg);

// Motion-compensates one sweep: each point is carried from its
// acquisition-time pose into the sweep-end frame, p' = T(t_end)^-1 T(t_i) p.
// Passes the cloud through untouched (optionally reporting why) when
// per-point times are missing or the buffer leaves more than coverage_slack
// seconds of the sweep uncovered.
Scan deskew(const Scan& scan, const PoseBuffer& buffer, double coverage_slack = 0.1,
            std::string* note = nullptr);

// True when the pose has translated more than t_th meters or rotated more
// than q_th degrees relative to the last keyframe.
bool keyframe_due(const Pose& current, const Pose& last_keyframe, double t_th_meters,
                  double q_th_degrees);

struct Keyframe {
  double t = 0.0;
  Pose pose;
};

struct ScanTiming {
  double t = 0.0;
  double total_ms = 0.0;
  double optimize_ms = 0.0;
  double update_ms = 0.0;
  bool map_updated = false;
};

struct ScanResult {
  TrajectoryRecord record;  // filter state at the sweep end
  RegistrationReport registration;
  bool bootstrap = false;
  bool map_updated = false;
  bool degraded = false;          // registration failed; prediction stands
  bool deskew_applied = false;
  std::string note;               // diagnostic for pass-through / degraded
};

// Replays the direct odometry workflow: IMU prediction, deskewing,
// scan-to-map registration, filter update, and keyframe-gated map fusion.
class OdometryPipeline {
 public:
  explicit OdometryPipeline(const PipelineConfig& config);

  // Before initialization samples are buffered for gravity leveling; after
  // it they drive the filter prediction.
  void push_imu(const ImuSample& sample);

  // Processes one sweep; the first scan bootstraps the map and the filter.
  ScanResult push_scan(const Scan& scan);

  bool initialized() const { return ekf_.initialized(); }
  const InertialEkf& ekf() const { return ekf_; }
  const TdfGrid* grid() const { return grid_.get(); }
  const std::vector<TrajectoryRecord>& trajectory() const { return trajectory_; }
  const std::vector<Keyframe>& keyframes() const { return keyframes_; }
  const std::vector<ScanTiming>& timings() const { return timings_; }
  std::size_t degraded_scans() const { return degraded_scans_; }
  std::size_t deskew_passthroughs() const { return deskew_passthroughs_; }

 private:
  void bootstrap(const Scan& scan, ScanResult& result, double& update_ms);
  std::vector<Eigen::Vector3d> prepare_points(const Scan& scan, ScanResult& result);

  PipelineConfig config_;
  InertialEkf ekf_;
  std::unique_ptr<TdfGrid> grid_;
  BinaryKernel kernel_;
  std::vector<ImuSample> pending_imu_;  // pre-initialization backlog
  std::vector<TrajectoryRecord> trajectory_;
  std::vector<Keyframe> keyframes_;
  std::vector<ScanTiming> timings_;
  Eigen::Vector3d last_measured_p_ = Eigen::Vector3d::Zero();
  double last_measured_t_ = 0.0;
  std::size_t degraded_scans_ = 0;
  std::size_t deskew_passthroughs_ = 0;
};

// --- Stream replay -----------------------------------------------------------

struct PhaseStats {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

PhaseStats summarize_phase(std::span<const double> samples_ms);

// Mean +- std per phase. The first warmup_scans sweeps are excluded; the
// update column covers only sweeps that fused the map.
struct TimingReport {
  PhaseStats total;
  PhaseStats optimize;
  PhaseStats update;
  std::size_t warmup_excluded = 0;
};

TimingReport summarize_timings(std::span<const ScanTiming> timings, std::size_t warmup_scans = 5);

struct OdometryStats {
  std::size_t scans = 0;
  std::size_t imu_samples = 0;
  std::size_t keyframes = 0;
  std::size_t degraded = 0;
  std::size_t deskew_passthroughs = 0;
};

struct OdometryResult {
  std::vector<TrajectoryRecord> trajectory;
  std::vector<ScanTiming> timings;
  OdometryStats stats;
};

using ScanSource = std::function<std::optional<Scan>()>;
using ImuSource = std::function<std::optional<ImuSample>()>;

// Merges both streams by timestamp (scans keyed at t_end, IMU first on ties)
// and replays them through the pipeline. Throws StreamError naming the
// offending timestamps when either stream runs backwards.
OdometryResult run_odometry(OdometryPipeline& pipeline, ScanSource next_scan, ImuSource next_imu);

}  // namespace ftdf

#endif
