#ifndef FTDF_EKF_HPP
#define FTDF_EKF_HPP

#include <Eigen/Dense>
#include <deque>
#include <optional>

#include "ftdf/geometry.hpp"

namespace ftdf {

struct ImuSample {
  double t = 0.0;                                    // seconds
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();   // rad/s, body frame
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();   // m/s^2 specific force, body frame
};

// Registration pose plus derived velocity, fused as one 9-dim measurement.
struct PoseMeasurement {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double position_noise = 0.02;        // m, per axis
  double orientation_noise = 0.00872;  // rad, per axis
  double velocity_noise = 0.1;         // m/s, per axis
};

// Nominal state with a 15-dim error state (dp, dv, da_b, dtheta, dg_b).
// Orientation error is a right perturbation: q_true = q * exp(dtheta).
struct EkfState {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();
  Eigen::Matrix<double, 15, 15> P = Eigen::Matrix<double, 15, 15>::Identity();

  Pose pose() const { return Pose{p, q}; }
};

struct EkfConfig {
  double gyro_noise = 1e-3;      // rad/s/sqrt(Hz)
  double accel_noise = 1e-2;     // m/s^2/sqrt(Hz)
  double gyro_bias_rw = 1e-5;    // rad/s^2/sqrt(Hz)
  double accel_bias_rw = 1e-5;   // m/s^3/sqrt(Hz)
  double gravity = 9.81;         // m/s^2, world -z
  double max_imu_gap = 0.1;      // s, larger gaps are flagged
  // Initial error-state standard deviations.
  double init_position_std = 1e-4;
  double init_velocity_std = 0.1;
  double init_orientation_std = 0.05;
  double init_accel_bias_std = 0.1;
  double init_gyro_bias_std = 0.01;
};

// Ring of high-rate poses used for scan deskewing.
class PoseBuffer {
 public:
  struct Lookup {
    Pose pose;
    bool clamped = false;
  };

  void push(double t, const Pose& pose);
  void drop_before(double t);
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  bool covers(double t_start, double t_end) const;

  // Linear in translation, spherical in rotation between bracketing samples;
  // queries outside the span clamp to the nearest endpoint.
  Lookup pose_at(double t) const;

 private:
  std::deque<std::pair<double, Pose>> entries_;
};

// Error-state EKF over position, velocity, orientation and IMU biases.
class InertialEkf {
 public:
  explicit InertialEkf(const EkfConfig& config = {});

  // Sets the nominal state at time t with the given initial orientation.
  void initialize(double t, const Eigen::Quaterniond& orientation);

  bool initialized() const { return initialized_; }
  const EkfState& state() const { return state_; }
  const PoseBuffer& pose_buffer() const { return pose_buffer_; }
  PoseBuffer& pose_buffer() { return pose_buffer_; }

  // Integrates one IMU sample and propagates the covariance. Returns false
  // when the gap to the previous state exceeds max_imu_gap (the sample is
  // still integrated). Throws StreamError on non-monotone timestamps.
  bool predict(const ImuSample& sample);

  // 9-dim update (position, orientation error, velocity). Returns false and
  // leaves the state untouched when the measurement is not finite.
  bool update(const PoseMeasurement& measurement);

 private:
  EkfConfig config_;
  EkfState state_;
  PoseBuffer pose_buffer_;
  bool initialized_ = false;
};

// (p_curr - p_prev) / (t_curr - t_prev); throws ConfigError when dt <= 0.
Eigen::Vector3d velocity_from_poses(const Eigen::Vector3d& p_prev, double t_prev,
                                    const Eigen::Vector3d& p_curr, double t_curr);

// Roll/pitch from the time-averaged specific force at rest (yaw-free).
Eigen::Quaterniond orientation_from_gravity(const Eigen::Vector3d& mean_accel);

}  // namespace ftdf

#endif
