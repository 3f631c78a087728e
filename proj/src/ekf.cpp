#include "ftdf/ekf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ftdf/errors.hpp"

namespace ftdf {

void PoseBuffer::push(double t, const Pose& pose) {
  if (!entries_.empty() && t <= entries_.back().first) {
    if (t == entries_.back().first) {
      entries_.back().second = pose;
      return;
    }
    throw StreamError("pose buffer timestamps must increase: got " + std::to_string(t) +
                      " after " + std::to_string(entries_.back().first));
  }
  entries_.emplace_back(t, pose);
}

void PoseBuffer::drop_before(double t) {
  // Keep one entry at or before t so interpolation at t still brackets.
  while (entries_.size() > 1 && entries_[1].first <= t) {
    entries_.pop_front();
  }
}

bool PoseBuffer::covers(double t_start, double t_end) const {
  if (entries_.empty()) return false;
  return entries_.front().first <= t_start && entries_.back().first >= t_end;
}

PoseBuffer::Lookup PoseBuffer::pose_at(double t) const {
  Lookup out;
  if (entries_.empty()) {
    out.clamped = true;
    return out;
  }
  if (t <= entries_.front().first) {
    out.pose = entries_.front().second;
    out.clamped = t < entries_.front().first;
    return out;
  }
  if (t >= entries_.back().first) {
    out.pose = entries_.back().second;
    out.clamped = t > entries_.back().first;
    return out;
  }
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), t,
      [](const std::pair<double, Pose>& e, double value) { return e.first < value; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double alpha = (t - lo.first) / (hi.first - lo.first);
  out.pose = interpolate_pose(lo.second, hi.second, alpha);
  return out;
}

InertialEkf::InertialEkf(const EkfConfig& config) : config_(config) {}

void InertialEkf::initialize(double t, const Eigen::Quaterniond& orientation) {
  state_ = EkfState{};
  state_.t = t;
  state_.q = orientation.normalized();
  Eigen::Matrix<double, 15, 1> diag;
  diag.segment<3>(0).setConstant(config_.init_position_std * config_.init_position_std);
  diag.segment<3>(3).setConstant(config_.init_velocity_std * config_.init_velocity_std);
  diag.segment<3>(6).setConstant(config_.init_accel_bias_std * config_.init_accel_bias_std);
  diag.segment<3>(9).setConstant(config_.init_orientation_std * config_.init_orientation_std);
  diag.segment<3>(12).setConstant(config_.init_gyro_bias_std * config_.init_gyro_bias_std);
  state_.P = diag.asDiagonal();
  pose_buffer_ = PoseBuffer{};
  pose_buffer_.push(t, state_.pose());
  initialized_ = true;
}

bool InertialEkf::predict(const ImuSample& sample) {
  if (!initialized_) {
    throw StreamError("predict called before the filter was initialized");
  }
  const double dt = sample.t - state_.t;
  if (dt <= 0.0) {
    throw StreamError("IMU timestamps must increase: got " + std::to_string(sample.t) +
                      " after state time " + std::to_string(state_.t));
  }

  const Eigen::Vector3d gravity(0.0, 0.0, -config_.gravity);
  const Eigen::Vector3d omega = sample.omega - state_.gyro_bias;
  const Eigen::Vector3d accel = sample.accel - state_.accel_bias;
  const Eigen::Matrix3d R = state_.q.toRotationMatrix();
  const Eigen::Vector3d accel_world = R * accel + gravity;

  // Nominal state, first order per sample.
  state_.p += state_.v * dt + (0.5 * dt * dt) * accel_world;
  state_.v += accel_world * dt;
  state_.q = (state_.q * exp_so3(omega * dt)).normalized();
  state_.t = sample.t;

  // Error-state transition.
  Eigen::Matrix<double, 15, 15> F = Eigen::Matrix<double, 15, 15>::Identity();
  F.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity() * dt;
  F.block<3, 3>(3, 9) = -R * skew(accel) * dt;
  F.block<3, 3>(3, 6) = -R * dt;
  F.block<3, 3>(9, 9) = exp_so3(omega * dt).toRotationMatrix().transpose();
  F.block<3, 3>(9, 12) = -Eigen::Matrix3d::Identity() * dt;

  state_.P = F * state_.P * F.transpose();
  const double v_var = config_.accel_noise * config_.accel_noise * dt;
  const double th_var = config_.gyro_noise * config_.gyro_noise * dt;
  const double ab_var = config_.accel_bias_rw * config_.accel_bias_rw * dt;
  const double gb_var = config_.gyro_bias_rw * config_.gyro_bias_rw * dt;
  for (int i = 0; i < 3; ++i) {
    state_.P(3 + i, 3 + i) += v_var;
    state_.P(6 + i, 6 + i) += ab_var;
    state_.P(9 + i, 9 + i) += th_var;
    state_.P(12 + i, 12 + i) += gb_var;
  }
  state_.P = (0.5 * (state_.P + state_.P.transpose())).eval();

  pose_buffer_.push(state_.t, state_.pose());
  return dt <= config_.max_imu_gap;
}

bool InertialEkf::update(const PoseMeasurement& measurement) {
  if (!initialized_) {
    throw StreamError("update called before the filter was initialized");
  }
  if (!measurement.position.allFinite() || !measurement.velocity.allFinite() ||
      !measurement.orientation.coeffs().allFinite()) {
    return false;
  }

  Eigen::Matrix<double, 9, 1> innovation;
  innovation.segment<3>(0) = measurement.position - state_.p;
  innovation.segment<3>(3) = log_so3(state_.q.conjugate() * measurement.orientation);
  innovation.segment<3>(6) = measurement.velocity - state_.v;

  Eigen::Matrix<double, 9, 15> H = Eigen::Matrix<double, 9, 15>::Zero();
  H.block<3, 3>(0, 0) = Eigen::Matrix3d::Identity();
  H.block<3, 3>(3, 9) = Eigen::Matrix3d::Identity();
  H.block<3, 3>(6, 3) = Eigen::Matrix3d::Identity();

  Eigen::Matrix<double, 9, 9> noise = Eigen::Matrix<double, 9, 9>::Zero();
  noise.block<3, 3>(0, 0) =
      Eigen::Matrix3d::Identity() * measurement.position_noise * measurement.position_noise;
  noise.block<3, 3>(3, 3) =
      Eigen::Matrix3d::Identity() * measurement.orientation_noise * measurement.orientation_noise;
  noise.block<3, 3>(6, 6) =
      Eigen::Matrix3d::Identity() * measurement.velocity_noise * measurement.velocity_noise;

  const Eigen::Matrix<double, 9, 9> S = H * state_.P * H.transpose() + noise;
  const Eigen::Matrix<double, 15, 9> K = state_.P * H.transpose() * S.inverse();
  const Eigen::Matrix<double, 15, 1> dx = K * innovation;

  state_.p += dx.segment<3>(0);
  state_.v += dx.segment<3>(3);
  state_.accel_bias += dx.segment<3>(6);
  state_.q = (state_.q * exp_so3(dx.segment<3>(9))).normalized();
  state_.gyro_bias += dx.segment<3>(12);

  const Eigen::Matrix<double, 15, 15> IKH = Eigen::Matrix<double, 15, 15>::Identity() - K * H;
  state_.P = IKH * state_.P * IKH.transpose() + K * noise * K.transpose();
  state_.P = (0.5 * (state_.P + state_.P.transpose())).eval();
  return true;
}

Eigen::Vector3d velocity_from_poses(const Eigen::Vector3d& p_prev, double t_prev,
                                    const Eigen::Vector3d& p_curr, double t_curr) {
  const double dt = t_curr - t_prev;
  if (dt <= 0.0) {
    throw ConfigError("velocity requires t_curr > t_prev, got dt = " + std::to_string(dt));
  }
  return (p_curr - p_prev) / dt;
}

Eigen::Quaterniond orientation_from_gravity(const Eigen::Vector3d& mean_accel) {
  if (mean_accel.norm() < 1e-9) return Eigen::Quaterniond::Identity();
  // At rest the accelerometer reads +g along body up; align it with world +z.
  return Eigen::Quaterniond::FromTwoVectors(mean_accel, Eigen::Vector3d::UnitZ()).normalized();
}

}  // namespace ftdf
