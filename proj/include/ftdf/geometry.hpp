#ifndef FTDF_GEOMETRY_HPP
#define FTDF_GEOMETRY_HPP

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

namespace ftdf {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

// Quaternion exponential of a rotation vector (axis * angle).
inline Eigen::Quaterniond exp_so3(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) {
    // sin(t/2)/t -> 1/2 as t -> 0
    Eigen::Quaterniond q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
    q.normalize();
    return q;
  }
  const double half = 0.5 * theta;
  const double s = std::sin(half) / theta;
  return Eigen::Quaterniond(std::cos(half), s * omega.x(), s * omega.y(), s * omega.z());
}

// Rotation vector of a unit quaternion, angle in [0, pi].
inline Eigen::Vector3d log_so3(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d v(q.x(), q.y(), q.z());
  const double sin_half = v.norm();
  if (sin_half < 1e-12) return 2.0 * v;
  const double angle = 2.0 * std::atan2(sin_half, q.w());
  return (angle / sin_half) * v;
}

// Rigid transform: world point = rotation * local point + translation.
struct Pose {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  static Pose identity() { return Pose{}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  Pose compose(const Pose& other) const {
    Pose out;
    out.rotation = (rotation * other.rotation).normalized();
    out.translation = rotation * other.translation + translation;
    return out;
  }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
  }
};

// Geodesic rotation angle between two poses, radians.
inline double rotation_angle_between(const Pose& a, const Pose& b) {
  return log_so3(a.rotation.conjugate() * b.rotation).norm();
}

// Linear in translation, spherical in rotation; alpha in [0, 1].
inline Pose interpolate_pose(const Pose& a, const Pose& b, double alpha) {
  Pose out;
  out.translation = (1.0 - alpha) * a.translation + alpha * b.translation;
  out.rotation = a.rotation.slerp(alpha, b.rotation).normalized();
  return out;
}

}  // namespace ftdf

#endif
