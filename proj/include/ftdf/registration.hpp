#ifndef FTDF_REGISTRATION_HPP
#define FTDF_REGISTRATION_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>

#include "ftdf/geometry.hpp"
#include "ftdf/grid.hpp"

namespace ftdf {

struct RegistrationConfig {
  double lambda = 1.0;                  // robust scale factor
  int max_iterations = 50;
  double translation_tolerance = 1e-4;  // m
  double rotation_tolerance = 1e-4;     // rad
  int min_valid_points = 100;
  int workers = 1;
};

enum class RegistrationStatus {
  kConverged,
  kMaxIterations,
  kNoValidPoints,  // fewer than min_valid_points landed inside the grid
  kDiverged,       // non-finite cost
};

struct RegistrationReport {
  Pose pose;
  int iterations = 0;
  double final_cost = 0.0;
  std::size_t valid_points = 0;
  std::size_t rejected_out_of_grid = 0;
  bool converged = false;
  RegistrationStatus status = RegistrationStatus::kConverged;
};

// Cauchy scale for a sensor-frame point: lambda * (0.1 + 0.1 * |p|).
// Grows with range so distant points are not starved by the robust loss.
inline double robust_scale(const Eigen::Vector3d& sensor_point, double lambda) {
  return lambda * (0.1 + 0.1 * sensor_point.norm());
}

struct CauchyLoss {
  double value;   // c^2 log(1 + s/c^2)
  double first;   // d value / d s
  double second;  // d^2 value / d s^2
};

// Robust loss over the squared residual s with scale c.
inline CauchyLoss cauchy_rho(double s, double c) {
  const double c2 = c * c;
  const double u = 1.0 + s / c2;
  return CauchyLoss{c2 * std::log(u), 1.0 / u, -1.0 / (c2 * u * u)};
}

struct ResidualEval {
  double value = 0.0;                                              // meters
  Eigen::Matrix<double, 1, 6> jacobian;                            // d r / d [dt, dtheta]
};

// Interpolated map distance of the transformed point plus its Jacobian with
// respect to the local pose perturbation (t + dt, q * exp(dtheta)).
// nullopt when the transformed point leaves the interpolable region.
std::optional<ResidualEval> evaluate_residual(const Eigen::Vector3d& point, const Pose& pose,
                                              const TdfGrid& grid);

// Levenberg-Marquardt over the 6-dim tangent space with per-point Cauchy
// reweighting. The initial pose is the EKF prediction; accepted steps never
// increase the robustified cost.
RegistrationReport register_cloud(std::span<const Eigen::Vector3d> cloud, const TdfGrid& grid,
                                  const Pose& initial, const RegistrationConfig& config);

}  // namespace ftdf

#endif
