#include "ftdf/registration.hpp"

#include <cmath>
#include <vector>

#include "ftdf/parallel.hpp"

namespace ftdf {

std::optional<ResidualEval> evaluate_residual(const Eigen::Vector3d& point, const Pose& pose,
                                              const TdfGrid& grid) {
  const Eigen::Vector3d world = pose.apply(point);
  const auto dg = grid.distance_and_gradient_at(world);
  if (!dg) return std::nullopt;

  ResidualEval out;
  out.value = dg->distance;
  // world = R exp(dtheta) p + t + dt, so d world / d dt = I and
  // d world / d dtheta = -R [p]x.
  out.jacobian.block<1, 3>(0, 0) = dg->gradient.transpose();
  out.jacobian.block<1, 3>(0, 3) =
      -dg->gradient.transpose() * pose.rotation.toRotationMatrix() * skew(point);
  return out;
}

namespace {

struct Evaluation {
  double cost = 0.0;
  std::size_t valid = 0;
  std::size_t rejected = 0;
  Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
};

// Per-point results land in pre-sized arrays and the normal equations are
// accumulated in point order afterwards, so the worker count never changes
// the sums.
Evaluation evaluate_cloud(std::span<const Eigen::Vector3d> cloud, const TdfGrid& grid,
                          const Pose& pose, const std::vector<double>& scales, int workers,
                          bool with_derivatives) {
  const std::size_t n = cloud.size();
  std::vector<ResidualEval> evals(n);
  std::vector<char> valid_flags(n, 0);
  ResidualEval* const evals_ptr = evals.data();
  char* const flags_ptr = valid_flags.data();

  parallel_chunks(n, workers, [&, evals_ptr, flags_ptr](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = evaluate_residual(cloud[i], pose, grid);
      if (r) {
        evals_ptr[i] = *r;
        flags_ptr[i] = 1;
      }
    }
  });

  Evaluation out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid_flags[i]) {
      ++out.rejected;
      continue;
    }
    ++out.valid;
    const double r = evals[i].value;
    const CauchyLoss rho = cauchy_rho(r * r, scales[i]);
    out.cost += rho.value;
    if (with_derivatives) {
      const double w = rho.first;
      out.H.noalias() += w * evals[i].jacobian.transpose() * evals[i].jacobian;
      out.g.noalias() += (w * r) * evals[i].jacobian.transpose();
    }
  }
  return out;
}

Pose retract(const Pose& pose, const Eigen::Matrix<double, 6, 1>& delta) {
  Pose out;
  out.translation = pose.translation + delta.head<3>();
  out.rotation = (pose.rotation * exp_so3(delta.tail<3>())).normalized();
  return out;
}

}  // namespace

RegistrationReport register_cloud(std::span<const Eigen::Vector3d> cloud, const TdfGrid& grid,
                                  const Pose& initial, const RegistrationConfig& config) {
  RegistrationReport report;
  report.pose = initial;
  report.pose.rotation.normalize();

  std::vector<double> scales(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    scales[i] = robust_scale(cloud[i], config.lambda);
  }

  Evaluation current =
      evaluate_cloud(cloud, grid, report.pose, scales, config.workers, true);
  report.valid_points = current.valid;
  report.rejected_out_of_grid = current.rejected;
  if (current.valid < static_cast<std::size_t>(config.min_valid_points)) {
    report.status = RegistrationStatus::kNoValidPoints;
    report.final_cost = current.cost;
    return report;
  }

  double mu = 1e-6 * std::max(1.0, current.H.diagonal().maxCoeff());
  report.status = RegistrationStatus::kMaxIterations;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    report.iterations = iter + 1;
    if (!std::isfinite(current.cost)) {
      report.status = RegistrationStatus::kDiverged;
      break;
    }

    Eigen::Matrix<double, 6, 6> damped = current.H;
    Eigen::Matrix<double, 6, 6> diag = current.H.diagonal().cwiseMax(1e-12).asDiagonal();
    damped += mu * diag;

    const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(-current.g);
    if (!delta.allFinite()) {
      report.status = RegistrationStatus::kDiverged;
      break;
    }

    const Pose candidate = retract(report.pose, delta);
    const Evaluation next =
        evaluate_cloud(cloud, grid, candidate, scales, config.workers, true);

    if (next.cost <= current.cost && std::isfinite(next.cost)) {
      report.pose = candidate;
      current = next;
      report.valid_points = next.valid;
      report.rejected_out_of_grid = next.rejected;
      mu = std::max(mu / 3.0, 1e-12);
      if (delta.head<3>().norm() < config.translation_tolerance &&
          delta.tail<3>().norm() < config.rotation_tolerance) {
        report.status = RegistrationStatus::kConverged;
        report.converged = true;
        break;
      }
    } else {
      mu *= 4.0;
      if (mu > 1e12) {
        // Damping has collapsed the step; treat the current pose as final.
        report.status = RegistrationStatus::kConverged;
        report.converged = true;
        break;
      }
    }
  }

  report.final_cost = current.cost;
  return report;
}

}  // namespace ftdf
