#include "ftdf/registration.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "support/synthetic.hpp"

namespace ftdf {
namespace {

TEST(RobustScale, GrowsLinearlyWithRange) {
  EXPECT_NEAR(robust_scale(Eigen::Vector3d::Zero(), 1.0), 0.1, 1e-12);
  EXPECT_NEAR(robust_scale(Eigen::Vector3d(3, 4, 0), 1.0), 0.1 + 0.1 * 5.0, 1e-12);
  EXPECT_NEAR(robust_scale(Eigen::Vector3d(3, 4, 0), 2.0), 2.0 * (0.1 + 0.5), 1e-12);
}

TEST(CauchyLoss, DerivativesMatchFiniteDifferences) {
  const double c = 0.4;
  for (double s : {0.0, 0.01, 0.09, 0.5, 2.0}) {
    const double h = 1e-7;
    const CauchyLoss at = cauchy_rho(s, c);
    const CauchyLoss hi = cauchy_rho(s + h, c);
    const CauchyLoss lo = cauchy_rho(std::max(0.0, s - h), c);
    const double fd_first = (hi.value - lo.value) / (s - h < 0.0 ? h : 2.0 * h);
    EXPECT_NEAR(at.first, fd_first, 1e-5);
    if (s > h) {
      const double fd_second = (hi.first - lo.first) / (2.0 * h);
      EXPECT_NEAR(at.second, fd_second, 1e-5);
    }
    EXPECT_GT(at.first, 0.0);   // weights stay positive
    EXPECT_LE(at.first, 1.0);   // and never exceed the unweighted case
  }
}

class ResidualFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    grid_ = std::make_unique<TdfGrid>(Eigen::Vector3d(-2.0, -2.0, -2.0), 0.05, 80, 80, 80, 32);
    const BinaryKernel kernel(8, 32);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<Eigen::Vector3d> cloud;
    for (int i = 0; i < 60; ++i) cloud.emplace_back(u(rng), u(rng), u(rng));
    grid_->insert_cloud(kernel, cloud);
  }

  // True when every finite-difference sample stays strictly inside one
  // interpolation cell, away from the kinks at cell-center planes.
  bool clear_of_planes(const Eigen::Vector3d& p, double margin) const {
    const Eigen::Vector3d frac = ((p - grid_->origin()) / grid_->resolution()).array() - 0.5;
    for (int a = 0; a < 3; ++a) {
      const double f = frac[a] - std::floor(frac[a]);
      if (f < margin || f > 1.0 - margin) return false;
    }
    return true;
  }

  std::unique_ptr<TdfGrid> grid_;
};

TEST_F(ResidualFixture, ValueIsInterpolatedDistanceAtTransformedPoint) {
  Pose pose;
  pose.translation = Eigen::Vector3d(0.3, -0.2, 0.1);
  pose.rotation = exp_so3(Eigen::Vector3d(0.1, 0.05, -0.2));
  const Eigen::Vector3d p(0.4, 0.6, -0.3);
  const auto eval = evaluate_residual(p, pose, *grid_);
  ASSERT_TRUE(eval.has_value());
  EXPECT_NEAR(eval->value, *grid_->distance_at(pose.apply(p)), 1e-15);
}

TEST_F(ResidualFixture, OutOfGridPointIsRejected) {
  Pose pose;
  pose.translation = Eigen::Vector3d(10.0, 0.0, 0.0);
  EXPECT_FALSE(evaluate_residual(Eigen::Vector3d(0, 0, 0), pose, *grid_).has_value());
}

TEST_F(ResidualFixture, JacobianMatchesFiniteDifferences) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> up(-1.2, 1.2);
  std::uniform_real_distribution<double> ut(-0.2, 0.2);
  std::uniform_real_distribution<double> ur(-0.05, 0.05);
  const double h = 1e-7;
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 60; ++trial) {
    Pose pose;
    pose.translation = Eigen::Vector3d(ut(rng), ut(rng), ut(rng));
    pose.rotation = exp_so3(Eigen::Vector3d(ur(rng), ur(rng), ur(rng)));
    const Eigen::Vector3d point(up(rng), up(rng), up(rng));
    if (!clear_of_planes(pose.apply(point), 1e-3)) continue;

    const auto eval = evaluate_residual(point, pose, *grid_);
    if (!eval) continue;
    bool ok = true;
    Eigen::Matrix<double, 1, 6> fd;
    for (int a = 0; a < 6 && ok; ++a) {
      Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
      delta[a] = h;
      const auto retract = [&](double sign) {
        Pose perturbed;
        perturbed.translation = pose.translation + sign * delta.head<3>();
        perturbed.rotation = pose.rotation * exp_so3(sign * delta.tail<3>());
        return evaluate_residual(point, perturbed, *grid_);
      };
      const auto plus = retract(1.0);
      const auto minus = retract(-1.0);
      if (!plus || !minus) {
        ok = false;
        break;
      }
      fd[a] = (plus->value - minus->value) / (2.0 * h);
    }
    if (!ok) continue;
    for (int a = 0; a < 6; ++a) {
      const double scale = std::max({1.0, std::abs(eval->jacobian[a]), std::abs(fd[a])});
      EXPECT_LT(std::abs(eval->jacobian[a] - fd[a]) / scale, 1e-5)
          << "component " << a << ": " << eval->jacobian[a] << " vs " << fd[a];
    }
    ++checked;
  }
  EXPECT_GE(checked, 60);
}

TEST(RegisterCloud, RecoversPerturbedPoseInThreeWallRoom) {
  std::mt19937 rng(21);
  TdfGrid grid(Eigen::Vector3d(-5.5, -5.5, -1.7), 0.05, 220, 220, 110, 32);
  const BinaryKernel kernel(10, 32);
  const auto map_points = test::tilted_room_points(60000, 4.0, 2.5, rng);
  grid.insert_cloud(kernel, map_points);

  const auto scan = test::tilted_room_points(5000, 4.0, 2.5, rng);
  RegistrationConfig config;
  std::uniform_real_distribution<double> ut(-0.15, 0.15);
  std::uniform_real_distribution<double> ur(-0.03, 0.03);
  for (int trial = 0; trial < 5; ++trial) {
    Pose initial;
    initial.translation = Eigen::Vector3d(ut(rng), ut(rng), ut(rng));
    initial.rotation = exp_so3(Eigen::Vector3d(ur(rng), ur(rng), ur(rng)));
    const RegistrationReport report = register_cloud(scan, grid, initial, config);
    EXPECT_TRUE(report.status == RegistrationStatus::kConverged ||
                report.status == RegistrationStatus::kMaxIterations);
    EXPECT_LT(report.pose.translation.norm(), 0.03) << "trial " << trial;
    EXPECT_LT(log_so3(report.pose.rotation).norm() * 180.0 / std::numbers::pi, 0.5)
        << "trial " << trial;
    EXPECT_GT(report.valid_points, 4000u);
  }
}

TEST(RegisterCloud, FailsCleanlyWithoutValidPoints) {
  TdfGrid grid(Eigen::Vector3d::Zero(), 0.05, 40, 40, 40, 16);
  std::vector<Eigen::Vector3d> cloud = {{50.0, 50.0, 50.0}, {60.0, 0.0, 0.0}};
  const RegistrationReport report = register_cloud(cloud, grid, Pose{}, RegistrationConfig{});
  EXPECT_EQ(report.status, RegistrationStatus::kNoValidPoints);
  EXPECT_FALSE(report.converged);
  EXPECT_EQ(report.valid_points, 0u);
  EXPECT_EQ(report.rejected_out_of_grid, 2u);
}

TEST(RegisterCloud, CountsPointsLeavingTheGrid) {
  std::mt19937 rng(31);
  TdfGrid grid(Eigen::Vector3d(-5.0, -5.0, -1.0), 0.05, 200, 200, 80, 32);
  const BinaryKernel kernel(8, 32);
  const auto map_points = test::three_wall_points(20000, 4.0, 2.5, rng);
  grid.insert_cloud(kernel, map_points);
  auto scan = test::three_wall_points(500, 4.0, 2.5, rng);
  scan.push_back(Eigen::Vector3d(100.0, 0.0, 0.0));  // always outside
  RegistrationConfig config;
  config.min_valid_points = 100;
  const RegistrationReport report = register_cloud(scan, grid, Pose{}, config);
  EXPECT_GE(report.rejected_out_of_grid, 1u);
  EXPECT_GT(report.valid_points, 400u);
}

TEST(RegisterCloud, WorkerCountDoesNotChangeTheResult) {
  std::mt19937 rng(41);
  TdfGrid grid(Eigen::Vector3d(-5.0, -5.0, -1.0), 0.05, 200, 200, 80, 32);
  const BinaryKernel kernel(10, 32);
  grid.insert_cloud(kernel, test::three_wall_points(30000, 4.0, 2.5, rng));
  const auto scan = test::three_wall_points(3000, 4.0, 2.5, rng);
  Pose initial;
  initial.translation = Eigen::Vector3d(0.08, -0.05, 0.04);

  RegistrationConfig config;
  config.workers = 1;
  const RegistrationReport serial = register_cloud(scan, grid, initial, config);
  config.workers = 4;
  const RegistrationReport parallel = register_cloud(scan, grid, initial, config);
  EXPECT_EQ(serial.iterations, parallel.iterations);
  EXPECT_EQ(serial.pose.translation, parallel.pose.translation);
  EXPECT_EQ(serial.pose.rotation.coeffs(), parallel.pose.rotation.coeffs());
  EXPECT_EQ(serial.final_cost, parallel.final_cost);
}

TEST(RegisterCloud, StartingAtTheOptimumConvergesImmediately) {
  std::mt19937 rng(51);
  TdfGrid grid(Eigen::Vector3d(-5.5, -5.5, -1.7), 0.05, 220, 220, 110, 32);
  const BinaryKernel kernel(10, 32);
  grid.insert_cloud(kernel, test::tilted_room_points(30000, 4.0, 2.5, rng));
  const auto scan = test::tilted_room_points(2000, 4.0, 2.5, rng);
  const RegistrationReport report = register_cloud(scan, grid, Pose{}, RegistrationConfig{});
  EXPECT_EQ(report.status, RegistrationStatus::kConverged);
  EXPECT_LT(report.pose.translation.norm(), 0.01);
  EXPECT_LT(report.iterations, 15);
}

}  // namespace
}  // namespace ftdf
