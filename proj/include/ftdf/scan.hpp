#ifndef FTDF_SCAN_HPP
#define FTDF_SCAN_HPP

#include <Eigen/Dense>
#include <vector>

namespace ftdf {

// One LiDAR sweep in the sensor frame. time_offsets, when present, give each
// point's acquisition time relative to t_start and match points in size.
struct Scan {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<Eigen::Vector3d> points;
  std::vector<float> time_offsets;

  bool has_point_times() const { return !time_offsets.empty(); }
};

}  // namespace ftdf

#endif
