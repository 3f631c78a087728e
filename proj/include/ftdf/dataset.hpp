#ifndef FTDF_DATASET_HPP
#define FTDF_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ftdf/ekf.hpp"
#include "ftdf/geometry.hpp"
#include "ftdf/scan.hpp"

namespace ftdf {

struct TrajectoryRecord {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
};

// Paths plus the sensor-to-body rigid transform applied at ingestion.
struct DatasetManifest {
  std::string scan_path;
  std::string imu_path;
  std::string ground_truth_path;  // optional, empty when absent
  Pose lidar_to_imu;
  double time_offset = 0.0;  // seconds added to scan timestamps
};

// Reads a manifest in key = value syntax; relative paths are resolved
// against the manifest's directory.
DatasetManifest load_manifest(const std::string& path);

// --- Scan binary format ------------------------------------------------
//
// Little-endian records: magic "FTSC", u64 point count, f64 t_start,
// f64 t_end, u32 flags (bit 0: per-point time offsets), u32 reserved,
// then per point f32 x, y, z [, f32 time offset]. A file may hold several
// consecutive records; a directory holds *.ftsc files.

void write_scan(std::ofstream& out, const Scan& scan, const std::string& path);
void write_scan_file(const std::string& path, const Scan& scan);

// Streams scans in t_start order from a file or directory of .ftsc files.
class ScanReader {
 public:
  explicit ScanReader(const std::string& path, const Pose& extrinsic = Pose::identity(),
                      double time_offset = 0.0);
  ~ScanReader();
  ScanReader(ScanReader&&) noexcept;
  ScanReader& operator=(ScanReader&&) noexcept;

  std::optional<Scan> next();
  std::size_t total() const { return records_.size(); }

 private:
  struct Record {
    std::string file;
    std::uint64_t offset;
    double t_start;
  };
  Scan read_record(const Record& record);

  std::vector<Record> records_;
  std::size_t cursor_ = 0;
  Pose extrinsic_;
  double time_offset_ = 0.0;
  std::string open_file_;
  std::unique_ptr<std::ifstream> stream_;
};

std::vector<Scan> read_scans(const std::string& path, const Pose& extrinsic = Pose::identity(),
                             double time_offset = 0.0);

// --- IMU CSV ------------------------------------------------------------
//
// Columns t, wx, wy, wz, ax, ay, az (SI units), comma or whitespace
// separated, optional header line.

class ImuReader {
 public:
  explicit ImuReader(const std::string& path);

  std::optional<ImuSample> next();

 private:
  std::string path_;
  std::ifstream stream_;
  int line_number_ = 0;
  bool have_last_t_ = false;
  double last_t_ = 0.0;
};

std::vector<ImuSample> read_imu(const std::string& path);

// --- Trajectories ---------------------------------------------------------

// One line per record: "t x y z qx qy qz qw", full round-trip precision.
void write_trajectory(std::span<const TrajectoryRecord> records, const std::string& path);
std::vector<TrajectoryRecord> read_trajectory(const std::string& path);

// --- Absolute translation error -------------------------------------------

struct AteResult {
  double rmse = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  Eigen::Vector3d axis_rmse = Eigen::Vector3d::Zero();
  std::size_t pairs = 0;
  std::vector<double> errors;  // per associated pose, meters
  Pose alignment;              // rigid transform applied to the estimate
};

// Associates poses by nearest timestamp (within max_dt), removes the best
// rigid transform, and reports translational error statistics. Throws
// InsufficientOverlapError with fewer than 3 associations.
AteResult evaluate_ate(std::span<const TrajectoryRecord> estimate,
                       std::span<const TrajectoryRecord> ground_truth, double max_dt = 0.02);

}  // namespace ftdf

#endif
