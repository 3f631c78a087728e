#include "ftdf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "ftdf/config.hpp"
#include "ftdf/errors.hpp"

namespace ftdf {

namespace fs = std::filesystem;

namespace {

std::string resolve_relative(const std::string& value, const fs::path& base_dir) {
  if (value.empty()) return value;
  fs::path p(value);
  if (p.is_absolute()) return p.string();
  return (base_dir / p).lexically_normal().string();
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  const KeyValueConfig cfg = KeyValueConfig::from_file(path);
  const fs::path base_dir = fs::path(path).parent_path();

  DatasetManifest m;
  m.scan_path = resolve_relative(cfg.require_string("scans"), base_dir);
  m.imu_path = resolve_relative(cfg.require_string("imu"), base_dir);
  m.ground_truth_path = resolve_relative(cfg.get_string("ground_truth", ""), base_dir);
  m.time_offset = cfg.get_double("time_offset", 0.0);
  m.lidar_to_imu.translation = cfg.get_vector3("extrinsic_translation", Eigen::Vector3d::Zero());
  const Eigen::Vector3d rpy = cfg.get_vector3("extrinsic_rpy", Eigen::Vector3d::Zero());
  m.lidar_to_imu.rotation = Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX());
  return m;
}

// --- Scan binary format ----------------------------------------------------

namespace {

constexpr char kScanMagic[4] = {'F', 'T', 'S', 'C'};
constexpr std::uint32_t kScanFlagPointTimes = 1u;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_raw(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return static_cast<bool>(in);
}

[[noreturn]] void throw_truncated(const std::string& path, std::uint64_t offset,
                                  const char* field) {
  throw ParseError(path + ": truncated scan record, failed reading " + std::string(field) +
                   " at byte offset " + std::to_string(offset));
}

struct ScanHeader {
  std::uint64_t count = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::uint32_t flags = 0;

  bool per_point_times() const { return (flags & kScanFlagPointTimes) != 0; }
  std::uint64_t payload_bytes() const {
    return count * sizeof(float) * (per_point_times() ? 4 : 3);
  }
};

constexpr std::uint64_t kScanHeaderBytes = 4 + 8 + 8 + 8 + 4 + 4;

// Reads one record header at the current stream position. Returns false on a
// clean end of file; throws on anything malformed.
bool read_scan_header(std::ifstream& in, const std::string& path, std::uint64_t offset,
                      ScanHeader& header) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() == 0 && in.eof()) return false;
  if (in.gcount() != 4 || std::memcmp(magic, kScanMagic, 4) != 0) {
    throw ParseError(path + ": bad magic at byte offset " + std::to_string(offset) +
                     ", expected \"FTSC\"");
  }
  if (!read_raw(in, header.count)) throw_truncated(path, offset + 4, "point count");
  if (!read_raw(in, header.t_start)) throw_truncated(path, offset + 12, "t_start");
  if (!read_raw(in, header.t_end)) throw_truncated(path, offset + 20, "t_end");
  if (!read_raw(in, header.flags)) throw_truncated(path, offset + 28, "flags");
  std::uint32_t reserved = 0;
  if (!read_raw(in, reserved)) throw_truncated(path, offset + 32, "reserved");
  if (header.t_end < header.t_start) {
    throw ParseError(path + ": record at byte offset " + std::to_string(offset) +
                     " has t_end before t_start");
  }
  return true;
}

}  // namespace

void write_scan(std::ofstream& out, const Scan& scan, const std::string& path) {
  const bool with_times = scan.has_point_times();
  if (with_times && scan.time_offsets.size() != scan.points.size()) {
    throw IoError(path + ": scan has " + std::to_string(scan.points.size()) + " points but " +
                  std::to_string(scan.time_offsets.size()) + " time offsets");
  }
  out.write(kScanMagic, 4);
  write_raw(out, static_cast<std::uint64_t>(scan.points.size()));
  write_raw(out, scan.t_start);
  write_raw(out, scan.t_end);
  write_raw(out, with_times ? kScanFlagPointTimes : std::uint32_t{0});
  write_raw(out, std::uint32_t{0});
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const Eigen::Vector3f p = scan.points[i].cast<float>();
    write_raw(out, p.x());
    write_raw(out, p.y());
    write_raw(out, p.z());
    if (with_times) write_raw(out, scan.time_offsets[i]);
  }
  if (!out) throw IoError("short write to " + path);
}

void write_scan_file(const std::string& path, const Scan& scan) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_scan(out, scan, path);
}

ScanReader::ScanReader(const std::string& path, const Pose& extrinsic, double time_offset)
    : extrinsic_(extrinsic), time_offset_(time_offset) {
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ftsc") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    // An existing directory with no scans is a valid empty stream.
  } else if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else {
    throw IoError(path + ": not a file or directory");
  }

  // Index every record up front so scans can be served in time order even
  // when files interleave.
  for (const std::string& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file);
    const std::uint64_t file_size = fs::file_size(file);
    std::uint64_t offset = 0;
    ScanHeader header;
    while (read_scan_header(in, file, offset, header)) {
      const std::uint64_t end = offset + kScanHeaderBytes + header.payload_bytes();
      if (end > file_size) {
        throw ParseError(file + ": truncated scan payload, record at byte offset " +
                         std::to_string(offset) + " promises " +
                         std::to_string(header.payload_bytes()) + " payload bytes but the file ends " +
                         std::to_string(end - file_size) + " bytes short");
      }
      records_.push_back(Record{file, offset, header.t_start + time_offset_});
      offset = end;
      in.seekg(static_cast<std::streamoff>(offset), std::ios::beg);
      in.peek();  // force eof detection before the next header read
    }
  }
  std::stable_sort(records_.begin(), records_.end(),
                   [](const Record& a, const Record& b) { return a.t_start < b.t_start; });
}

ScanReader::~ScanReader() = default;
ScanReader::ScanReader(ScanReader&&) noexcept = default;
ScanReader& ScanReader::operator=(ScanReader&&) noexcept = default;

Scan ScanReader::read_record(const Record& record) {
  if (!stream_ || open_file_ != record.file) {
    stream_ = std::make_unique<std::ifstream>(record.file, std::ios::binary);
    if (!*stream_) throw IoError("cannot open " + record.file);
    open_file_ = record.file;
  }
  stream_->clear();
  stream_->seekg(static_cast<std::streamoff>(record.offset), std::ios::beg);
  ScanHeader header;
  if (!read_scan_header(*stream_, record.file, record.offset, header)) {
    throw ParseError(record.file + ": record vanished at byte offset " +
                     std::to_string(record.offset));
  }

  Scan scan;
  scan.t_start = header.t_start + time_offset_;
  scan.t_end = header.t_end + time_offset_;
  scan.points.resize(header.count);
  if (header.per_point_times()) scan.time_offsets.resize(header.count);

  const std::size_t floats_per_point = header.per_point_times() ? 4 : 3;
  std::vector<float> row(floats_per_point);
  for (std::uint64_t i = 0; i < header.count; ++i) {
    stream_->read(reinterpret_cast<char*>(row.data()),
                  static_cast<std::streamsize>(floats_per_point * sizeof(float)));
    if (!*stream_) {
      throw ParseError(record.file + ": truncated scan payload at byte offset " +
                       std::to_string(record.offset + kScanHeaderBytes +
                                      i * floats_per_point * sizeof(float)));
    }
    const Eigen::Vector3d raw(row[0], row[1], row[2]);
    scan.points[i] = extrinsic_.apply(raw);
    if (header.per_point_times()) scan.time_offsets[i] = row[3];
  }
  return scan;
}

std::optional<Scan> ScanReader::next() {
  if (cursor_ >= records_.size()) return std::nullopt;
  return read_record(records_[cursor_++]);
}

std::vector<Scan> read_scans(const std::string& path, const Pose& extrinsic, double time_offset) {
  ScanReader reader(path, extrinsic, time_offset);
  std::vector<Scan> scans;
  scans.reserve(reader.total());
  while (auto scan = reader.next()) scans.push_back(std::move(*scan));
  return scans;
}

// --- IMU CSV -----------------------------------------------------------------

ImuReader::ImuReader(const std::string& path) : path_(path), stream_(path) {
  if (!stream_) throw IoError("cannot open " + path);
}

std::optional<ImuSample> ImuReader::next() {
  std::string line;
  while (std::getline(stream_, line)) {
    ++line_number_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t\r")] == '#') continue;
    // Normalize separators so both CSV and whitespace columns parse.
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double v[7];
    bool ok = true;
    for (double& value : v) {
      if (!(row >> value)) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      if (line_number_ == 1) continue;  // header line
      throw ParseError(path_ + ":" + std::to_string(line_number_) +
                       ": expected 7 numeric columns (t wx wy wz ax ay az)");
    }
    if (have_last_t_ && v[0] <= last_t_) {
      throw StreamError(path_ + ":" + std::to_string(line_number_) +
                        ": timestamp not strictly increasing (" + std::to_string(v[0]) +
                        " after " + std::to_string(last_t_) + ")");
    }
    last_t_ = v[0];
    have_last_t_ = true;
    ImuSample sample;
    sample.t = v[0];
    sample.omega = Eigen::Vector3d(v[1], v[2], v[3]);
    sample.accel = Eigen::Vector3d(v[4], v[5], v[6]);
    return sample;
  }
  return std::nullopt;
}

std::vector<ImuSample> read_imu(const std::string& path) {
  ImuReader reader(path);
  std::vector<ImuSample> samples;
  while (auto sample = reader.next()) samples.push_back(*sample);
  return samples;
}

// --- Trajectories -------------------------------------------------------------

void write_trajectory(std::span<const TrajectoryRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char line[512];
  for (const TrajectoryRecord& r : records) {
    std::snprintf(line, sizeof(line), "%.9f %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", r.t,
                  r.p.x(), r.p.y(), r.p.z(), r.q.x(), r.q.y(), r.q.z(), r.q.w());
    out << line;
  }
  if (!out) throw IoError("short write to " + path);
}

std::vector<TrajectoryRecord> read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<TrajectoryRecord> records;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    TrajectoryRecord r;
    double qx, qy, qz, qw;
    if (!(row >> r.t >> r.p.x() >> r.p.y() >> r.p.z() >> qx >> qy >> qz >> qw)) {
      throw ParseError(path + ":" + std::to_string(line_number) +
                       ": expected 8 columns (t x y z qx qy qz qw)");
    }
    r.q = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
    records.push_back(r);
  }
  return records;
}

// --- Absolute translation error ------------------------------------------------

AteResult evaluate_ate(std::span<const TrajectoryRecord> estimate,
                       std::span<const TrajectoryRecord> ground_truth, double max_dt) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t gt_cursor = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double t = estimate[i].t;
    while (gt_cursor + 1 < ground_truth.size() && ground_truth[gt_cursor + 1].t <= t) ++gt_cursor;
    // gt_cursor is now the last record at or before t; its successor may be
    // closer.
    std::size_t best = gt_cursor;
    if (gt_cursor + 1 < ground_truth.size() &&
        std::abs(ground_truth[gt_cursor + 1].t - t) < std::abs(ground_truth[gt_cursor].t - t)) {
      best = gt_cursor + 1;
    }
    if (!ground_truth.empty() && std::abs(ground_truth[best].t - t) <= max_dt) {
      pairs.emplace_back(i, best);
    }
  }
  if (pairs.size() < 3) {
    throw InsufficientOverlapError("only " + std::to_string(pairs.size()) +
                                   " timestamp associations within " + std::to_string(max_dt) +
                                   " s; need at least 3 to align");
  }

  // Rigid alignment of the estimate onto the ground truth (no scale):
  // rotate both point sets about their centroids and take the SVD of the
  // cross-covariance.
  const auto n = static_cast<double>(pairs.size());
  Eigen::Vector3d centroid_est = Eigen::Vector3d::Zero();
  Eigen::Vector3d centroid_gt = Eigen::Vector3d::Zero();
  for (const auto& [ei, gi] : pairs) {
    centroid_est += estimate[ei].p;
    centroid_gt += ground_truth[gi].p;
  }
  centroid_est /= n;
  centroid_gt /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& [ei, gi] : pairs) {
    cov += (ground_truth[gi].p - centroid_gt) * (estimate[ei].p - centroid_est).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d rot = svd.matrixU() * d * svd.matrixV().transpose();

  AteResult result;
  result.alignment.rotation = Eigen::Quaterniond(rot);
  result.alignment.translation = centroid_gt - rot * centroid_est;
  result.pairs = pairs.size();
  result.errors.reserve(pairs.size());

  double sum_sq = 0.0, sum = 0.0;
  Eigen::Vector3d axis_sq = Eigen::Vector3d::Zero();
  for (const auto& [ei, gi] : pairs) {
    const Eigen::Vector3d aligned = result.alignment.apply(estimate[ei].p);
    const Eigen::Vector3d diff = aligned - ground_truth[gi].p;
    const double err = diff.norm();
    result.errors.push_back(err);
    sum_sq += err * err;
    sum += err;
    axis_sq += diff.cwiseAbs2();
    result.max = std::max(result.max, err);
  }
  result.rmse = std::sqrt(sum_sq / n);
  result.mean = sum / n;
  result.axis_rmse = (axis_sq / n).cwiseSqrt();

  std::vector<double> sorted = result.errors;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  result.median = sorted[sorted.size() / 2];
  return result;
}

}  // namespace ftdf
