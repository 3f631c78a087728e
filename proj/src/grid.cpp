#include "ftdf/grid.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ftdf/errors.hpp"
#include "ftdf/parallel.hpp"

namespace ftdf {

namespace {

std::int64_t dim_from_extent(double extent, double resolution) {
  return static_cast<std::int64_t>(std::ceil(extent / resolution));
}

// Kernel footprint linearized for a specific grid shape, so interior points
// update cells with one add per entry and no index arithmetic.
struct LinearFootprint {
  std::vector<std::int64_t> offsets;
  std::vector<std::uint64_t> masks;

  LinearFootprint(const BinaryKernel& kernel, std::int64_t nx, std::int64_t ny) {
    const auto& entries = kernel.footprint();
    offsets.reserve(entries.size());
    masks.reserve(entries.size());
    for (const auto& e : entries) {
      offsets.push_back(e.dx + nx * (e.dy + ny * static_cast<std::int64_t>(e.dz)));
      masks.push_back(e.mask.bits);
    }
  }
};

template <bool Atomic>
inline void and_cell(std::uint64_t* cell, std::uint64_t mask) {
  if constexpr (Atomic) {
    std::atomic_ref<std::uint64_t>(*cell).fetch_and(mask, std::memory_order_relaxed);
  } else {
    *cell &= mask;
  }
}

}  // namespace

TdfGrid::TdfGrid(const GridBounds& bounds, double resolution, int mask_bits,
                 std::uint64_t memory_budget_bytes)
    : TdfGrid(bounds.min, resolution, dim_from_extent(bounds.max.x() - bounds.min.x(), resolution),
              dim_from_extent(bounds.max.y() - bounds.min.y(), resolution),
              dim_from_extent(bounds.max.z() - bounds.min.z(), resolution), mask_bits,
              memory_budget_bytes) {
  if ((bounds.max - bounds.min).minCoeff() <= 0.0) {
    throw ConfigError("grid bounds are degenerate: every extent must be positive");
  }
}

TdfGrid::TdfGrid(const Eigen::Vector3d& origin, double resolution, std::int64_t nx,
                 std::int64_t ny, std::int64_t nz, int mask_bits,
                 std::uint64_t memory_budget_bytes)
    : origin_(origin), resolution_(resolution), nx_(nx), ny_(ny), nz_(nz), mask_bits_(mask_bits) {
  if (resolution <= 0.0) {
    throw ConfigError("grid resolution must be positive");
  }
  if (!valid_mask_width(mask_bits)) {
    throw ConfigError("mask width must be one of 4, 8, 16, 32, 64, got " +
                      std::to_string(mask_bits));
  }
  if (nx <= 0 || ny <= 0 || nz <= 0) {
    throw ConfigError("grid dimensions must be positive");
  }
  const std::uint64_t count =
      static_cast<std::uint64_t>(nx) * static_cast<std::uint64_t>(ny) * static_cast<std::uint64_t>(nz);
  const std::uint64_t bytes = count * sizeof(std::uint64_t);
  if (bytes > memory_budget_bytes) {
    throw AllocationError(bytes, memory_budget_bytes);
  }
  cells_.assign(count, DistanceMask::truncated(mask_bits_).bits);
}

std::optional<CellIndex> TdfGrid::world_to_cell(const Eigen::Vector3d& p) const {
  const CellIndex c{static_cast<std::int64_t>(std::floor((p.x() - origin_.x()) / resolution_)),
                    static_cast<std::int64_t>(std::floor((p.y() - origin_.y()) / resolution_)),
                    static_cast<std::int64_t>(std::floor((p.z() - origin_.z()) / resolution_))};
  if (!contains(c)) return std::nullopt;
  return c;
}

bool TdfGrid::insert_point(const BinaryKernel& kernel, const Eigen::Vector3d& p) {
  const auto center = world_to_cell(p);
  if (!center) return false;
  for (const auto& e : kernel.footprint()) {
    const CellIndex c{center->i + e.dx, center->j + e.dy, center->k + e.dz};
    if (!contains(c)) continue;
    and_cell<false>(&cells_[linear_index(c)], e.mask.bits);
  }
  return true;
}

TdfGrid::InsertStats TdfGrid::insert_cloud(const BinaryKernel& kernel,
                                           std::span<const Eigen::Vector3d> points, int workers) {
  const LinearFootprint plan(kernel, nx_, ny_);
  const auto& entries = kernel.footprint();
  const int r = kernel.radius();
  const std::size_t n_entries = entries.size();

  std::atomic<std::size_t> inserted{0};
  std::atomic<std::size_t> skipped{0};

  auto process = [&](std::size_t begin, std::size_t end, auto atomic_tag) {
    constexpr bool kAtomic = decltype(atomic_tag)::value;
    std::size_t local_inserted = 0;
    std::size_t local_skipped = 0;
    for (std::size_t idx = begin; idx < end; ++idx) {
      const auto center = world_to_cell(points[idx]);
      if (!center) {
        ++local_skipped;
        continue;
      }
      ++local_inserted;
      const bool interior = center->i >= r && center->i + r < nx_ && center->j >= r &&
                            center->j + r < ny_ && center->k >= r && center->k + r < nz_;
      if (interior) {
        std::uint64_t* base = cells_.data() + linear_index(*center);
        for (std::size_t e = 0; e < n_entries; ++e) {
          and_cell<kAtomic>(base + plan.offsets[e], plan.masks[e]);
        }
      } else {
        for (const auto& e : entries) {
          const CellIndex c{center->i + e.dx, center->j + e.dy, center->k + e.dz};
          if (!contains(c)) continue;
          and_cell<kAtomic>(&cells_[linear_index(c)], e.mask.bits);
        }
      }
    }
    inserted.fetch_add(local_inserted, std::memory_order_relaxed);
    skipped.fetch_add(local_skipped, std::memory_order_relaxed);
  };

  if (workers <= 1) {
    process(0, points.size(), std::false_type{});
  } else {
    parallel_chunks(points.size(), workers, [&](std::size_t begin, std::size_t end) {
      process(begin, end, std::true_type{});
    });
  }
  return InsertStats{inserted.load(), skipped.load()};
}

struct TdfGrid::Interpolant {
  // Corner order: c[dz][dy][dx] flattened as dx + 2*dy + 4*dz.
  double d[8];
  double fx, fy, fz;
};

bool TdfGrid::gather_corners(const Eigen::Vector3d& p, Interpolant& out) const {
  const double ux = (p.x() - origin_.x()) / resolution_ - 0.5;
  const double uy = (p.y() - origin_.y()) / resolution_ - 0.5;
  const double uz = (p.z() - origin_.z()) / resolution_ - 0.5;
  const double fix = std::floor(ux);
  const double fiy = std::floor(uy);
  const double fiz = std::floor(uz);
  const std::int64_t i0 = static_cast<std::int64_t>(fix);
  const std::int64_t j0 = static_cast<std::int64_t>(fiy);
  const std::int64_t k0 = static_cast<std::int64_t>(fiz);
  if (i0 < 0 || j0 < 0 || k0 < 0 || i0 + 1 >= nx_ || j0 + 1 >= ny_ || k0 + 1 >= nz_) {
    return false;
  }
  out.fx = ux - fix;
  out.fy = uy - fiy;
  out.fz = uz - fiz;

  const std::uint64_t base = linear_index(CellIndex{i0, j0, k0});
  const std::uint64_t sy = static_cast<std::uint64_t>(nx_);
  const std::uint64_t sz = static_cast<std::uint64_t>(nx_) * static_cast<std::uint64_t>(ny_);
  const std::uint64_t* cells = cells_.data();
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const std::uint64_t v = cells[base + dx + dy * sy + dz * sz];
        out.d[dx + 2 * dy + 4 * dz] = std::popcount(v) * resolution_;
      }
    }
  }
  return true;
}

std::optional<double> TdfGrid::distance_at(const Eigen::Vector3d& p) const {
  Interpolant in;
  if (!gather_corners(p, in)) return std::nullopt;
  const double wx0 = 1.0 - in.fx, wy0 = 1.0 - in.fy, wz0 = 1.0 - in.fz;
  const double c00 = in.d[0] * wx0 + in.d[1] * in.fx;
  const double c10 = in.d[2] * wx0 + in.d[3] * in.fx;
  const double c01 = in.d[4] * wx0 + in.d[5] * in.fx;
  const double c11 = in.d[6] * wx0 + in.d[7] * in.fx;
  const double c0 = c00 * wy0 + c10 * in.fy;
  const double c1 = c01 * wy0 + c11 * in.fy;
  return c0 * wz0 + c1 * in.fz;
}

std::optional<TdfGrid::DistanceGradient> TdfGrid::distance_and_gradient_at(
    const Eigen::Vector3d& p) const {
  Interpolant in;
  if (!gather_corners(p, in)) return std::nullopt;
  const double wx0 = 1.0 - in.fx, wy0 = 1.0 - in.fy, wz0 = 1.0 - in.fz;

  DistanceGradient out;
  const double c00 = in.d[0] * wx0 + in.d[1] * in.fx;
  const double c10 = in.d[2] * wx0 + in.d[3] * in.fx;
  const double c01 = in.d[4] * wx0 + in.d[5] * in.fx;
  const double c11 = in.d[6] * wx0 + in.d[7] * in.fx;
  const double c0 = c00 * wy0 + c10 * in.fy;
  const double c1 = c01 * wy0 + c11 * in.fy;
  out.distance = c0 * wz0 + c1 * in.fz;

  // Partial derivatives of the trilinear form, divided by the cell size to
  // express them per meter.
  const double inv_res = 1.0 / resolution_;
  out.gradient.x() = ((in.d[1] - in.d[0]) * wy0 * wz0 + (in.d[3] - in.d[2]) * in.fy * wz0 +
                      (in.d[5] - in.d[4]) * wy0 * in.fz + (in.d[7] - in.d[6]) * in.fy * in.fz) *
                     inv_res;
  out.gradient.y() = ((in.d[2] - in.d[0]) * wx0 * wz0 + (in.d[3] - in.d[1]) * in.fx * wz0 +
                      (in.d[6] - in.d[4]) * wx0 * in.fz + (in.d[7] - in.d[5]) * in.fx * in.fz) *
                     inv_res;
  out.gradient.z() = ((in.d[4] - in.d[0]) * wx0 * wy0 + (in.d[5] - in.d[1]) * in.fx * wy0 +
                      (in.d[6] - in.d[2]) * wx0 * in.fy + (in.d[7] - in.d[3]) * in.fx * in.fy) *
                     inv_res;
  return out;
}

namespace {

constexpr char kSnapshotMagic[4] = {'F', 'T', 'D', 'F'};
constexpr std::uint32_t kSnapshotVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& value, const std::string& path, const char* field) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) {
    throw ParseError(path + ": truncated snapshot header while reading " + std::string(field));
  }
}

}  // namespace

void save_grid_snapshot(const TdfGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kSnapshotMagic, 4);
  write_raw(out, kSnapshotVersion);
  write_raw(out, static_cast<std::uint64_t>(grid.nx()));
  write_raw(out, static_cast<std::uint64_t>(grid.ny()));
  write_raw(out, static_cast<std::uint64_t>(grid.nz()));
  write_raw(out, grid.resolution());
  write_raw(out, grid.origin().x());
  write_raw(out, grid.origin().y());
  write_raw(out, grid.origin().z());
  write_raw(out, static_cast<std::uint32_t>(grid.mask_bits()));
  write_raw(out, std::uint32_t{0});
  out.write(reinterpret_cast<const char*>(grid.cells().data()),
            static_cast<std::streamsize>(grid.cells().size() * sizeof(std::uint64_t)));
  if (!out) throw IoError("short write to " + path);
}

TdfGrid load_grid_snapshot(const std::string& path, std::uint64_t memory_budget_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kSnapshotMagic, 4) != 0) {
    throw ParseError(path + ": bad magic at offset 0, expected \"FTDF\"");
  }
  std::uint32_t version = 0;
  read_raw(in, version, path, "version");
  if (version != kSnapshotVersion) {
    throw ParseError(path + ": unsupported snapshot version " + std::to_string(version));
  }
  std::uint64_t nx = 0, ny = 0, nz = 0;
  read_raw(in, nx, path, "dims");
  read_raw(in, ny, path, "dims");
  read_raw(in, nz, path, "dims");
  double resolution = 0.0;
  read_raw(in, resolution, path, "resolution");
  Eigen::Vector3d origin;
  read_raw(in, origin.x(), path, "origin");
  read_raw(in, origin.y(), path, "origin");
  read_raw(in, origin.z(), path, "origin");
  std::uint32_t mask_bits = 0, reserved = 0;
  read_raw(in, mask_bits, path, "mask width");
  read_raw(in, reserved, path, "reserved");

  TdfGrid grid(origin, resolution, static_cast<std::int64_t>(nx), static_cast<std::int64_t>(ny),
               static_cast<std::int64_t>(nz), static_cast<int>(mask_bits), memory_budget_bytes);
  auto* data = const_cast<std::uint64_t*>(grid.cells().data());
  const std::streamsize payload =
      static_cast<std::streamsize>(grid.cell_count() * sizeof(std::uint64_t));
  in.read(reinterpret_cast<char*>(data), payload);
  if (in.gcount() != payload) {
    throw ParseError(path + ": truncated payload at byte offset " +
                     std::to_string(72 + in.gcount()) + ", expected " + std::to_string(payload) +
                     " payload bytes");
  }
  return grid;
}

void export_level_cells_ply(const TdfGrid& grid, const std::string& path, int level_cells) {
  std::uint64_t count = 0;
  for (const std::uint64_t v : grid.cells()) {
    if (std::popcount(v) <= level_cells) ++count;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << count
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (std::int64_t k = 0; k < grid.nz(); ++k) {
    for (std::int64_t j = 0; j < grid.ny(); ++j) {
      for (std::int64_t i = 0; i < grid.nx(); ++i) {
        const CellIndex c{i, j, k};
        if (grid.decoded_cells(c) <= level_cells) {
          const Eigen::Vector3d center = grid.cell_center(c);
          out << static_cast<float>(center.x()) << " " << static_cast<float>(center.y()) << " "
              << static_cast<float>(center.z()) << "\n";
        }
      }
    }
  }
  if (!out) throw IoError("short write to " + path);
}

}  // namespace ftdf
