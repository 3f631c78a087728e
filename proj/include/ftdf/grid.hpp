#ifndef FTDF_GRID_HPP
#define FTDF_GRID_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ftdf/kernel.hpp"
#include "ftdf/mask.hpp"

namespace ftdf {

struct CellIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Axis-aligned world-space box, meters.
struct GridBounds {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
};

constexpr std::uint64_t kDefaultGridMemoryBudget = 16ull << 30;  // 16 GiB

// Dense fixed-resolution grid of distance masks. Cells are stored row-major
// (i fastest) and every cell starts at the all-ones mask of the configured
// width, i.e. the truncation distance. Insertion only ever ANDs masks in, so
// stored popcounts never increase.
class TdfGrid {
 public:
  TdfGrid(const GridBounds& bounds, double resolution, int mask_bits,
          std::uint64_t memory_budget_bytes = kDefaultGridMemoryBudget);
  TdfGrid(const Eigen::Vector3d& origin, double resolution, std::int64_t nx, std::int64_t ny,
          std::int64_t nz, int mask_bits,
          std::uint64_t memory_budget_bytes = kDefaultGridMemoryBudget);

  double resolution() const { return resolution_; }
  const Eigen::Vector3d& origin() const { return origin_; }
  int mask_bits() const { return mask_bits_; }
  std::int64_t nx() const { return nx_; }
  std::int64_t ny() const { return ny_; }
  std::int64_t nz() const { return nz_; }
  std::uint64_t cell_count() const { return cells_.size(); }

  std::uint64_t linear_index(const CellIndex& c) const {
    return static_cast<std::uint64_t>(c.i) +
           static_cast<std::uint64_t>(nx_) *
               (static_cast<std::uint64_t>(c.j) + static_cast<std::uint64_t>(ny_) *
                                                      static_cast<std::uint64_t>(c.k));
  }

  bool contains(const CellIndex& c) const {
    return c.i >= 0 && c.j >= 0 && c.k >= 0 && c.i < nx_ && c.j < ny_ && c.k < nz_;
  }

  // Floor((p - origin) / resolution) per axis; nullopt when outside.
  std::optional<CellIndex> world_to_cell(const Eigen::Vector3d& p) const;

  Eigen::Vector3d cell_center(const CellIndex& c) const {
    return origin_ + resolution_ * Eigen::Vector3d(static_cast<double>(c.i) + 0.5,
                                                   static_cast<double>(c.j) + 0.5,
                                                   static_cast<double>(c.k) + 0.5);
  }

  DistanceMask cell(const CellIndex& c) const { return DistanceMask{cells_[linear_index(c)]}; }

  int decoded_cells(const CellIndex& c) const { return cell(c).distance_cells(); }
  double decoded_distance(const CellIndex& c) const { return decoded_cells(c) * resolution_; }

  // ANDs the kernel into the grid around the cell containing p. The kernel
  // footprint is clipped at the borders. Returns false (and leaves the grid
  // untouched) when p itself falls outside the grid.
  bool insert_point(const BinaryKernel& kernel, const Eigen::Vector3d& p);

  struct InsertStats {
    std::size_t inserted = 0;
    std::size_t skipped_out_of_bounds = 0;
  };

  // Fold of insert_point over all in-bounds points. Cell updates are atomic
  // ANDs, so any worker count and any point order produce the same grid.
  InsertStats insert_cloud(const BinaryKernel& kernel, std::span<const Eigen::Vector3d> points,
                           int workers = 1);

  // Trilinearly interpolated L1 distance (meters) at cell centers; nullopt
  // when any of the 8 surrounding centers is outside the grid.
  std::optional<double> distance_at(const Eigen::Vector3d& p) const;

  struct DistanceGradient {
    double distance = 0.0;
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  };

  // Interpolated distance plus the analytic gradient of the interpolant.
  std::optional<DistanceGradient> distance_and_gradient_at(const Eigen::Vector3d& p) const;

  const std::vector<std::uint64_t>& cells() const { return cells_; }

 private:
  struct Interpolant;
  bool gather_corners(const Eigen::Vector3d& p, Interpolant& out) const;

  Eigen::Vector3d origin_;
  double resolution_;
  std::int64_t nx_, ny_, nz_;
  int mask_bits_;
  std::vector<std::uint64_t> cells_;
};

// Binary snapshot: header (magic "FTDF", version, dims, resolution, origin,
// mask width) followed by the raw little-endian masks in row-major order.
void save_grid_snapshot(const TdfGrid& grid, const std::string& path);
TdfGrid load_grid_snapshot(const std::string& path,
                           std::uint64_t memory_budget_bytes = kDefaultGridMemoryBudget);

// Writes the centers of cells with decoded distance <= level_cells as an
// ASCII PLY point cloud. Level 0 exports the obstacle cells themselves.
void export_level_cells_ply(const TdfGrid& grid, const std::string& path, int level_cells = 0);

}  // namespace ftdf

#endif
