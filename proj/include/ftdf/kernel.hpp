#ifndef FTDF_KERNEL_HPP
#define FTDF_KERNEL_HPP

#include <vector>

#include "ftdf/mask.hpp"

namespace ftdf {

// Precomputed cube of distance masks around one obstacle cell. The value at
// offset (dx, dy, dz) encodes min(|dx|+|dy|+|dz|, mask_bits), so ANDing the
// kernel into a grid at every occupied cell yields the truncated L1 field.
class BinaryKernel {
 public:
  struct Entry {
    int dx;
    int dy;
    int dz;
    DistanceMask mask;
  };

  // radius_cells >= 1, mask_bits in {4, 8, 16, 32, 64}. Side is 2*radius+1.
  BinaryKernel(int radius_cells, int mask_bits);

  int radius() const { return radius_; }
  int mask_bits() const { return mask_bits_; }
  int side() const { return 2 * radius_ + 1; }

  // Offsets must satisfy |dx|, |dy|, |dz| <= radius.
  DistanceMask at(int dx, int dy, int dz) const {
    const int s = side();
    return values_[static_cast<std::size_t>(
        (dz + radius_) * s * s + (dy + radius_) * s + (dx + radius_))];
  }

  // Offsets with L1 < mask_bits, in row-major order (dx fastest). Saturated
  // entries are all-ones and AND as no-ops, so they are omitted.
  const std::vector<Entry>& footprint() const { return footprint_; }

 private:
  int radius_;
  int mask_bits_;
  std::vector<DistanceMask> values_;
  std::vector<Entry> footprint_;
};

}  // namespace ftdf

#endif
