#include "ftdf/kernel.hpp"

#include <cstdlib>
#include <string>

#include "ftdf/errors.hpp"

namespace ftdf {

BinaryKernel::BinaryKernel(int radius_cells, int mask_bits)
    : radius_(radius_cells), mask_bits_(mask_bits) {
  if (radius_cells < 1) {
    throw ConfigError("kernel radius must be >= 1, got " + std::to_string(radius_cells));
  }
  if (!valid_mask_width(mask_bits)) {
    throw ConfigError("mask width must be one of 4, 8, 16, 32, 64, got " +
                      std::to_string(mask_bits));
  }

  const int s = side();
  values_.resize(static_cast<std::size_t>(s) * s * s);
  footprint_.reserve(values_.size());
  for (int dz = -radius_; dz <= radius_; ++dz) {
    for (int dy = -radius_; dy <= radius_; ++dy) {
      for (int dx = -radius_; dx <= radius_; ++dx) {
        const int l1 = std::abs(dx) + std::abs(dy) + std::abs(dz);
        const DistanceMask m = DistanceMask::of_distance(l1, mask_bits_);
        values_[static_cast<std::size_t>((dz + radius_) * s * s + (dy + radius_) * s +
                                         (dx + radius_))] = m;
        if (l1 < mask_bits_) {
          footprint_.push_back(Entry{dx, dy, dz, m});
        }
      }
    }
  }
}

}  // namespace ftdf
