#ifndef FTDF_MASK_HPP
#define FTDF_MASK_HPP

#include <bit>
#include <cstdint>

namespace ftdf {

// Widths allowed for the bit-set distance encoding.
constexpr bool valid_mask_width(int bits) {
  return bits == 4 || bits == 8 || bits == 16 || bits == 32 || bits == 64;
}

// Truncated L1 distance encoded as a bit set: the canonical mask for
// distance d has exactly the lowest d bits set, so popcount recovers d and
// bitwise-AND of two canonical masks is the canonical mask of the minimum.
struct DistanceMask {
  std::uint64_t bits = ~std::uint64_t{0};

  // All-ones mask of the given width: the truncation / unknown value.
  static constexpr DistanceMask truncated(int width) {
    return DistanceMask{width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1};
  }

  // Canonical mask of min(distance_cells, width).
  static constexpr DistanceMask of_distance(int distance_cells, int width) {
    const int d = distance_cells < width ? distance_cells : width;
    return truncated(d);
  }

  constexpr int distance_cells() const { return std::popcount(bits); }

  // Canonical form: bits + 1 is a power of two (wraps to zero for all-ones).
  constexpr bool canonical() const { return (bits & (bits + 1)) == 0; }

  friend constexpr bool operator==(DistanceMask, DistanceMask) = default;
};

// Shortest-distance fusion. AND of canonical masks keeps the smaller
// popcount, so insertion order never matters.
constexpr DistanceMask merge_masks(DistanceMask a, DistanceMask b) {
  return DistanceMask{a.bits & b.bits};
}

}  // namespace ftdf

#endif
