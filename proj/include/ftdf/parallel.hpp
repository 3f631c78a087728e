#ifndef FTDF_PARALLEL_HPP
#define FTDF_PARALLEL_HPP

#include <cstddef>
#include <thread>
#include <vector>

namespace ftdf {

inline int hardware_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(begin, end) over contiguous chunks of [0, n) on `workers` threads.
// The chunking depends only on n and workers, never on scheduling.
template <typename Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  const std::size_t chunk = (n + w - 1) / w;
  std::vector<std::thread> threads;
  threads.reserve(w - 1);
  for (std::size_t t = 1; t < w; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
  for (auto& th : threads) th.join();
}

}  // namespace ftdf

#endif
