#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace vsgraph {

// Worker count: VSGRAPH_THREADS if set, else hardware concurrency.
int thread_count();

// Runs body(i) for i in [begin, end) on a static contiguous partition.
// Every index is computed independently of the partition, so results are
// identical for any thread count.
template <class F>
void parallel_for(std::size_t begin, std::size_t end, F&& body) {
  const std::size_t n = end > begin ? end - begin : 0;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1 || n < 2) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace vsgraph
