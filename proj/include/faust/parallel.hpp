#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "faust/types.hpp"

namespace faust {

/// Runs fn(i) for i in [0, n) on up to maxThreads workers in contiguous
/// chunks. Results must be written to per-index slots so the outcome does not
/// depend on scheduling; maxThreads <= 1 runs inline.
template <typename Fn>
void parallelFor(Index n, int maxThreads, Fn&& fn) {
  if (n <= 0) return;
  const int workers = std::max(1, std::min<int>(maxThreads, static_cast<int>(n)));
  if (workers == 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const Index chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (Index i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace faust
