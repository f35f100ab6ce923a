// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace panometric {

// Worker count: hardware concurrency capped by the PANOMETRIC_THREADS
// environment variable. Never less than 1.
inline int thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("PANOMETRIC_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker; each index is visited exactly once, so output is deterministic as
// long as iterations write disjoint data.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int workers = thread_count();
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t chunk = (n + workers - 1) / static_cast<std::size_t>(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    std::size_t lo = static_cast<std::size_t>(w) * chunk;
    if (lo >= n) break;
    std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace panometric
