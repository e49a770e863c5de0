#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace greenpot {

inline int default_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(job_index) for job_index in [0, n_jobs) on up to n_threads
// workers. Jobs are claimed from a shared counter; callers that need
// thread-count-independent results must make each job's output a pure
// function of its index (results written to pre-sized slots, reductions
// done serially afterwards in index order).
inline void parallel_for(std::int64_t n_jobs, int n_threads,
                         const std::function<void(std::int64_t)>& fn) {
  if (n_jobs <= 0) return;
  if (n_threads <= 1 || n_jobs == 1) {
    for (std::int64_t i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::int64_t i = next.fetch_add(1);
      if (i >= n_jobs) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int workers = static_cast<int>(std::min<std::int64_t>(n_threads, n_jobs));
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// Same, but jobs are contiguous ranges [begin, end) of a large loop.
inline void parallel_for_range(std::int64_t n, int n_threads,
                               const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  if (n_threads <= 1) {
    fn(0, n);
    return;
  }
  std::int64_t chunk = (n + n_threads - 1) / n_threads;
  std::vector<std::thread> pool;
  for (std::int64_t b = 0; b < n; b += chunk) {
    std::int64_t e = std::min(n, b + chunk);
    pool.emplace_back([=, &fn]() { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace greenpot
