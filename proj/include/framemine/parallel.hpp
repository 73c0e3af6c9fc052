#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace fm {

// Runs fn(chunk_index, begin, end) on num_threads threads over [0, n) split
// into contiguous chunks. Chunk boundaries depend only on (n, num_threads),
// so callers that reduce per-chunk results in chunk order stay deterministic.
inline void parallel_chunks(int n, int num_threads,
                            const std::function<void(int, int, int)>& fn) {
  if (n <= 0) return;
  num_threads = std::max(1, std::min(num_threads, n));
  if (num_threads == 1) {
    fn(0, 0, n);
    return;
  }
  const int base = n / num_threads;
  const int rem = n % num_threads;
  std::vector<std::thread> threads;
  threads.reserve(num_threads);
  int begin = 0;
  for (int c = 0; c < num_threads; ++c) {
    const int len = base + (c < rem ? 1 : 0);
    const int end = begin + len;
    threads.emplace_back(fn, c, begin, end);
    begin = end;
  }
  for (auto& t : threads) t.join();
}

inline int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace fm
