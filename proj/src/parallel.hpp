#pragma once

// Minimal fork-join helper: splits [0, n) into contiguous blocks, one worker
// per block. Callers merge worker-local results in worker order to stay
// deterministic for a fixed thread count.

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace slstm {

// fn(worker_index, begin, end)
inline void for_each_block(long n, int threads,
                           const std::function<void(int, long, long)>& fn) {
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, static_cast<int>(std::min<long>(n, 1 << 10))));
  if (threads == 1 || n <= 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  const long chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const long begin = static_cast<long>(w) * chunk;
    const long end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace slstm
