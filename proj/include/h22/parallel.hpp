#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace h22 {

/// Static partition of [0, count) over a worker pool. Each item writes only
/// into its own slot and derives any randomness from its own index, so the
/// result is identical for every thread count.
inline void parallel_for(long count, const std::function<void(long)>& work, int threads = 0) {
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw ? static_cast<int>(std::min(hw, 16u)) : 1;
  }
  threads = static_cast<int>(std::min<long>(threads, std::max<long>(count, 1)));
  if (threads <= 1 || count < 2) {
    for (long i = 0; i < count; ++i) work(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (long i = t; i < count; i += threads) work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace h22
