#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace learnq {

/// Runs body(i) for i in [0, count) on a small worker pool. Each index owns
/// its output slot, so results are independent of completion order. The
/// first exception thrown by any body is rethrown on the calling thread.
template <typename Body>
void parallel_for(long count, Body&& body) {
  const long workers = std::min<long>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (long w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace learnq
