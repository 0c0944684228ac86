#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lfseg {

/// Runs fn(i) for every i in [0, count) on up to `workers` threads.
///
/// Work is handed out in contiguous chunks from a shared counter, so fn must
/// only write to per-index state if the result is to be independent of the
/// worker count. The first exception thrown by any invocation is rethrown on
/// the calling thread after all workers have stopped.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn, std::size_t chunk = 0) {
  if (count == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (chunk == 0) chunk = std::max<std::size_t>(1, count / (workers * 16));

  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= count) break;
      const std::size_t end = std::min(count, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace lfseg
