#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace loopforge {

// Runs independent indexed tasks on a fixed number of threads. Tasks must
// write only to their own output slots; callers merge in index order, so the
// result never depends on the thread count.
class Executor {
 public:
  explicit Executor(int threads = 1) : threads_(std::max(1, threads)) {}

  int threads() const { return threads_; }

  template <class Fn>
  void for_each(std::size_t count, Fn&& fn) const {
    if (count == 0) return;
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(threads_, count));
    if (workers == 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

 private:
  int threads_;
};

}  // namespace loopforge
