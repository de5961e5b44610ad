#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace posir {

/// Worker count used when the caller passes 0.
inline unsigned default_workers() { return std::max(1U, std::thread::hardware_concurrency()); }

/// Runs body(state, i) for i in [0, count) on `workers` threads. Each thread
/// owns one state object from make_state(). Work is handed out in chunks;
/// callers write results by index, which keeps output independent of the
/// schedule. The first exception thrown by any worker is rethrown.
template <class MakeState, class Body>
void parallel_for(std::size_t count, unsigned workers, MakeState&& make_state, Body&& body) {
  if (count == 0) return;
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  const std::size_t chunk = std::clamp<std::size_t>(count / (16 * workers), 1, 256);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    try {
      auto state = make_state();
      while (true) {
        const std::size_t begin = next.fetch_add(chunk);
        if (begin >= count) break;
        const std::size_t end = std::min(count, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) body(state, i);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(count);
    }
  };

  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace posir
