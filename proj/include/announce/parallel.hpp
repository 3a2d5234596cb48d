#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace announce {

/// 0 means: ANNOUNCE_PLANNER_WORKERS if set, else the hardware thread count.
inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0)
    return requested;
  if (const char *env = std::getenv("ANNOUNCE_PLANNER_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0)
      return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, n) into `workers` contiguous chunks and runs
/// fn(chunk, begin, end) for each. Chunk boundaries depend only on n and
/// workers, so per-chunk partial results can be merged deterministically.
template <class Fn>
void parallel_chunks(std::size_t n, unsigned workers, Fn &&fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    fn(0u, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    threads.emplace_back([&, w, begin, end] {
      try {
        fn(w, begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
      }
    });
  }
  for (auto &t : threads)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

/// fn(i) for every i in [0, n). Results must be written to slot i.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn &&fn) {
  parallel_chunks(n, workers, [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      fn(i);
  });
}

} // namespace announce
