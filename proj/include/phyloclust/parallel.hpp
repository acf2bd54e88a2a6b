#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace phyloclust {

/// Worker count used when a caller passes 0: PHYLOCLUST_THREADS, else hardware concurrency.
inline unsigned default_threads() {
  if (const char* env = std::getenv("PHYLOCLUST_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over [0, count) split into chunks pulled by `threads` workers.
/// Chunks are disjoint, so a body that writes only its own indices gives scheduling-independent output.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body, std::size_t chunk = 64) {
  if (threads == 0) threads = default_threads();
  if (count == 0) return;
  if (threads == 1 || count <= chunk) {
    body(std::size_t{0}, count);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(chunk);
        if (begin >= count) break;
        body(begin, std::min(count, begin + chunk));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, (count + chunk - 1) / chunk));
  std::vector<std::thread> pool;
  pool.reserve(n - 1);
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace phyloclust
