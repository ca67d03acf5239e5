#pragma once

#include <cstddef>
#include <functional>

namespace pixdiff::parallel {

/// Upper bound on worker threads. Defaults to the hardware concurrency,
/// capped by the PIXDIFF_THREADS environment variable when it is set.
std::size_t max_threads() noexcept;

/// Overrides the cap for this process; 0 restores the default.
void set_max_threads(std::size_t n) noexcept;

/// Runs body(i) for i in [0, count). Iterations are split into contiguous
/// chunks, one per thread; each index is visited exactly once, so output is
/// deterministic as long as iterations write disjoint memory.
void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body);

/// Scoped thread-cap override.
class ThreadLimit {
 public:
  explicit ThreadLimit(std::size_t n) noexcept;
  ~ThreadLimit();
  ThreadLimit(const ThreadLimit&) = delete;
  ThreadLimit& operator=(const ThreadLimit&) = delete;

 private:
  std::size_t previous_;
};

}  // namespace pixdiff::parallel
