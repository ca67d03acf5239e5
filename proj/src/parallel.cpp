#include "pixdiff/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pixdiff::parallel {
namespace {

std::size_t default_threads() noexcept {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PIXDIFF_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

std::atomic<std::size_t> g_override{0};

}  // namespace

std::size_t max_threads() noexcept {
  const std::size_t o = g_override.load(std::memory_order_relaxed);
  if (o) return o;
  static const std::size_t n = default_threads();
  return n;
}

void set_max_threads(std::size_t n) noexcept { g_override.store(n, std::memory_order_relaxed); }

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t threads = std::min(max_threads(), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  workers.reserve(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    workers.emplace_back([&, t, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ThreadLimit::ThreadLimit(std::size_t n) noexcept : previous_(g_override.load()) {
  set_max_threads(n);
}

ThreadLimit::~ThreadLimit() { set_max_threads(previous_); }

}  // namespace pixdiff::parallel
