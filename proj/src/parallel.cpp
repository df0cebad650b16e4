#include "nidfusion/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace nidfusion::parallel {
namespace {
std::atomic<unsigned> g_threads{0};
}

unsigned hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

void set_thread_count(unsigned count) { g_threads.store(count); }

unsigned thread_count() {
  const unsigned t = g_threads.load();
  return t == 0 ? hardware_threads() : t;
}

unsigned chunks_for(std::size_t n) {
  if (n == 0) return 1;
  return static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
}

void for_chunks(std::size_t n, unsigned chunks,
                const std::function<void(unsigned, std::size_t, std::size_t)>& fn) {
  chunks = std::max(1u, chunks);
  auto bounds = [&](unsigned c) { return n * c / chunks; };
  if (chunks == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(chunks);
  workers.reserve(chunks - 1);
  for (unsigned c = 1; c < chunks; ++c) {
    workers.emplace_back([&, c] {
      try {
        fn(c, bounds(c), bounds(c + 1));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  try {
    fn(0, bounds(0), bounds(1));
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace nidfusion::parallel
