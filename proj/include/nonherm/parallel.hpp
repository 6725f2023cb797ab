#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace nonherm {

// Runs fn(begin, end) over [0, num_tasks) split into `workers` contiguous
// chunks. The partition depends only on (num_tasks, workers), and each task
// writes its own slot, so results do not depend on scheduling. The exception
// from the lowest-numbered failing chunk is rethrown.
template <class Fn>
void parallel_for_static(std::size_t num_tasks, int workers, Fn&& fn) {
  if (num_tasks == 0) return;
  const std::size_t w =
      std::clamp<std::size_t>(workers < 1 ? 1 : static_cast<std::size_t>(workers), 1, num_tasks);
  if (w == 1) {
    fn(std::size_t{0}, num_tasks);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> pool;
  pool.reserve(w);
  const std::size_t base = num_tasks / w;
  const std::size_t extra = num_tasks % w;
  std::size_t begin = 0;
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t end = begin + base + (t < extra ? 1 : 0);
    pool.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Worker count from NONHERM_WORKERS, else `fallback`.
inline int workers_from_env(int fallback = 1) {
  if (const char* v = std::getenv("NONHERM_WORKERS")) {
    try {
      const int n = std::stoi(v);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return fallback;
}

}  // namespace nonherm
