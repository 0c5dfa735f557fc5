#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace carm {

/// Worker count for the data-parallel loops. Every parallel loop in the
/// library partitions its output so each element is written by exactly one
/// worker, which keeps results bitwise identical for any thread count.
struct Exec {
  unsigned threads = 1;
};

/// Calls fn(begin, end) over contiguous chunks of [0, n).
template <typename Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(exec.threads, 1, std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace carm
