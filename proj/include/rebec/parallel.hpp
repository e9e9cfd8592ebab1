#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace rebec {

/// Runs fn(i) or fn(i, worker) for i in [0, n) on up to `jobs` threads.
/// `worker` is exclusive to one thread at a time. The exception of the
/// lowest failing index is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  auto call = [&](std::size_t i, std::size_t w) {
    if constexpr (std::is_invocable_v<Fn&, std::size_t, std::size_t>)
      fn(i, w);
    else
      fn(i);
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) call(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&](std::size_t w) {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        call(i, w);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace rebec
