#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace permaseq {

/// Runs body(begin, end) over contiguous chunks of [0, count) on `threads`
/// workers. Exceptions from workers are rethrown on the caller's thread.
template <class Body>
void parallel_for(long long count, int threads, Body body) {
  if (count <= 0) return;
  const long long workers = std::max(1LL, std::min<long long>(threads, count));
  if (workers == 1) {
    body(0LL, count);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  const long long chunk = (count + workers - 1) / workers;
  for (long long w = 0; w < workers; ++w) {
    const long long begin = w * chunk;
    const long long end = std::min(count, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        if (begin < end) body(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace permaseq
