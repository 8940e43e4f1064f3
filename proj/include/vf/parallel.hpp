#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace vf {

// Runs fn(i) for i in [0, count). Work items must be independent and write only
// to their own output slots; results are then identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = 0) {
  if (count == 0) return;
  unsigned hw = threads ? threads : std::thread::hardware_concurrency();
  if (hw < 2 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(hw, count));
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += nthreads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace vf
