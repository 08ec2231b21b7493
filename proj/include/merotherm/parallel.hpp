#pragma once

// Deterministic fork/join helpers.
//
// Everything that parallelizes in the workbench runs over a fixed block
// decomposition of the index space: block boundaries depend only on the
// problem size, each block is reduced sequentially, and the per-block results
// are combined in block order on the calling thread.  Consequently a run with
// --threads 8 produces bit-identical numbers to a run with --threads 1, which
// the test suite asserts.  Threads pull block indices from an atomic counter,
// so scheduling is free to vary -- only the combine order is pinned.

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "merotherm/common.hpp"

namespace merotherm {

inline int& worker_count() {
  static int n = 1;
  return n;
}

inline void set_worker_count(int n) {
  worker_count() = n < 1 ? 1 : n;
}

namespace detail {
inline constexpr std::size_t kBlock = 1024;  // fixed: never derived from thread count
}

// Runs fn(block_index, begin, end) over [0, n) split into fixed-size blocks.
// fn must only touch state owned by its block.
template <typename Fn>
void parallel_blocks(std::size_t n, Fn&& fn) {
  if (n == 0) return;
  const std::size_t nblocks = (n + detail::kBlock - 1) / detail::kBlock;
  const int nthreads = std::min<std::size_t>(worker_count(), nblocks);
  if (nthreads <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b)
      fn(b, b * detail::kBlock, std::min(n, (b + 1) * detail::kBlock));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      try {
        fn(b, b * detail::kBlock, std::min(n, (b + 1) * detail::kBlock));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Deterministic parallel sum of value(i) over [0, n): per-block Neumaier
// accumulation, then an ordered Neumaier combine of the block totals.
template <typename Fn>
double parallel_sum(std::size_t n, Fn&& value) {
  if (n == 0) return 0.0;
  const std::size_t nblocks = (n + detail::kBlock - 1) / detail::kBlock;
  std::vector<double> partial(nblocks, 0.0);
  parallel_blocks(n, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    NeumaierSum acc;
    for (std::size_t i = lo; i < hi; ++i) acc.add(value(i));
    partial[b] = acc.value();
  });
  return neumaier_total(partial);
}

// Deterministic parallel fill: out[i] = value(i).
template <typename T, typename Fn>
void parallel_fill(std::vector<T>& out, Fn&& value) {
  parallel_blocks(out.size(), [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = value(i);
  });
}

}  // namespace merotherm
