#pragma once
// Deterministic data-parallel reductions.  Work is split into fixed-size
// chunks; each chunk produces a partial result, and partials are combined
// strictly in chunk order.  The outcome is therefore bit-identical whether
// 1, 4, or 8 worker threads execute the chunks.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace smallcap {

inline unsigned worker_count() {
  if (const char* env = std::getenv("SMALLCAP_WORKERS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v <= 256) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Evaluates fn(chunk_begin, chunk_end) for consecutive chunks of [0, total)
// and folds the partials in index order with combine(acc, partial).
template <typename T, typename Fn, typename Combine>
T chunked_reduce(std::uint64_t total, std::uint64_t chunk, T init, Fn&& fn,
                 Combine&& combine, unsigned workers = worker_count()) {
  if (total == 0) return init;
  if (chunk == 0) chunk = 1;
  const std::uint64_t nchunks = (total + chunk - 1) / chunk;
  std::vector<T> partial(nchunks, init);
  if (workers <= 1 || nchunks == 1) {
    for (std::uint64_t c = 0; c < nchunks; ++c) {
      std::uint64_t b = c * chunk;
      std::uint64_t e = std::min(total, b + chunk);
      partial[c] = fn(b, e);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::uint64_t> next{0};
    unsigned nt = static_cast<unsigned>(std::min<std::uint64_t>(workers, nchunks));
    for (unsigned t = 0; t < nt; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          std::uint64_t c = next.fetch_add(1);
          if (c >= nchunks) return;
          std::uint64_t b = c * chunk;
          std::uint64_t e = std::min(total, b + chunk);
          partial[c] = fn(b, e);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  T acc = init;
  for (std::uint64_t c = 0; c < nchunks; ++c) acc = combine(acc, partial[c]);
  return acc;
}

// Parallel for over [0, total) in chunks; fn must only write to disjoint,
// index-determined locations.
template <typename Fn>
void chunked_for(std::uint64_t total, std::uint64_t chunk, Fn&& fn,
                 unsigned workers = worker_count()) {
  chunked_reduce<int>(
      total, chunk, 0,
      [&](std::uint64_t b, std::uint64_t e) {
        fn(b, e);
        return 0;
      },
      [](int, int) { return 0; }, workers);
}

}  // namespace smallcap
