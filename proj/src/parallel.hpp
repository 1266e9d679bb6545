#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace backstep::detail {

/// Splits [0, count) into contiguous chunks and runs fn(lo, hi) on each,
/// one chunk per worker. fn must be safe to run concurrently on disjoint
/// ranges. threads == 0 picks the hardware concurrency.
template <typename Fn>
void parallel_for_chunks(std::size_t count, int threads, Fn&& fn) {
    unsigned n = threads > 0 ? static_cast<unsigned>(threads)
                             : std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (n == 1 || count < 4096) {
        fn(std::size_t{0}, count);
        return;
    }
    if (static_cast<std::size_t>(n) > count) n = static_cast<unsigned>(count);
    std::vector<std::thread> pool;
    pool.reserve(n - 1);
    const std::size_t chunk = (count + n - 1) / n;
    for (unsigned t = 1; t < n; ++t) {
        const std::size_t lo = t * chunk;
        if (lo >= count) break;
        const std::size_t hi = std::min(count, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(std::size_t{0}, std::min(count, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace backstep::detail
