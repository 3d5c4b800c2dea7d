#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace dyad {

/// Deterministic chunked parallel loop: every index writes only its own slot,
/// so results are identical for any thread count.
inline void parallelFor(int threads, std::uint64_t n, const std::function<void(std::uint64_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::uint64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    auto worker = [&](std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t i = lo; i < hi; ++i) fn(i);
    };
    std::vector<std::thread> pool;
    std::uint64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        std::uint64_t lo = t * chunk;
        if (lo >= n) break;
        pool.emplace_back(worker, lo, std::min(n, lo + chunk));
    }
    for (auto& th : pool) th.join();
}

}  // namespace dyad
