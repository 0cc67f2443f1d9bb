#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace qkd3 {

/// Worker count used when callers pass 0.
inline unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/**
 * Run body(worker, begin, end) over contiguous slices of [0, n) on up to
 * `threads` workers and return how many workers were used. Slices are
 * disjoint, so a body that writes only to its own indices gives the same
 * result for any worker count.
 */
template <class Body>
std::size_t parallel_slices(std::uint64_t n, unsigned threads, Body&& body) {
    if (threads == 0) {
        threads = default_threads();
    }
    const std::uint64_t workers = std::max<std::uint64_t>(1, std::min<std::uint64_t>(threads, n));
    if (workers == 1) {
        body(std::size_t{0}, std::uint64_t{0}, n);
        return 1;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint64_t w = 0; w < workers; ++w) {
        const std::uint64_t begin = n * w / workers;
        const std::uint64_t end = n * (w + 1) / workers;
        pool.emplace_back([&body, &errors, w, begin, end] {
            try {
                body(static_cast<std::size_t>(w), begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return workers;
}

/// Number of indices in [0, n) for which pred(i) holds. Counts are summed as
/// integers, so the total does not depend on how the range is split.
template <class Pred>
std::uint64_t parallel_count(std::uint64_t n, unsigned threads, Pred&& pred) {
    std::vector<std::uint64_t> hits(threads == 0 ? default_threads() : threads, 0);
    parallel_slices(n, static_cast<unsigned>(hits.size()),
                    [&](std::size_t worker, std::uint64_t begin, std::uint64_t end) {
                        std::uint64_t local = 0;
                        for (std::uint64_t i = begin; i < end; ++i) {
                            if (pred(i)) {
                                ++local;
                            }
                        }
                        hits[worker] = local;
                    });
    std::uint64_t total = 0;
    for (auto h : hits) {
        total += h;
    }
    return total;
}

}  // namespace qkd3
