#ifndef COS2PHI_PARALLEL_HPP
#define COS2PHI_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace cos2phi {

// Evaluates fn(i) for i in [0, n) on up to `workers` threads. Results are
// stored by index, so the output order never depends on the pool size. fn
// must not throw; capture per-item errors in the result type.
template <typename Fn>
auto parallel_map(std::size_t n, int workers, Fn &&fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using T = decltype(fn(std::size_t{}));
    std::vector<T> out(n);
    const std::size_t pool = std::clamp<std::size_t>(workers > 0 ? workers : 1, 1, std::max<std::size_t>(n, 1));
    if (pool == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
        });
    }
    for (auto &th : threads) th.join();
    return out;
}

}  // namespace cos2phi

#endif  // COS2PHI_PARALLEL_HPP
