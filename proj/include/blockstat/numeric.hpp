#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace blockstat::numeric {

/// Compensated (Neumaier) accumulator.  Order-sensitive only in the last ulp;
/// used wherever long sums of similar-magnitude terms feed a statistic.
struct CompensatedSum {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double x) noexcept {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            compensation += (sum - t) + x;
        } else {
            compensation += (x - t) + sum;
        }
        sum = t;
    }

    [[nodiscard]] double value() const noexcept { return sum + compensation; }
};

[[nodiscard]] inline double compensated_sum(std::span<const double> xs) noexcept {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

/// Fixed binary-tree reduction.  The association pattern depends only on the
/// input length, never on thread count, so results are bit-stable.
[[nodiscard]] inline double pairwise_sum(std::span<const double> xs) noexcept {
    const std::size_t n = xs.size();
    if (n <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

[[nodiscard]] inline double mean(std::span<const double> xs) noexcept {
    return xs.empty() ? 0.0 : compensated_sum(xs) / static_cast<double>(xs.size());
}

/// Sample variance with the n-1 divisor.
[[nodiscard]] inline double sample_variance(std::span<const double> xs) noexcept {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    const double m = mean(xs);
    CompensatedSum acc;
    for (double x : xs) {
        const double d = x - m;
        acc.add(d * d);
    }
    return acc.value() / static_cast<double>(n - 1);
}

[[nodiscard]] inline double l2_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// Worker cap shared by all parallelizable loops.  0 means "not set":
/// fall back to the BLOCKSTAT_THREADS environment variable, then to 1.
inline int& worker_cap_slot() {
    static int cap = 0;
    return cap;
}

inline void set_worker_cap(int cap) { worker_cap_slot() = cap; }

[[nodiscard]] inline int worker_cap() {
    int cap = worker_cap_slot();
    if (cap > 0) return cap;
    if (const char* env = std::getenv("BLOCKSTAT_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    return 1;
}

/// Runs fn(i) for i in [0, n).  Each index must write only to its own output
/// slot; with that contract the result is identical for every thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int cap = worker_cap();
    if (cap <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cap), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace blockstat::numeric
