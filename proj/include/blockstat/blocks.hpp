#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blockstat/errors.hpp"
#include "blockstat/gfuncs.hpp"
#include "blockstat/numeric.hpp"

namespace blockstat {

/// An observed univariate series.  Entries must be finite.
struct Series {
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

[[nodiscard]] inline Series make_series(std::vector<double> values) {
    if (values.empty()) throw EmptySeriesError();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw IoError("series value at position " + std::to_string(i) + " is not finite");
        }
    }
    return Series{std::move(values)};
}

}  // namespace blockstat

namespace blockstat::blocks {

/// Partition of the first block_count * block_length observations into
/// consecutive non-overlapping blocks; the tail remainder is dropped.
struct BlockScheme {
    std::size_t block_length = 0;
    std::size_t block_count = 0;
    std::size_t dropped = 0;
};

[[nodiscard]] inline BlockScheme partition(std::size_t n, std::size_t block_length) {
    if (n == 0) throw EmptySeriesError("partition: series has no observations");
    if (block_length == 0) throw Error("partition: block length must be at least 1");
    if (block_length > n) throw BlockTooLongError(block_length, n);
    BlockScheme scheme;
    scheme.block_length = block_length;
    scheme.block_count = n / block_length;
    scheme.dropped = n - scheme.block_count * scheme.block_length;
    return scheme;
}

[[nodiscard]] inline BlockScheme partition(const Series& series, std::size_t block_length) {
    return partition(series.size(), block_length);
}

/// Per-block raw empirical moments up to a given order, stored row-major:
/// row j holds the first `order` moments of block j.
struct LocalMoments {
    std::size_t block_count = 0;
    std::size_t block_length = 0;
    std::size_t order = 0;
    std::vector<double> data;

    [[nodiscard]] double at(std::size_t block, std::size_t moment) const noexcept {
        return data[block * order + moment];
    }

    [[nodiscard]] std::span<const double> row(std::size_t block) const noexcept {
        return std::span<const double>(data).subspan(block * order, order);
    }
};

/// Computes, for every block, the raw moments (1/l) sum_t x_t^k, k = 1..order.
/// Each block's sums are compensated so the result is permutation-stable
/// within a block up to roundoff in the last ulp.
[[nodiscard]] inline LocalMoments local_moments(const Series& series, const BlockScheme& scheme,
                                                std::size_t order) {
    if (order == 0) throw Error("local_moments: order must be at least 1");
    LocalMoments out;
    out.block_count = scheme.block_count;
    out.block_length = scheme.block_length;
    out.order = order;
    out.data.assign(scheme.block_count * order, 0.0);
    const double inv_l = 1.0 / static_cast<double>(scheme.block_length);
    std::vector<numeric::CompensatedSum> acc(order);
    for (std::size_t j = 0; j < scheme.block_count; ++j) {
        for (auto& a : acc) a = numeric::CompensatedSum{};
        const std::size_t begin = j * scheme.block_length;
        for (std::size_t t = 0; t < scheme.block_length; ++t) {
            const double x = series.values[begin + t];
            double p = 1.0;
            for (std::size_t k = 0; k < order; ++k) {
                p *= x;
                acc[k].add(p);
            }
        }
        for (std::size_t k = 0; k < order; ++k) {
            out.data[j * order + k] = acc[k].value() * inv_l;
        }
    }
    return out;
}

/// Block-local statistics W_j = sqrt(l) * g(moments of block j), optionally
/// with the cutoff weight applied.  A non-finite value names the offending
/// block; with the cutoff active that can only happen if the functional
/// misbehaves inside its own support.
[[nodiscard]] inline std::vector<double> local_statistics(const LocalMoments& moments,
                                                          const gfuncs::GSpec& g,
                                                          bool truncated = false) {
    if (moments.order != g.m) {
        throw DegenerateMomentsError("local_statistics: moment order " +
                                     std::to_string(moments.order) + " does not match functional order " +
                                     std::to_string(g.m));
    }
    const double scale = std::sqrt(static_cast<double>(moments.block_length));
    std::vector<double> stats(moments.block_count, 0.0);
    for (std::size_t j = 0; j < moments.block_count; ++j) {
        const auto row = moments.row(j);
        const double value = truncated ? g.truncated(row) : g.evaluate(row);
        if (!std::isfinite(value)) {
            throw DomainViolationError(g.name + " evaluated to a non-finite value", j);
        }
        stats[j] = scale * value;
    }
    return stats;
}

/// Convenience: series -> partition -> moments -> statistics in one call.
[[nodiscard]] inline std::vector<double> local_statistics(const Series& series,
                                                          std::size_t block_length,
                                                          const gfuncs::GSpec& g,
                                                          bool truncated = false) {
    const BlockScheme scheme = partition(series, block_length);
    const LocalMoments moments = local_moments(series, scheme, g.m);
    return local_statistics(moments, g, truncated);
}

}  // namespace blockstat::blocks
