#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "blockstat/errors.hpp"
#include "blockstat/numeric.hpp"

namespace blockstat::stats {

[[nodiscard]] inline double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF via the complementary error function (accurate in both
/// tails, unlike 0.5*(1+erf)).
[[nodiscard]] inline double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Two-sided tail probability of |Z| >= |z| for Z standard normal.
[[nodiscard]] inline double two_sided_p_value(double z) noexcept {
    return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

/// Kolmogorov-Smirnov distance between the sample and a reference CDF.
[[nodiscard]] inline double ks_distance(std::span<const double> sample,
                                        const std::function<double(double)>& cdf) {
    if (sample.empty()) throw EmptySeriesError("ks_distance: empty sample");
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    return d;
}

/// Anderson-Darling statistic against a reference CDF.  Secondary diagnostic:
/// more weight in the tails than the KS distance.
[[nodiscard]] inline double anderson_darling(std::span<const double> sample,
                                             const std::function<double(double)>& cdf) {
    if (sample.empty()) throw EmptySeriesError("anderson_darling: empty sample");
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    const double dn = static_cast<double>(n);
    constexpr double kClamp = 1e-15;
    numeric::CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i) {
        const double fi = std::clamp(cdf(xs[i]), kClamp, 1.0 - kClamp);
        const double fj = std::clamp(cdf(xs[n - 1 - i]), kClamp, 1.0 - kClamp);
        acc.add((2.0 * static_cast<double>(i) + 1.0) * (std::log(fi) + std::log1p(-fj)));
    }
    return -dn - acc.value() / dn;
}

/// Fraction of p-values strictly below the nominal level.
[[nodiscard]] inline double rejection_rate(std::span<const double> p_values, double level) noexcept {
    if (p_values.empty()) return 0.0;
    std::size_t hits = 0;
    for (double p : p_values) {
        if (p < level) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(p_values.size());
}

}  // namespace blockstat::stats
