#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "blockstat/numeric.hpp"
#include "blockstat/stats.hpp"

namespace blockstat::quad {

/// Nodes and weights of a one-dimensional quadrature rule.
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Order used for expectations of smooth functions under a normal law.
inline constexpr int kHermiteOrder = 64;

namespace detail {

/// Gauss-Legendre rule on [-1, 1]: Newton refinement of Chebyshev-like
/// initial guesses against the three-term recurrence.
inline Rule build_gauss_legendre(int n) {
    Rule rule;
    rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
    rule.weights.assign(static_cast<std::size_t>(n), 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        rule.nodes[static_cast<std::size_t>(i)] = -z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

/// Gauss-Hermite rule for the weight exp(-x^2).  Works on the orthonormal
/// recurrence so intermediate values never overflow, with Christoffel weights
/// 1 / sum_k p_k(x_i)^2.
inline Rule build_gauss_hermite(int n) {
    Rule rule;
    rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
    rule.weights.assign(static_cast<std::size_t>(n), 0.0);
    const double pi_m4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    const int half = (n + 1) / 2;
    std::vector<double> roots(static_cast<std::size_t>(half), 0.0);
    for (int i = 0; i < half; ++i) {
        double z = 0.0;
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z = roots[0] - 1.14 * std::pow(static_cast<double>(n), 0.426) / roots[0];
        } else if (i == 2) {
            z = 1.86 * roots[1] - 0.86 * roots[0];
        } else if (i == 3) {
            z = 1.91 * roots[2] - 0.91 * roots[1];
        } else {
            z = 2.0 * roots[static_cast<std::size_t>(i - 1)] - roots[static_cast<std::size_t>(i - 2)];
        }
        double pm1 = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            double p0 = pi_m4;
            double p1 = std::numbers::sqrt2 * z * pi_m4;
            for (int j = 1; j < n; ++j) {
                const double p2 = z * std::sqrt(2.0 / (j + 1.0)) * p1 -
                                  std::sqrt(static_cast<double>(j) / (j + 1.0)) * p0;
                p0 = p1;
                p1 = p2;
            }
            pm1 = p0;  // p_{n-1}(z)
            const double deriv = std::sqrt(2.0 * n) * p0;
            const double z1 = z;
            z = z1 - p1 / deriv;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        roots[static_cast<std::size_t>(i)] = z;
        // Christoffel weight: one clean pass accumulating sum_k p_k(z)^2.
        double p0 = pi_m4;
        double p1 = std::numbers::sqrt2 * z * pi_m4;
        double norm = p0 * p0;
        for (int j = 1; j < n; ++j) {
            norm += p1 * p1;
            const double p2 = z * std::sqrt(2.0 / (j + 1.0)) * p1 -
                              std::sqrt(static_cast<double>(j) / (j + 1.0)) * p0;
            p0 = p1;
            p1 = p2;
        }
        const double w = 1.0 / norm;
        rule.nodes[static_cast<std::size_t>(half - 1 - i)] = -z;
        rule.nodes[static_cast<std::size_t>(n - half + i)] = z;
        rule.weights[static_cast<std::size_t>(half - 1 - i)] = w;
        rule.weights[static_cast<std::size_t>(n - half + i)] = w;
        (void)pm1;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(half - 1)] = 0.0;
    return rule;
}

template <Rule (*Builder)(int)>
const Rule& cached_rule(int n) {
    static std::map<int, Rule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, Builder(n)).first;
    return it->second;
}

}  // namespace detail

[[nodiscard]] inline const Rule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
    return detail::cached_rule<detail::build_gauss_legendre>(n);
}

[[nodiscard]] inline const Rule& gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be positive");
    return detail::cached_rule<detail::build_gauss_hermite>(n);
}

/// Integral of f over [a, b] with a single Gauss-Legendre panel.
[[nodiscard]] inline double integrate_panel(const std::function<double(double)>& f, double a,
                                            double b, int order = 32) {
    const Rule& rule = gauss_legendre(order);
    const double mid = 0.5 * (a + b);
    const double halfwidth = 0.5 * (b - a);
    numeric::CompensatedSum acc;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        acc.add(rule.weights[i] * f(mid + halfwidth * rule.nodes[i]));
    }
    return halfwidth * acc.value();
}

/// E f(Z), Z standard normal, for smooth f: transformed Gauss-Hermite sum.
[[nodiscard]] inline double normal_expectation(const std::function<double(double)>& f,
                                               int order = kHermiteOrder) {
    const Rule& rule = gauss_hermite(order);
    numeric::CompensatedSum acc;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        acc.add(rule.weights[i] * f(std::numbers::sqrt2 * rule.nodes[i]));
    }
    return acc.value() / std::sqrt(std::numbers::pi);
}

/// E f(Z) for f with known kinks (points where f is continuous but not
/// smooth).  Splits the integration range at each kink and integrates the
/// density-weighted integrand on composite Gauss-Legendre panels; this keeps
/// spectral accuracy that a Hermite rule loses on non-smooth integrands.
[[nodiscard]] inline double normal_expectation_split(const std::function<double(double)>& f,
                                                     std::span<const double> kinks,
                                                     double tail_cut = 14.0) {
    std::vector<double> breaks{-tail_cut, tail_cut};
    for (double k : kinks) {
        if (k > -tail_cut && k < tail_cut) breaks.push_back(k);
    }
    std::sort(breaks.begin(), breaks.end());
    numeric::CompensatedSum acc;
    const auto weighted = [&f](double x) { return f(x) * stats::normal_pdf(x); };
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p];
        const double b = breaks[p + 1];
        if (b - a <= 0.0) continue;
        const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 2.0)));
        for (int q = 0; q < panels; ++q) {
            const double lo = a + (b - a) * q / panels;
            const double hi = a + (b - a) * (q + 1) / panels;
            acc.add(integrate_panel(weighted, lo, hi));
        }
    }
    return acc.value();
}

/// E |mu + sigma Z| in closed form (mean of a folded normal).
[[nodiscard]] inline double folded_normal_mean(double mu, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("folded_normal_mean: sigma must be >= 0");
    if (sigma == 0.0) return std::abs(mu);
    const double t = mu / sigma;
    return sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * t * t) +
           mu * std::erf(t / std::numbers::sqrt2);
}

/// Probabilists' Hermite polynomial He_q (monic; He_0 = 1, He_1 = x,
/// He_{q+1} = x He_q - q He_{q-1}).  E He_q(Z)^2 = q! for Z standard normal.
[[nodiscard]] inline double hermite_probabilist(int q, double x) {
    if (q < 0) throw std::invalid_argument("hermite_probabilist: negative degree");
    if (q == 0) return 1.0;
    double hm1 = 1.0;
    double h = x;
    for (int j = 1; j < q; ++j) {
        const double next = x * h - j * hm1;
        hm1 = h;
        h = next;
    }
    return h;
}

}  // namespace blockstat::quad
