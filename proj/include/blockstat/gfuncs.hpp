#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blockstat/errors.hpp"
#include "blockstat/numeric.hpp"
#include "blockstat/rng.hpp"

namespace blockstat::gfuncs {

/// Radial cutoff profile around a reference moment vector: identically one
/// inside `radius`, identically zero beyond twice `radius`, quintic
/// smoothstep in between (twice continuously differentiable everywhere).
struct EtaSpec {
    std::vector<double> v0;
    double radius = 0.0;
};

[[nodiscard]] inline double eta(const EtaSpec& spec, std::span<const double> x) {
    if (x.size() != spec.v0.size()) {
        throw DegenerateMomentsError("eta: dimension mismatch");
    }
    if (spec.radius <= 0.0) throw DegenerateMomentsError("eta: radius must be positive");
    const double r = numeric::l2_distance(x, spec.v0);
    if (r <= spec.radius) return 1.0;
    if (r >= 2.0 * spec.radius) return 0.0;
    const double t = (2.0 * spec.radius - r) / spec.radius;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// A smooth functional of the first m raw moments, with its gradient, the
/// reference moment vector it is centered at, and the cutoff radius used by
/// the truncated evaluation.  Presets are centered so evaluate(v0) == 0.
struct GSpec {
    std::string name;
    std::size_t m = 0;
    std::vector<double> v0;
    double radius = 0.0;
    bool centered = false;
    double offset = 0.0;
    std::function<double(std::span<const double>)> raw;
    std::function<void(std::span<const double>, std::span<double>)> gradient_fn;

    [[nodiscard]] double evaluate(std::span<const double> x) const { return raw(x) - offset; }

    void gradient(std::span<const double> x, std::span<double> out) const {
        gradient_fn(x, out);
    }

    [[nodiscard]] std::vector<double> gradient_at(std::span<const double> x) const {
        std::vector<double> out(m, 0.0);
        gradient(x, out);
        return out;
    }

    /// Cutoff-weighted evaluation; never calls the raw functional outside the
    /// support of the cutoff, so distant moment vectors cost nothing and
    /// cannot trip domain errors.
    [[nodiscard]] double truncated(std::span<const double> x) const {
        const double r = numeric::l2_distance(x, v0);
        if (r >= 2.0 * radius) return 0.0;
        const double weight = eta(EtaSpec{v0, radius}, x);
        return evaluate(x) * weight;
    }
};

/// Default cutoff radius: half the reference central second moment, shrunk by
/// the square root of the moment order so higher-order functionals keep the
/// cutoff inside their domain.
[[nodiscard]] inline double default_radius(std::span<const double> v0, std::size_t m) {
    if (v0.size() < 2) {
        throw DegenerateMomentsError("default_radius: need at least two reference moments");
    }
    const double central = v0[1] - v0[0] * v0[0];
    if (!(central > 0.0)) {
        throw DegenerateMomentsError("default_radius: central second moment must be positive");
    }
    return central / (2.0 * std::sqrt(static_cast<double>(m)));
}

namespace detail {

inline void require_admissible(std::span<const double> v0, std::size_t m, const std::string& name) {
    if (v0.size() != m) {
        throw DegenerateMomentsError(name + ": reference vector must have " + std::to_string(m) +
                                     " moments, got " + std::to_string(v0.size()));
    }
    const double central = v0[1] - v0[0] * v0[0];
    if (!(central > 0.0)) {
        throw DegenerateMomentsError(name + ": central second moment of reference is not positive");
    }
}

}  // namespace detail

/// Log of the central second moment, centered at the reference.
[[nodiscard]] inline GSpec log_variance_g(std::vector<double> v0, double radius = 0.0) {
    detail::require_admissible(v0, 2, "log_variance");
    GSpec g;
    g.name = "log_variance";
    g.m = 2;
    g.v0 = std::move(v0);
    g.radius = radius > 0.0 ? radius : default_radius(g.v0, g.m);
    g.raw = [](std::span<const double> x) { return std::log(x[1] - x[0] * x[0]); };
    g.gradient_fn = [](std::span<const double> x, std::span<double> out) {
        const double s = x[1] - x[0] * x[0];
        out[0] = -2.0 * x[0] / s;
        out[1] = 1.0 / s;
    };
    g.offset = g.raw(g.v0);
    g.centered = true;
    return g;
}

/// Standardized third central moment, centered at the reference.
[[nodiscard]] inline GSpec skewness_g(std::vector<double> v0, double radius = 0.0) {
    detail::require_admissible(v0, 3, "skewness");
    GSpec g;
    g.name = "skewness";
    g.m = 3;
    g.v0 = std::move(v0);
    g.radius = radius > 0.0 ? radius : default_radius(g.v0, g.m);
    g.raw = [](std::span<const double> x) {
        const double s = x[1] - x[0] * x[0];
        const double num = x[2] - 3.0 * x[0] * x[1] + 2.0 * x[0] * x[0] * x[0];
        return num / std::pow(s, 1.5);
    };
    g.gradient_fn = [](std::span<const double> x, std::span<double> out) {
        const double s = x[1] - x[0] * x[0];
        const double num = x[2] - 3.0 * x[0] * x[1] + 2.0 * x[0] * x[0] * x[0];
        const double s32 = std::pow(s, 1.5);
        const double s52 = s32 * s;
        out[0] = (-3.0 * x[1] + 6.0 * x[0] * x[0]) / s32 + 3.0 * x[0] * num / s52;
        out[1] = -3.0 * x[0] / s32 - 1.5 * num / s52;
        out[2] = 1.0 / s32;
    };
    g.offset = g.raw(g.v0);
    g.centered = true;
    return g;
}

/// Fourth standardized central moment minus three, centered at the reference.
[[nodiscard]] inline GSpec excess_kurtosis_g(std::vector<double> v0, double radius = 0.0) {
    detail::require_admissible(v0, 4, "excess_kurtosis");
    GSpec g;
    g.name = "excess_kurtosis";
    g.m = 4;
    g.v0 = std::move(v0);
    g.radius = radius > 0.0 ? radius : default_radius(g.v0, g.m);
    g.raw = [](std::span<const double> x) {
        const double s = x[1] - x[0] * x[0];
        const double x0sq = x[0] * x[0];
        const double num = x[3] - 4.0 * x[0] * x[2] + 6.0 * x0sq * x[1] - 3.0 * x0sq * x0sq;
        return num / (s * s) - 3.0;
    };
    g.gradient_fn = [](std::span<const double> x, std::span<double> out) {
        const double s = x[1] - x[0] * x[0];
        const double x0sq = x[0] * x[0];
        const double num = x[3] - 4.0 * x[0] * x[2] + 6.0 * x0sq * x[1] - 3.0 * x0sq * x0sq;
        const double s2 = s * s;
        const double s3 = s2 * s;
        out[0] = (-4.0 * x[2] + 12.0 * x[0] * x[1] - 12.0 * x0sq * x[0]) / s2 +
                 4.0 * x[0] * num / s3;
        out[1] = 6.0 * x0sq / s2 - 2.0 * num / s3;
        out[2] = -4.0 * x[0] / s2;
        out[3] = 1.0 / s2;
    };
    g.offset = g.raw(g.v0);
    g.centered = true;
    return g;
}

/// Preset registry keyed by name.
[[nodiscard]] inline GSpec preset_g(const std::string& name, std::vector<double> v0,
                                    double radius = 0.0) {
    if (name == "log_variance") return log_variance_g(std::move(v0), radius);
    if (name == "skewness") return skewness_g(std::move(v0), radius);
    if (name == "excess_kurtosis") return excess_kurtosis_g(std::move(v0), radius);
    throw DegenerateMomentsError("preset_g: unknown preset '" + name + "'");
}

/// Builds a user-defined functional.  `centered` subtracts raw(v0) so the
/// evaluation vanishes at the reference; the gradient is untouched.
[[nodiscard]] inline GSpec custom_g(std::string name, std::size_t m, std::vector<double> v0,
                                    double radius,
                                    std::function<double(std::span<const double>)> raw,
                                    std::function<void(std::span<const double>, std::span<double>)> grad,
                                    bool centered) {
    if (v0.size() != m) throw DegenerateMomentsError("custom_g: reference size must equal m");
    if (!(radius > 0.0)) throw DegenerateMomentsError("custom_g: radius must be positive");
    GSpec g;
    g.name = std::move(name);
    g.m = m;
    g.v0 = std::move(v0);
    g.radius = radius;
    g.raw = std::move(raw);
    g.gradient_fn = std::move(grad);
    g.offset = centered ? g.raw(g.v0) : 0.0;
    g.centered = centered;
    return g;
}

/// Maximum relative discrepancy between the analytic gradient and central
/// finite differences at `point`.
[[nodiscard]] inline double gradient_check(const GSpec& g, std::span<const double> point,
                                           double step = 1e-6) {
    std::vector<double> analytic(g.m, 0.0);
    std::vector<double> shifted(point.begin(), point.end());
    g.gradient(point, analytic);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.m; ++k) {
        shifted[k] = point[k] + step;
        const double up = g.evaluate(shifted);
        shifted[k] = point[k] - step;
        const double down = g.evaluate(shifted);
        shifted[k] = point[k];
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw DomainViolationError("gradient_check: functional not finite near point");
        }
        const double fd = (up - down) / (2.0 * step);
        const double err = std::abs(analytic[k] - fd) / std::max(1.0, std::abs(analytic[k]));
        worst = std::max(worst, err);
    }
    return worst;
}

/// Sampled Lipschitz diagnostic for the cutoff-weighted functional: the
/// largest difference quotient over random pairs inside a ball of 2.5 times
/// the cutoff radius around the reference.
[[nodiscard]] inline double lipschitz_estimate(const GSpec& g, std::size_t pairs,
                                               std::uint64_t seed) {
    const rng::CounterRng gen(rng::derive_key(seed, rng::tag_stream("lipschitz")));
    const double sample_radius = 2.5 * g.radius;
    const auto draw_point = [&](std::int64_t index, std::uint64_t base_slot) {
        std::vector<double> x(g.m, 0.0);
        double norm_sq = 0.0;
        for (std::size_t k = 0; k < g.m; ++k) {
            x[k] = gen.normal(index, base_slot + k);
            norm_sq += x[k] * x[k];
        }
        const double u = gen.uniform(index, base_slot + 2 * g.m + 31);
        const double r = sample_radius * std::pow(u, 1.0 / static_cast<double>(g.m));
        const double scale = norm_sq > 0.0 ? r / std::sqrt(norm_sq) : 0.0;
        for (std::size_t k = 0; k < g.m; ++k) x[k] = g.v0[k] + scale * x[k];
        return x;
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto idx = static_cast<std::int64_t>(i);
        const auto x = draw_point(idx, 0);
        const auto y = draw_point(idx, 64);
        const double dist = numeric::l2_distance(x, y);
        if (dist < 1e-12) continue;
        const double q = std::abs(g.truncated(x) - g.truncated(y)) / dist;
        worst = std::max(worst, q);
    }
    return worst;
}

}  // namespace blockstat::gfuncs
