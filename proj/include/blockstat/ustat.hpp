#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "blockstat/errors.hpp"
#include "blockstat/numeric.hpp"
#include "blockstat/quadrature.hpp"
#include "blockstat/rng.hpp"
#include "blockstat/stats.hpp"

namespace blockstat::ustat {

/// Symmetric pair kernel with the structure flags the evaluation and
/// quadrature paths need.  `difference_form` means h(x, y) = hd(x - y) with
/// hd even; `kink_on_diagonal` marks hd as non-smooth at zero so normal-law
/// expectations switch to split quadrature.
struct KernelSpec {
    std::string name;
    std::function<double(double, double)> h;
    bool difference_form = false;
    std::function<double(double)> hd;
    bool kink_on_diagonal = false;
    bool shift_invariant = false;
    double lipschitz_constant = 0.0;  // 0 = not globally Lipschitz
    double growth_constant = 0.0;     // C with |h| <= C(1+|x|+|y|); 0 = unbounded
};

namespace kernels {

/// Mean absolute pairwise difference (Gini-type kernel).
[[nodiscard]] inline KernelSpec gini() {
    KernelSpec k;
    k.name = "gini";
    k.h = [](double x, double y) { return std::abs(x - y); };
    k.difference_form = true;
    k.hd = [](double d) { return std::abs(d); };
    k.kink_on_diagonal = true;
    k.shift_invariant = true;
    k.lipschitz_constant = 1.0;
    k.growth_constant = 1.0;
    return k;
}

/// Pair sum; smooth but not shift-invariant.
[[nodiscard]] inline KernelSpec sum() {
    KernelSpec k;
    k.name = "sum";
    k.h = [](double x, double y) { return x + y; };
    k.shift_invariant = false;
    k.lipschitz_constant = 1.0;
    k.growth_constant = 1.0;
    return k;
}

/// Pair product; grows faster than linearly, so standardization against it
/// degenerates for centered inputs.
[[nodiscard]] inline KernelSpec product() {
    KernelSpec k;
    k.name = "product";
    k.h = [](double x, double y) { return x * y; };
    return k;
}

/// Squared pairwise difference; smooth difference kernel.
[[nodiscard]] inline KernelSpec squared_difference() {
    KernelSpec k;
    k.name = "sqdiff";
    k.h = [](double x, double y) { return (x - y) * (x - y); };
    k.difference_form = true;
    k.hd = [](double d) { return d * d; };
    k.shift_invariant = true;
    return k;
}

}  // namespace kernels

[[nodiscard]] inline KernelSpec kernel_by_name(const std::string& name) {
    if (name == "gini") return kernels::gini();
    if (name == "sum") return kernels::sum();
    if (name == "product") return kernels::product();
    if (name == "sqdiff") return kernels::squared_difference();
    throw IoError("unknown kernel '" + name + "'");
}

/// Sampled structural diagnostics for a kernel over [-range, range].
struct KernelValidation {
    double worst_symmetry_gap = 0.0;
    double worst_growth_ratio = 0.0;  // max |h| / (1 + |x| + |y|)
    double sampled_lipschitz = 0.0;
    bool growth_ok = true;
};

[[nodiscard]] inline KernelValidation validate_kernel(const KernelSpec& kernel, double range,
                                                      std::size_t samples, std::uint64_t seed) {
    const rng::CounterRng gen(rng::derive_key(seed, rng::tag_stream("kernel-validate")));
    KernelValidation report;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto idx = static_cast<std::int64_t>(i);
        const double x = range * (2.0 * gen.uniform(idx, 0) - 1.0);
        const double y = range * (2.0 * gen.uniform(idx, 1) - 1.0);
        const double xp = range * (2.0 * gen.uniform(idx, 2) - 1.0);
        const double hxy = kernel.h(x, y);
        report.worst_symmetry_gap =
            std::max(report.worst_symmetry_gap, std::abs(hxy - kernel.h(y, x)));
        report.worst_growth_ratio =
            std::max(report.worst_growth_ratio, std::abs(hxy) / (1.0 + std::abs(x) + std::abs(y)));
        const double denom = std::abs(x - xp);
        if (denom > 1e-12) {
            report.sampled_lipschitz =
                std::max(report.sampled_lipschitz, std::abs(hxy - kernel.h(xp, y)) / denom);
        }
    }
    if (kernel.growth_constant > 0.0) {
        report.growth_ok = report.worst_growth_ratio <= kernel.growth_constant * (1.0 + 1e-12);
    }
    return report;
}

/// Exact pair average (1 / (b(b-1))) sum_{j != k} h(W_j, W_k).  Row sums are
/// compensated and combined by a fixed pairwise tree, so the result does not
/// depend on the number of workers.
[[nodiscard]] inline double u_statistic(std::span<const double> w, const KernelSpec& kernel) {
    const std::size_t b = w.size();
    if (b < 2) throw TooFewBlocksError(b);
    std::vector<double> row_sums(b, 0.0);
    numeric::parallel_for(b, [&](std::size_t j) {
        numeric::CompensatedSum acc;
        const double wj = w[j];
        for (std::size_t k = 0; k < b; ++k) {
            if (k == j) continue;
            acc.add(kernel.h(wj, w[k]));
        }
        row_sums[j] = acc.value();
    });
    const double total = numeric::pairwise_sum(row_sums);
    return total / (static_cast<double>(b) * static_cast<double>(b - 1));
}

/// Sorted evaluation of the Gini-type statistic in O(b log b): with order
/// statistics W_(1) <= ... <= W_(b),
///   sum_{j != k} |W_j - W_k| = 2 sum_i (2i - 1 - b) W_(i).
[[nodiscard]] inline double gini_u_statistic(std::span<const double> w) {
    const std::size_t b = w.size();
    if (b < 2) throw TooFewBlocksError(b);
    std::vector<double> sorted(w.begin(), w.end());
    std::sort(sorted.begin(), sorted.end());
    numeric::CompensatedSum acc;
    const double db = static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        acc.add((2.0 * static_cast<double>(i + 1) - 1.0 - db) * sorted[i]);
    }
    return 2.0 * acc.value() / (db * (db - 1.0));
}

/// Dispatches to the sorted fast path when the kernel admits one.
[[nodiscard]] inline double u_statistic_auto(std::span<const double> w, const KernelSpec& kernel) {
    if (kernel.name == "gini") return gini_u_statistic(w);
    return u_statistic(w, kernel);
}

/// Reference distributions a block statistic can be projected against.
struct DiscreteDist {
    std::vector<double> atoms;
    std::vector<double> probs;
};

struct NormalDist {
    double sigma = 1.0;
};

struct EmpiricalDist {
    std::vector<double> sample;
};

using WDistribution = std::variant<DiscreteDist, NormalDist, EmpiricalDist>;

[[nodiscard]] inline DiscreteDist make_discrete(std::vector<double> atoms,
                                                std::vector<double> probs) {
    if (atoms.empty() || atoms.size() != probs.size()) {
        throw Error("discrete distribution: atoms and probabilities must match and be non-empty");
    }
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw Error("discrete distribution: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error("discrete distribution: probabilities sum to " + std::to_string(total));
    }
    return DiscreteDist{std::move(atoms), std::move(probs)};
}

/// First-order projection decomposition of a pair kernel under a reference
/// law: theta is the full mean, h1 the centered conditional mean, h2 the
/// doubly centered remainder.  h = theta + h1(x) + h1(y) + h2(x, y) exactly.
struct HoeffdingParts {
    double theta = 0.0;
    std::function<double(double)> h1;
    std::function<double(double, double)> h2;
    std::string mode;
};

namespace detail {

/// Conditional mean m(x) = E h(x, W) under a normal reference, routed through
/// the closed form or kink-aware quadrature as the kernel structure allows.
[[nodiscard]] inline std::function<double(double)> normal_conditional_mean(
    const KernelSpec& kernel, double sigma) {
    if (kernel.name == "gini") {
        return [sigma](double x) { return quad::folded_normal_mean(x, sigma); };
    }
    if (kernel.difference_form && !kernel.kink_on_diagonal) {
        const auto hd = kernel.hd;
        return [hd, sigma](double x) {
            return quad::normal_expectation([&](double z) { return hd(x - sigma * z); });
        };
    }
    if (kernel.kink_on_diagonal || kernel.difference_form) {
        const auto h = kernel.h;
        return [h, sigma](double x) {
            const double kink[1] = {x / sigma};
            return quad::normal_expectation_split(
                [&](double z) { return h(x, sigma * z); }, kink);
        };
    }
    const auto h = kernel.h;
    return [h, sigma](double x) {
        return quad::normal_expectation([&](double z) { return h(x, sigma * z); });
    };
}

}  // namespace detail

[[nodiscard]] inline HoeffdingParts hoeffding(const KernelSpec& kernel, const WDistribution& dist) {
    HoeffdingParts parts;
    const auto h = kernel.h;
    std::function<double(double)> m;
    if (const auto* discrete = std::get_if<DiscreteDist>(&dist)) {
        const DiscreteDist d = *discrete;
        m = [h, d](double x) {
            numeric::CompensatedSum acc;
            for (std::size_t i = 0; i < d.atoms.size(); ++i) acc.add(d.probs[i] * h(x, d.atoms[i]));
            return acc.value();
        };
        numeric::CompensatedSum acc;
        for (std::size_t i = 0; i < discrete->atoms.size(); ++i) {
            acc.add(discrete->probs[i] * m(discrete->atoms[i]));
        }
        parts.theta = acc.value();
        parts.mode = "exact-discrete";
    } else if (const auto* normal = std::get_if<NormalDist>(&dist)) {
        if (!(normal->sigma > 0.0)) throw Error("normal reference: sigma must be positive");
        const double sigma = normal->sigma;
        m = detail::normal_conditional_mean(kernel, sigma);
        parts.theta = quad::normal_expectation([&m, sigma](double z) { return m(sigma * z); });
        parts.mode = "gaussian-quadrature";
    } else {
        const auto& empirical = std::get<EmpiricalDist>(dist);
        if (empirical.sample.empty()) throw EmptySeriesError("hoeffding: empty empirical sample");
        const std::vector<double> sample = empirical.sample;
        const double inv_n = 1.0 / static_cast<double>(sample.size());
        m = [h, sample, inv_n](double x) {
            numeric::CompensatedSum acc;
            for (double s : sample) acc.add(h(x, s));
            return acc.value() * inv_n;
        };
        numeric::CompensatedSum acc;
        for (double s : sample) acc.add(m(s));
        parts.theta = acc.value() * inv_n;
        parts.mode = "empirical";
    }
    const double theta = parts.theta;
    parts.h1 = [m, theta](double x) { return m(x) - theta; };
    const auto h1 = parts.h1;
    parts.h2 = [h, h1, theta](double x, double y) { return h(x, y) - h1(x) - h1(y) - theta; };
    return parts;
}

/// Positivity tolerance below which the projection variance is treated as
/// degenerate.
inline constexpr double kGammaTolerance = 1e-12;

/// Variance of the first-order projection under the reference law.  This
/// equals the lag-one pair covariance Cov(h(W1, W2), h(W2, W3)) for three
/// independent copies; throws when it is numerically degenerate.
[[nodiscard]] inline double gamma_n_squared(const KernelSpec& kernel, const WDistribution& dist) {
    const HoeffdingParts parts = hoeffding(kernel, dist);
    double variance = 0.0;
    if (const auto* discrete = std::get_if<DiscreteDist>(&dist)) {
        numeric::CompensatedSum acc;
        for (std::size_t i = 0; i < discrete->atoms.size(); ++i) {
            const double v = parts.h1(discrete->atoms[i]);
            acc.add(discrete->probs[i] * v * v);
        }
        variance = acc.value();
    } else if (const auto* normal = std::get_if<NormalDist>(&dist)) {
        const double sigma = normal->sigma;
        variance = quad::normal_expectation([&parts, sigma](double z) {
            const double v = parts.h1(sigma * z);
            return v * v;
        });
    } else {
        const auto& empirical = std::get<EmpiricalDist>(dist);
        numeric::CompensatedSum acc;
        for (double s : empirical.sample) {
            const double v = parts.h1(s);
            acc.add(v * v);
        }
        variance = acc.value() / static_cast<double>(empirical.sample.size());
    }
    if (!(variance > kGammaTolerance)) {
        throw DegenerateKernelError("projection variance " + std::to_string(variance) +
                                    " is degenerate for kernel '" + kernel.name + "'");
    }
    return variance;
}

/// Result of a single standardized constancy test.
struct TestReport {
    double u_stat = 0.0;
    double centering = 0.0;
    std::string centering_method;
    double gamma_sq = 0.0;
    double standardized = 0.0;
    double p_value = 1.0;
    std::size_t block_count = 0;
    std::size_t block_length = 0;
    std::size_t dropped = 0;
    std::map<std::string, double> diagnostics;
};

/// Standardizes the pair statistic of the block values against a centering
/// and a projection variance: sqrt(b) (U - centering) / (2 gamma).
[[nodiscard]] inline TestReport standardized_statistic(std::span<const double> w,
                                                       const KernelSpec& kernel, double centering,
                                                       double gamma_sq,
                                                       const std::string& centering_method = "given") {
    if (w.size() < 2) throw TooFewBlocksError(w.size());
    if (!(gamma_sq > kGammaTolerance)) {
        throw DegenerateKernelError("projection variance " + std::to_string(gamma_sq) +
                                    " is degenerate; standardization refused");
    }
    TestReport report;
    report.u_stat = u_statistic_auto(w, kernel);
    report.centering = centering;
    report.centering_method = centering_method;
    report.gamma_sq = gamma_sq;
    report.block_count = w.size();
    const double b = static_cast<double>(w.size());
    report.standardized = std::sqrt(b) * (report.u_stat - centering) / (2.0 * std::sqrt(gamma_sq));
    report.p_value = stats::two_sided_p_value(report.standardized);
    return report;
}

}  // namespace blockstat::ustat
