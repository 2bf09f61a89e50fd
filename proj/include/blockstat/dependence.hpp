#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "blockstat/errors.hpp"
#include "blockstat/numeric.hpp"
#include "blockstat/processes.hpp"
#include "blockstat/rng.hpp"

namespace blockstat::dependence {

/// Default half-width of the coupling window scanned by profiles.
inline constexpr int kDefaultWindow = 256;

/// One estimated coupling coefficient ||X_0^k - X_0^{*,i,k}||_p.
struct DeltaEstimate {
    double value = 0.0;
    double stderr_value = 0.0;
    bool analytic = false;
};

enum class DeltaMode { automatic, monte_carlo };

namespace detail {

/// Half-width of the exact dependence window: the coupling coefficient is
/// identically zero for |i| beyond this.  nullopt means unbounded (never the
/// case for the variants here, all of which use truncated filters).
[[nodiscard]] inline std::optional<int> dependence_window(const processes::ProcessSpec& spec) {
    using namespace processes;
    if (std::get_if<IidSpec>(&spec.variant) || std::get_if<PathologicalSpec>(&spec.variant)) {
        return 0;
    }
    const auto filter_window = [](const CoeffSpec& coeffs) {
        const Filter f = materialize(coeffs);
        return std::max(std::abs(f.min_lag), std::abs(f.max_lag()));
    };
    if (const auto* lin = std::get_if<LinearSpec>(&spec.variant)) return filter_window(lin->coeffs);
    if (const auto* hoe = std::get_if<HoelderLinearSpec>(&spec.variant)) {
        return filter_window(hoe->coeffs);
    }
    if (const auto* gh = std::get_if<GaussianHermiteSpec>(&spec.variant)) {
        return filter_window(gh->coeffs);
    }
    const auto& vol = std::get<VolterraSpec>(spec.variant);
    int w = 0;
    for (const auto& e : vol.entries) {
        w = std::max({w, std::abs(e.lag_a), std::abs(e.lag_b)});
    }
    return w;
}

/// For a pure linear variant the coupling difference is exactly
/// a_{-i} (eps_i - eps_i'), so the k = 1 coefficient has the closed form
/// |a_{-i}| ||eps - eps'||_p.
[[nodiscard]] inline std::optional<double> analytic_linear_delta(
    const processes::ProcessSpec& spec, std::size_t power, std::int64_t i, double p) {
    const auto* lin = std::get_if<processes::LinearSpec>(&spec.variant);
    if (lin == nullptr || power != 1) return std::nullopt;
    const processes::Filter f = processes::materialize(lin->coeffs);
    const double coeff = f.at_lag(static_cast<int>(-i));
    const double norm =
        std::pow(processes::innovation_diff_abs_moment(lin->innovation, p), 1.0 / p);
    return std::abs(coeff) * norm;
}

}  // namespace detail

/// Estimates delta_{i,p}(X^k) = ||X_0^k - X_0^{*,i,k}||_p by replicated exact
/// coupling (or the linear closed form when available and mode allows it).
///
/// Outside the dependence window the coupled paths coincide and the value is
/// exactly zero with zero error; no sampling is spent there.
[[nodiscard]] inline DeltaEstimate delta(const processes::ProcessSpec& spec, std::size_t power,
                                         std::int64_t i, double p, std::size_t replications,
                                         DeltaMode mode = DeltaMode::automatic) {
    if (power < 1) throw Error("delta: power index must be at least 1");
    if (!(p > 0.0)) throw Error("delta: p must be positive");
    DeltaEstimate out;
    if (const auto window = detail::dependence_window(spec)) {
        if (std::abs(i) > static_cast<std::int64_t>(*window)) {
            out.analytic = true;
            return out;  // exactly zero
        }
    }
    if (mode == DeltaMode::automatic) {
        if (const auto closed = detail::analytic_linear_delta(spec, power, i, p)) {
            out.value = *closed;
            out.analytic = true;
            return out;
        }
    }
    if (replications < 100) {
        throw Error("delta: need at least 100 replications for a Monte Carlo estimate");
    }
    std::vector<double> samples(replications, 0.0);
    numeric::parallel_for(replications, [&](std::size_t r) {
        const auto [x0, x0s] = processes::coupled_pair_at_zero(spec, i, r);
        const double diff = std::abs(std::pow(x0, static_cast<double>(power)) -
                                     std::pow(x0s, static_cast<double>(power)));
        samples[r] = std::pow(diff, p);
    });
    const double moment = numeric::mean(samples);
    const double moment_se =
        std::sqrt(numeric::sample_variance(samples) / static_cast<double>(replications));
    if (moment <= 0.0) {
        return out;  // all replications identical: zero with zero error
    }
    out.value = std::pow(moment, 1.0 / p);
    out.stderr_value = moment_se / (p * std::pow(out.value, p - 1.0));
    return out;
}

/// Coupling coefficients of X^k over the window i = -window..window, with the
/// metadata the summability checks need for tail certification.
struct DependenceProfile {
    std::size_t power = 1;
    double p_norm = 2.0;
    int window = kDefaultWindow;
    bool analytic = false;
    std::vector<double> values;   // index r corresponds to i = r - window
    std::vector<double> stderrs;
    std::optional<processes::CoeffSpec> coeffs;  // underlying lag family, when linear-latent
    double tail_factor = 0.0;  // C with delta_i <= C |a_{-i}|; 0 = no analytic tail
    std::size_t filter_window = 0;  // materialized half-width of the lag family

    [[nodiscard]] double at(std::int64_t i) const {
        const std::int64_t r = i + window;
        if (r < 0 || r >= static_cast<std::int64_t>(values.size())) return 0.0;
        return values[static_cast<std::size_t>(r)];
    }

    [[nodiscard]] double stderr_at(std::int64_t i) const {
        const std::int64_t r = i + window;
        if (r < 0 || r >= static_cast<std::int64_t>(stderrs.size())) return 0.0;
        return stderrs[static_cast<std::size_t>(r)];
    }
};

namespace detail {

/// Absolute moment norm ||Z||_q for Z standard normal.
[[nodiscard]] inline double normal_abs_norm(double q) {
    const double moment =
        std::pow(2.0, q / 2.0) * std::tgamma(0.5 * (q + 1.0)) / std::sqrt(std::numbers::pi);
    return std::pow(moment, 1.0 / q);
}

/// Bound factor C_k with delta_{i,2}(X^k) <= C_k |a_{-i}| for a linear filter
/// with standard normal innovations:
///   X^k - X*^k = (X - X*) sum_j X^j X*^{k-1-j},
/// Cauchy-Schwarz and Hoelder give C_k = k ||eps - eps'||_4 ||X||_{8(k-1)}^{k-1}.
[[nodiscard]] inline double linear_tail_factor(const processes::LinearSpec& lin, std::size_t power,
                                               double p) {
    if (power == 1) {
        return std::pow(processes::innovation_diff_abs_moment(lin.innovation, p), 1.0 / p);
    }
    if (p != 2.0 || lin.innovation != processes::Innovation::normal) return 0.0;
    const processes::Filter f = processes::materialize(lin.coeffs);
    const double sigma_x = std::sqrt(f.sum_sq());
    const double k = static_cast<double>(power);
    const double eps_diff_norm = std::numbers::sqrt2 * normal_abs_norm(4.0);
    const double x_norm = sigma_x * normal_abs_norm(8.0 * (k - 1.0));
    return k * eps_diff_norm * std::pow(x_norm, k - 1.0);
}

}  // namespace detail

/// Scans the coupling coefficients over a symmetric window.
[[nodiscard]] inline DependenceProfile profile(const processes::ProcessSpec& spec,
                                               std::size_t power, double p, int window,
                                               std::size_t replications,
                                               DeltaMode mode = DeltaMode::automatic) {
    if (window < 0) throw Error("profile: window must be nonnegative");
    DependenceProfile prof;
    prof.power = power;
    prof.p_norm = p;
    prof.window = window;
    prof.values.assign(2 * static_cast<std::size_t>(window) + 1, 0.0);
    prof.stderrs.assign(2 * static_cast<std::size_t>(window) + 1, 0.0);
    prof.analytic = true;
    for (std::int64_t i = -window; i <= window; ++i) {
        const DeltaEstimate est = delta(spec, power, i, p, replications, mode);
        prof.values[static_cast<std::size_t>(i + window)] = est.value;
        prof.stderrs[static_cast<std::size_t>(i + window)] = est.stderr_value;
        if (!est.analytic) prof.analytic = false;
    }
    using namespace processes;
    if (const auto* lin = std::get_if<LinearSpec>(&spec.variant)) {
        prof.coeffs = lin->coeffs;
        prof.tail_factor = detail::linear_tail_factor(*lin, power, p);
        const Filter f = materialize(lin->coeffs);
        prof.filter_window =
            static_cast<std::size_t>(std::max(std::abs(f.min_lag), std::abs(f.max_lag())));
    } else if (const auto w = detail::dependence_window(spec)) {
        prof.filter_window = static_cast<std::size_t>(*w);
    }
    return prof;
}

enum class Verdict { certified, satisfied_up_to_window, inconclusive };

[[nodiscard]] inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::certified: return "certified";
        case Verdict::satisfied_up_to_window: return "satisfied-up-to-window";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

/// Result of a weighted summability check sum_i |i|^w delta_i < infinity
/// aggregated over the supplied profiles (one per moment power).
struct SummabilityReport {
    double weight_exponent = 2.0;
    Verdict verdict = Verdict::inconclusive;
    double partial_sum = 0.0;
    double partial_sum_stderr = 0.0;
    double tail_bound = 0.0;
    std::vector<double> cumulative;  // partial sums over |i| <= r, r = 0..window
};

/// Weight exponent of the block-growth condition parameterized by kappa.
[[nodiscard]] inline double weight_exponent_for_kappa(double kappa) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw Error("kappa must lie in (0, 1)");
    return 0.5 + 0.5 / kappa;
}

/// Checks sum over the window, then classifies the tail:
///  - certified: every profile either has no mass beyond the window or admits
///    an analytic tail bound (added to tail_bound);
///  - satisfied-up-to-window: finite over the window, no tail statement;
///  - inconclusive: some tail is divergent or unbounded under this weight.
[[nodiscard]] inline SummabilityReport check_summability(
    std::span<const DependenceProfile> profiles, double weight_exponent) {
    if (profiles.empty()) throw Error("check_summability: no profiles");
    SummabilityReport report;
    report.weight_exponent = weight_exponent;
    int max_window = 0;
    for (const auto& prof : profiles) max_window = std::max(max_window, prof.window);
    report.cumulative.assign(static_cast<std::size_t>(max_window) + 1, 0.0);
    numeric::CompensatedSum total;
    double var_total = 0.0;
    for (int r = 0; r <= max_window; ++r) {
        for (const auto& prof : profiles) {
            if (r > prof.window) continue;
            const double wgt = std::pow(static_cast<double>(r), weight_exponent);
            if (r == 0) continue;  // weight vanishes at i = 0
            for (const std::int64_t i : {static_cast<std::int64_t>(-r), static_cast<std::int64_t>(r)}) {
                total.add(wgt * prof.at(i));
                const double se = prof.stderr_at(i);
                var_total += wgt * wgt * se * se;
            }
        }
        report.cumulative[static_cast<std::size_t>(r)] = total.value();
    }
    report.partial_sum = total.value();
    report.partial_sum_stderr = std::sqrt(var_total);

    Verdict verdict = Verdict::certified;
    numeric::CompensatedSum tail;
    for (const auto& prof : profiles) {
        if (static_cast<std::size_t>(prof.window) >= prof.filter_window) {
            continue;  // window covers the whole dependence range: tail is zero
        }
        if (prof.coeffs && prof.tail_factor > 0.0) {
            const auto bound = processes::weighted_tail_bound(
                *prof.coeffs, weight_exponent, static_cast<std::size_t>(prof.window));
            if (bound) {
                tail.add(prof.tail_factor * *bound);
                continue;
            }
            verdict = Verdict::inconclusive;
            continue;
        }
        if (verdict != Verdict::inconclusive) verdict = Verdict::satisfied_up_to_window;
    }
    report.tail_bound = tail.value();
    report.verdict = verdict;
    return report;
}

/// Moment-growth bound check: compares ||sum_{t<=N} (X_t^k - E X^k)||_2
/// against sqrt(N) * sum_i delta_i, the coupling-coefficient bound for
/// partial sums.
struct PartialSumCheck {
    double lhs = 0.0;
    double lhs_stderr = 0.0;
    double rhs = 0.0;
    double rhs_stderr = 0.0;
    bool holds = false;
    std::size_t length = 0;
    std::size_t replications = 0;
};

[[nodiscard]] inline PartialSumCheck partial_sum_bound_check(const processes::ProcessSpec& spec,
                                                             std::size_t power, std::size_t length,
                                                             std::size_t replications,
                                                             std::size_t delta_replications = 10'000) {
    if (length == 0) throw EmptySeriesError("partial_sum_bound_check: length must be positive");
    if (replications < 2) throw Error("partial_sum_bound_check: need at least 2 replications");
    PartialSumCheck check;
    check.length = length;
    check.replications = replications;

    const auto mu_info = processes::population_moments(spec, power);
    const double mu = mu_info.values[power - 1];
    std::vector<double> sq_sums(replications, 0.0);
    numeric::parallel_for(replications, [&](std::size_t r) {
        processes::ProcessSpec probe = spec;
        probe.seed = rng::derive_key(spec.seed, rng::tag_stream("psum", r));
        const Series xs = processes::generate(probe, length);
        numeric::CompensatedSum acc;
        for (double x : xs.values) {
            acc.add(std::pow(x, static_cast<double>(power)) - mu);
        }
        const double s = acc.value();
        sq_sums[r] = s * s;
    });
    const double second_moment = numeric::mean(sq_sums);
    const double second_moment_se =
        std::sqrt(numeric::sample_variance(sq_sums) / static_cast<double>(replications));
    check.lhs = std::sqrt(std::max(0.0, second_moment));
    check.lhs_stderr = check.lhs > 0.0 ? second_moment_se / (2.0 * check.lhs) : 0.0;

    const int window = detail::dependence_window(spec).value_or(kDefaultWindow);
    const DependenceProfile prof = profile(spec, power, 2.0, window, delta_replications);
    numeric::CompensatedSum delta_sum;
    double delta_var = 0.0;
    for (std::int64_t i = -window; i <= window; ++i) {
        delta_sum.add(prof.at(i));
        const double se = prof.stderr_at(i);
        delta_var += se * se;
    }
    const double root_n = std::sqrt(static_cast<double>(length));
    check.rhs = root_n * delta_sum.value();
    check.rhs_stderr = root_n * std::sqrt(delta_var);
    check.holds = check.lhs <= check.rhs + 3.0 * (check.lhs_stderr + check.rhs_stderr);
    return check;
}

}  // namespace blockstat::dependence
