#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockstat/blocks.hpp"
#include "blockstat/errors.hpp"
#include "blockstat/gfuncs.hpp"
#include "blockstat/numeric.hpp"
#include "blockstat/processes.hpp"
#include "blockstat/quadrature.hpp"
#include "blockstat/rng.hpp"
#include "blockstat/ustat.hpp"

namespace blockstat::asymptotics {

/// A scalar estimate with an attached Monte Carlo standard error (zero for
/// closed-form routes) and the route that produced it.
struct Estimate {
    double value = 0.0;
    double stderr_value = 0.0;
    std::string mode;
    bool negative_flagged = false;
};

/// Lag-window long-run variance of a single series: c_0 + 2 sum_{t<=L} w_t c_t
/// with Bartlett weights w_t = 1 - t/(L+1) (nonnegative definite) or flat
/// weights (can go negative; flagged by the caller).
[[nodiscard]] inline double long_run_variance(std::span<const double> d, std::size_t lag_window,
                                              bool bartlett = true) {
    const std::size_t n = d.size();
    if (n < 2) throw EmptySeriesError("long_run_variance: need at least two observations");
    if (lag_window >= n) throw Error("long_run_variance: lag window must be below the length");
    const double m = numeric::mean(d);
    const double dn = static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t t = 0; t < n; ++t) centered[t] = d[t] - m;
    numeric::CompensatedSum total;
    for (std::size_t t = 0; t <= lag_window; ++t) {
        numeric::CompensatedSum acc;
        for (std::size_t s = 0; s + t < n; ++s) acc.add(centered[s] * centered[s + t]);
        const double cov = acc.value() / dn;
        if (t == 0) {
            total.add(cov);
        } else {
            const double weight =
                bartlett ? 1.0 - static_cast<double>(t) / (static_cast<double>(lag_window) + 1.0)
                         : 1.0;
            total.add(2.0 * weight * cov);
        }
    }
    return total.value();
}

[[nodiscard]] inline std::size_t default_lag_window(std::size_t n) {
    return static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
}

/// Options for the Monte Carlo long-run variance route.
struct SigmaOptions {
    std::size_t replications = 200;
    std::size_t length = 8192;
    std::size_t lag_window = 0;  // 0 = ceil(length^{1/3})
    bool bartlett = true;
    bool force_monte_carlo = false;
};

namespace detail {

/// Composite transform z -> sum_k w_k X(z)^k used by the Gaussian-latent
/// closed form.
[[nodiscard]] inline std::function<double(double)> composite_transform(
    const processes::LatentGaussian& latent, std::span<const double> weights) {
    const auto x_of_z = latent.x_of_z;
    const std::vector<double> w(weights.begin(), weights.end());
    return [x_of_z, w](double z) {
        const double x = x_of_z(z);
        double p = 1.0;
        double v = 0.0;
        for (double wk : w) {
            p *= x;
            v += wk * p;
        }
        return v;
    };
}

}  // namespace detail

/// Long-run variance of D_t = sum_k w_k (X_t^k - E X^k), the linearization of
/// the block functional, with w = grad g at the reference vector.
///
/// Routes, in order of preference:
///  - Gaussian-latent closed form: expand the composite transform in Hermite
///    polynomials; the long-run variance is sum_q q! c_q^2 (1 + 2 sum_t rho_t^q)
///    over the (finite) latent autocorrelation support.
///  - Independent marginals: plain variance from analytic moments.
///  - Monte Carlo: replicated lag-window estimates, Bartlett by default.
[[nodiscard]] inline Estimate sigma_squared(const processes::ProcessSpec& spec,
                                            const gfuncs::GSpec& g,
                                            const SigmaOptions& opts = {}) {
    const std::vector<double> w = g.gradient_at(g.v0);
    if (!opts.force_monte_carlo) {
        if (const auto latent = processes::latent_gaussian(spec)) {
            const auto psi = detail::composite_transform(*latent, w);
            const auto expansion = processes::hermite_expand(psi, 40);
            numeric::CompensatedSum acc;
            double factorial = 1.0;
            for (std::size_t q = 1; q < expansion.coeffs.size(); ++q) {
                factorial *= static_cast<double>(q);
                const double cq = expansion.coeffs[q];
                if (cq == 0.0) continue;
                double corr = 1.0;
                for (std::size_t t = 1; t < latent->rho.size(); ++t) {
                    corr += 2.0 * std::pow(latent->rho[t], static_cast<double>(q));
                }
                acc.add(factorial * cq * cq * corr);
            }
            Estimate est;
            est.value = acc.value();
            est.mode = "analytic-hermite";
            return est;
        }
        if (std::get_if<processes::IidSpec>(&spec.variant) ||
            std::get_if<processes::PathologicalSpec>(&spec.variant)) {
            const auto info = processes::population_moments(spec, 2 * g.m);
            if (info.analytic) {
                const auto mu = [&](std::size_t k) {
                    return k == 0 ? 1.0 : info.values[k - 1];
                };
                numeric::CompensatedSum acc;
                for (std::size_t j = 1; j <= g.m; ++j) {
                    for (std::size_t k = 1; k <= g.m; ++k) {
                        acc.add(w[j - 1] * w[k - 1] * (mu(j + k) - mu(j) * mu(k)));
                    }
                }
                Estimate est;
                est.value = acc.value();
                est.mode = "analytic-moments";
                return est;
            }
        }
    }
    // Monte Carlo fallback: independent replicated paths, one lag-window
    // estimate per path.
    const auto mu_info = processes::population_moments(spec, g.m);
    const std::size_t lag =
        opts.lag_window > 0 ? opts.lag_window : default_lag_window(opts.length);
    std::vector<double> estimates(opts.replications, 0.0);
    numeric::parallel_for(opts.replications, [&](std::size_t r) {
        processes::ProcessSpec probe = spec;
        probe.seed = rng::derive_key(spec.seed, rng::tag_stream("sigma-mc", r));
        const Series xs = processes::generate(probe, opts.length);
        std::vector<double> d(xs.size(), 0.0);
        for (std::size_t t = 0; t < xs.size(); ++t) {
            double p = 1.0;
            double v = 0.0;
            for (std::size_t k = 1; k <= g.m; ++k) {
                p *= xs.values[t];
                v += w[k - 1] * (p - mu_info.values[k - 1]);
            }
            d[t] = v;
        }
        estimates[r] = long_run_variance(d, lag, opts.bartlett);
    });
    Estimate est;
    est.value = numeric::mean(estimates);
    est.stderr_value = std::sqrt(numeric::sample_variance(estimates) /
                                 static_cast<double>(opts.replications));
    est.mode = opts.bartlett ? "monte-carlo-bartlett" : "monte-carlo-flat";
    est.negative_flagged = !(est.value > 0.0);
    return est;
}

/// Long-run variance estimated from observed data only (no process spec):
/// plug-in moments, lag-window estimator.
[[nodiscard]] inline Estimate sigma_squared_from_data(const Series& series, const gfuncs::GSpec& g,
                                                      std::size_t lag_window = 0,
                                                      bool bartlett = true) {
    const std::size_t n = series.size();
    const std::vector<double> w = g.gradient_at(g.v0);
    std::vector<numeric::CompensatedSum> macc(g.m);
    for (double x : series.values) {
        double p = 1.0;
        for (std::size_t k = 0; k < g.m; ++k) {
            p *= x;
            macc[k].add(p);
        }
    }
    std::vector<double> mu(g.m, 0.0);
    for (std::size_t k = 0; k < g.m; ++k) mu[k] = macc[k].value() / static_cast<double>(n);
    std::vector<double> d(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double p = 1.0;
        double v = 0.0;
        for (std::size_t k = 0; k < g.m; ++k) {
            p *= series.values[t];
            v += w[k] * (p - mu[k]);
        }
        d[t] = v;
    }
    const std::size_t lag = lag_window > 0 ? lag_window : default_lag_window(n);
    Estimate est;
    est.value = long_run_variance(d, std::min(lag, n - 1), bartlett);
    est.mode = bartlett ? "data-bartlett" : "data-flat";
    est.negative_flagged = !(est.value > 0.0);
    return est;
}

/// Pair covariance of the limit kernel: Cov(h(sigma N, sigma N'),
/// h(sigma N', sigma N'')) for independent standard normals.  Conditioning on
/// the shared middle coordinate reduces this to the variance of the
/// conditional mean under N(0, sigma^2), evaluated by quadrature.  Throws
/// when degenerate.
[[nodiscard]] inline double gamma_squared(const ustat::KernelSpec& kernel, double sigma) {
    if (!(sigma > 0.0)) throw Error("gamma_squared: sigma must be positive");
    return ustat::gamma_n_squared(kernel, ustat::NormalDist{sigma});
}

/// A simulated or closed-form centering value.
struct CenteringResult {
    double value = 0.0;
    double stderr_value = 0.0;
    std::string method;
    std::size_t replications = 0;
};

/// Closed-form Gaussian centering E h(sigma N, sigma N'): available only for
/// difference kernels, where it reduces to a one-dimensional expectation of
/// hd over N(0, 2 sigma^2).
[[nodiscard]] inline CenteringResult centering_gaussian(const ustat::KernelSpec& kernel,
                                                        double sigma) {
    if (!(sigma > 0.0)) throw Error("centering_gaussian: sigma must be positive");
    if (!kernel.difference_form || !kernel.hd) {
        throw MethodUnavailableError(
            "gaussian centering requires a difference kernel; kernel '" + kernel.name +
            "' does not qualify");
    }
    CenteringResult out;
    out.method = "gaussian";
    const double spread = std::numbers::sqrt2 * sigma;
    if (kernel.name == "gini") {
        out.value = quad::folded_normal_mean(0.0, spread);
        return out;
    }
    const auto hd = kernel.hd;
    if (kernel.kink_on_diagonal) {
        const double kink[1] = {0.0};
        out.value =
            quad::normal_expectation_split([&](double z) { return hd(spread * z); }, kink);
    } else {
        out.value = quad::normal_expectation([&](double z) { return hd(spread * z); });
    }
    return out;
}

/// Scaled linearized block sum Z = (1/sqrt(l)) sum_k w_k sum_{t<=l}
/// (X_t^k - E X^k) for one freshly generated path.
[[nodiscard]] inline double linearized_block_sum(const processes::ProcessSpec& spec,
                                                 const gfuncs::GSpec& g,
                                                 std::span<const double> mu,
                                                 std::span<const double> w, std::size_t l) {
    const Series xs = processes::generate(spec, l);
    numeric::CompensatedSum acc;
    for (double x : xs.values) {
        double p = 1.0;
        double v = 0.0;
        for (std::size_t k = 0; k < g.m; ++k) {
            p *= x;
            v += w[k] * (p - mu[k]);
        }
        acc.add(v);
    }
    return acc.value() / std::sqrt(static_cast<double>(l));
}

/// Monte Carlo centering E h(Z, Z') with independent linearized block sums.
[[nodiscard]] inline CenteringResult centering_zn(const processes::ProcessSpec& spec,
                                                  const gfuncs::GSpec& g,
                                                  const ustat::KernelSpec& kernel, std::size_t l,
                                                  std::size_t replications) {
    if (replications < 2) throw Error("centering_zn: need at least 2 replications");
    const auto mu_info = processes::population_moments(spec, g.m);
    const std::vector<double> w = g.gradient_at(g.v0);
    std::vector<double> values(replications, 0.0);
    numeric::parallel_for(replications, [&](std::size_t r) {
        processes::ProcessSpec a = spec;
        a.seed = rng::derive_key(spec.seed, rng::tag_stream("zn-a", r));
        processes::ProcessSpec b = spec;
        b.seed = rng::derive_key(spec.seed, rng::tag_stream("zn-b", r));
        const double za = linearized_block_sum(a, g, mu_info.values, w, l);
        const double zb = linearized_block_sum(b, g, mu_info.values, w, l);
        values[r] = kernel.h(za, zb);
    });
    CenteringResult out;
    out.method = "zn-expectation";
    out.replications = replications;
    out.value = numeric::mean(values);
    out.stderr_value =
        std::sqrt(numeric::sample_variance(values) / static_cast<double>(replications));
    return out;
}

/// Monte Carlo centering E U_n^(eta): pair mean of the kernel over
/// cutoff-weighted block statistics of freshly simulated paths.
[[nodiscard]] inline CenteringResult centering_truncated(const processes::ProcessSpec& spec,
                                                         const gfuncs::GSpec& g,
                                                         const ustat::KernelSpec& kernel,
                                                         std::size_t l, std::size_t b,
                                                         std::size_t replications) {
    if (replications < 2) throw Error("centering_truncated: need at least 2 replications");
    if (b < 2) throw TooFewBlocksError(b);
    std::vector<double> values(replications, 0.0);
    numeric::parallel_for(replications, [&](std::size_t r) {
        processes::ProcessSpec probe = spec;
        probe.seed = rng::derive_key(spec.seed, rng::tag_stream("trunc-center", r));
        const Series xs = processes::generate(probe, l * b);
        const auto w_stats = blocks::local_statistics(xs, l, g, /*truncated=*/true);
        values[r] = ustat::u_statistic_auto(w_stats, kernel);
    });
    CenteringResult out;
    out.method = "truncated-expectation";
    out.replications = replications;
    out.value = numeric::mean(values);
    out.stderr_value =
        std::sqrt(numeric::sample_variance(values) / static_cast<double>(replications));
    return out;
}

/// Noise guard threshold: standardization is refused when the centering
/// standard error times sqrt(b) exceeds this.
inline constexpr double kCenteringNoiseBudget = 0.1;

inline void require_centering_precision(const CenteringResult& centering, std::size_t b) {
    const double noise = centering.stderr_value * std::sqrt(static_cast<double>(b));
    if (noise > kCenteringNoiseBudget) {
        throw CenteringTooNoisyError(
            "centering stderr " + std::to_string(centering.stderr_value) + " with " +
            std::to_string(b) + " blocks exceeds the noise budget; increase replications");
    }
}

/// Assembled limit description used for standardization and reporting.
struct LimitLaw {
    double sigma_sq = 0.0;
    double sigma_sq_stderr = 0.0;
    std::string sigma_mode;
    double gamma_sq = 0.0;
    CenteringResult centering;
    double kappa = 0.5;
};

/// Names accepted for the centering method.
enum class CenteringMethod { gaussian, zn_expectation, truncated_expectation };

[[nodiscard]] inline CenteringMethod centering_method_from_string(const std::string& name) {
    if (name == "gaussian") return CenteringMethod::gaussian;
    if (name == "zn-expectation") return CenteringMethod::zn_expectation;
    if (name == "truncated-expectation") return CenteringMethod::truncated_expectation;
    throw IoError("unknown centering method '" + name + "'");
}

[[nodiscard]] inline std::string to_string(CenteringMethod method) {
    switch (method) {
        case CenteringMethod::gaussian: return "gaussian";
        case CenteringMethod::zn_expectation: return "zn-expectation";
        case CenteringMethod::truncated_expectation: return "truncated-expectation";
    }
    return "gaussian";
}

struct LimitLawOptions {
    CenteringMethod method = CenteringMethod::gaussian;
    std::size_t centering_replications = 2000;
    double kappa = 0.5;
    std::optional<double> sigma_sq_override;
    SigmaOptions sigma_options;
};

/// Builds the full limit description for a process/functional/kernel triple
/// at block geometry (l, b).  Enforces the centering noise budget.
[[nodiscard]] inline LimitLaw build_limit_law(const processes::ProcessSpec& spec,
                                              const gfuncs::GSpec& g,
                                              const ustat::KernelSpec& kernel, std::size_t l,
                                              std::size_t b, const LimitLawOptions& opts = {}) {
    LimitLaw law;
    law.kappa = opts.kappa;
    if (opts.sigma_sq_override) {
        law.sigma_sq = *opts.sigma_sq_override;
        law.sigma_mode = "given";
    } else {
        const Estimate est = sigma_squared(spec, g, opts.sigma_options);
        law.sigma_sq = est.value;
        law.sigma_sq_stderr = est.stderr_value;
        law.sigma_mode = est.mode;
    }
    if (!(law.sigma_sq > 0.0)) {
        throw DegenerateKernelError("long-run variance is not positive; no limit law available");
    }
    law.gamma_sq = gamma_squared(kernel, std::sqrt(law.sigma_sq));
    switch (opts.method) {
        case CenteringMethod::gaussian:
            law.centering = centering_gaussian(kernel, std::sqrt(law.sigma_sq));
            break;
        case CenteringMethod::zn_expectation:
            law.centering = centering_zn(spec, g, kernel, l, opts.centering_replications);
            break;
        case CenteringMethod::truncated_expectation:
            law.centering = centering_truncated(spec, g, kernel, l, b, opts.centering_replications);
            break;
    }
    require_centering_precision(law.centering, b);
    return law;
}

}  // namespace blockstat::asymptotics
