#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "blockstat/blocks.hpp"
#include "blockstat/errors.hpp"
#include "blockstat/numeric.hpp"
#include "blockstat/quadrature.hpp"
#include "blockstat/rng.hpp"

namespace blockstat::processes {

enum class Innovation { normal, uniform, rademacher };

[[nodiscard]] inline std::string to_string(Innovation kind) {
    switch (kind) {
        case Innovation::normal: return "normal";
        case Innovation::uniform: return "uniform";
        case Innovation::rademacher: return "rademacher";
    }
    return "normal";
}

[[nodiscard]] inline Innovation innovation_from_string(const std::string& name) {
    if (name == "normal") return Innovation::normal;
    if (name == "uniform") return Innovation::uniform;
    if (name == "rademacher") return Innovation::rademacher;
    throw IoError("unknown innovation '" + name + "'");
}

/// Raw moment E eps^k of the (unit-variance, mean-zero) innovation law.
[[nodiscard]] inline double innovation_moment(Innovation kind, int k) {
    if (k < 0) throw Error("innovation_moment: negative order");
    if (k == 0) return 1.0;
    if (k % 2 == 1) return 0.0;
    switch (kind) {
        case Innovation::normal: {
            // E Z^{2j} = (2j-1)!!
            double v = 1.0;
            for (int j = 1; j < k; j += 2) v *= static_cast<double>(j);
            return v;
        }
        case Innovation::uniform:
            // uniform on (-sqrt(3), sqrt(3)): E U^{2j} = 3^j / (2j+1)
            return std::pow(3.0, k / 2) / (k + 1.0);
        case Innovation::rademacher:
            return 1.0;
    }
    return 0.0;
}

/// E |eps - eps'|^p for two independent innovations (used by closed-form
/// dependence coefficients of linear filters).
[[nodiscard]] inline double innovation_diff_abs_moment(Innovation kind, double p) {
    if (!(p > 0.0)) throw Error("innovation_diff_abs_moment: p must be positive");
    switch (kind) {
        case Innovation::normal:
            // eps - eps' ~ N(0, 2): E |.|^p = 2^p Gamma((p+1)/2) / sqrt(pi)
            return std::pow(2.0, p) * std::tgamma(0.5 * (p + 1.0)) / std::sqrt(std::numbers::pi);
        case Innovation::uniform: {
            // difference of two uniforms on an interval of width w = 2 sqrt(3)
            const double w = 2.0 * std::sqrt(3.0);
            return std::pow(w, p) * 2.0 / ((p + 1.0) * (p + 2.0));
        }
        case Innovation::rademacher:
            // |eps - eps'| is 2 with probability 1/2, else 0
            return std::pow(2.0, p) * 0.5;
    }
    return 0.0;
}

/// Description of a lag-coefficient family.  `list` carries explicit values
/// starting at `offset`; the parametric kinds materialize a truncated filter
/// whose discarded absolute tail is below kTailCutoff (subject to the cap).
struct CoeffSpec {
    enum class Kind { list, geometric, two_sided_geometric, power };
    Kind kind = Kind::list;
    std::vector<double> values;
    int offset = 0;
    double scale = 1.0;
    double rate = 0.5;
    double exponent = 2.0;
    std::size_t window = 0;  // 0 = choose from the tail target
};

inline constexpr double kTailCutoff = 1e-8;
inline constexpr std::size_t kWindowCap = 4096;

[[nodiscard]] inline std::string to_string(CoeffSpec::Kind kind) {
    switch (kind) {
        case CoeffSpec::Kind::list: return "list";
        case CoeffSpec::Kind::geometric: return "geometric";
        case CoeffSpec::Kind::two_sided_geometric: return "two_sided_geometric";
        case CoeffSpec::Kind::power: return "power";
    }
    return "list";
}

[[nodiscard]] inline CoeffSpec::Kind coeff_kind_from_string(const std::string& name) {
    if (name == "list") return CoeffSpec::Kind::list;
    if (name == "geometric") return CoeffSpec::Kind::geometric;
    if (name == "two_sided_geometric") return CoeffSpec::Kind::two_sided_geometric;
    if (name == "power") return CoeffSpec::Kind::power;
    throw IoError("unknown coefficient kind '" + name + "'");
}

/// Materialized filter: coeffs[r] multiplies the innovation at lag
/// min_lag + r.
struct Filter {
    int min_lag = 0;
    std::vector<double> coeffs;

    [[nodiscard]] int max_lag() const noexcept {
        return min_lag + static_cast<int>(coeffs.size()) - 1;
    }

    [[nodiscard]] double at_lag(int lag) const noexcept {
        const int r = lag - min_lag;
        if (r < 0 || r >= static_cast<int>(coeffs.size())) return 0.0;
        return coeffs[static_cast<std::size_t>(r)];
    }

    [[nodiscard]] double sum_abs() const noexcept {
        double s = 0.0;
        for (double c : coeffs) s += std::abs(c);
        return s;
    }

    [[nodiscard]] double sum_sq() const noexcept {
        double s = 0.0;
        for (double c : coeffs) s += c * c;
        return s;
    }
};

namespace detail {

[[nodiscard]] inline std::size_t geometric_window(double scale, double rate, std::size_t requested) {
    if (requested > 0) return std::min(requested, kWindowCap);
    const double r = std::abs(rate);
    const double s = std::abs(scale);
    if (s == 0.0) return 1;
    // smallest J with s r^{J+1} / (1 - r) < cutoff
    const double target = kTailCutoff * (1.0 - r) / s;
    if (target >= 1.0) return 1;
    const std::size_t j = static_cast<std::size_t>(std::ceil(std::log(target) / std::log(r)));
    return std::clamp<std::size_t>(j, 1, kWindowCap);
}

[[nodiscard]] inline std::size_t power_window(double scale, double exponent, std::size_t requested) {
    if (requested > 0) return std::min(requested, kWindowCap);
    const double s = std::abs(scale);
    if (s == 0.0 || exponent <= 1.0) return kWindowCap;
    // integral bound: sum_{j > J} s (j+1)^{-e} <= s J^{1-e} / (e-1)
    const double j = std::pow(s / (kTailCutoff * (exponent - 1.0)), 1.0 / (exponent - 1.0));
    if (!(j < static_cast<double>(kWindowCap))) return kWindowCap;
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(j)), 1, kWindowCap);
}

}  // namespace detail

[[nodiscard]] inline Filter materialize(const CoeffSpec& spec) {
    Filter filter;
    switch (spec.kind) {
        case CoeffSpec::Kind::list: {
            if (spec.values.empty()) throw InvalidCoefficientsError("coefficient list is empty");
            for (double v : spec.values) {
                if (!std::isfinite(v)) throw InvalidCoefficientsError("non-finite coefficient");
            }
            filter.min_lag = spec.offset;
            filter.coeffs = spec.values;
            break;
        }
        case CoeffSpec::Kind::geometric: {
            if (!(std::abs(spec.rate) < 1.0)) {
                throw InvalidCoefficientsError("geometric rate must satisfy |rate| < 1");
            }
            const std::size_t j_max = detail::geometric_window(spec.scale, spec.rate, spec.window);
            filter.min_lag = 0;
            filter.coeffs.resize(j_max + 1);
            double p = spec.scale;
            for (std::size_t j = 0; j <= j_max; ++j) {
                filter.coeffs[j] = p;
                p *= spec.rate;
            }
            break;
        }
        case CoeffSpec::Kind::two_sided_geometric: {
            if (!(std::abs(spec.rate) < 1.0)) {
                throw InvalidCoefficientsError("geometric rate must satisfy |rate| < 1");
            }
            const std::size_t j_max = detail::geometric_window(spec.scale, spec.rate, spec.window);
            filter.min_lag = -static_cast<int>(j_max);
            filter.coeffs.assign(2 * j_max + 1, 0.0);
            for (std::size_t r = 0; r < filter.coeffs.size(); ++r) {
                const int lag = filter.min_lag + static_cast<int>(r);
                filter.coeffs[r] = spec.scale * std::pow(spec.rate, std::abs(lag));
            }
            break;
        }
        case CoeffSpec::Kind::power: {
            if (!(spec.exponent > 0.5)) {
                throw InvalidCoefficientsError("power exponent must exceed 1/2 for square summability");
            }
            const std::size_t j_max = detail::power_window(spec.scale, spec.exponent, spec.window);
            filter.min_lag = 0;
            filter.coeffs.resize(j_max + 1);
            for (std::size_t j = 0; j <= j_max; ++j) {
                filter.coeffs[j] = spec.scale * std::pow(static_cast<double>(j + 1), -spec.exponent);
            }
            break;
        }
    }
    if (filter.coeffs.empty()) throw InvalidCoefficientsError("materialized filter is empty");
    return filter;
}

/// Analytic bound on the discarded weighted tail sum_{|j| > J} |j|^w |a_j|
/// past the materialized window; nullopt when the family has no finite bound
/// (then only window-limited statements are possible).
[[nodiscard]] inline std::optional<double> weighted_tail_bound(const CoeffSpec& spec, double weight,
                                                               std::size_t window_used) {
    const double big_j = static_cast<double>(window_used);
    switch (spec.kind) {
        case CoeffSpec::Kind::list:
            return 0.0;
        case CoeffSpec::Kind::geometric:
        case CoeffSpec::Kind::two_sided_geometric: {
            const double r = std::abs(spec.rate);
            const double s = std::abs(spec.scale);
            if (s == 0.0) return 0.0;
            // ratio bound: terms i^w r^i shrink by at least rho per step past J
            const double rho = std::pow((big_j + 2.0) / (big_j + 1.0), weight) * r;
            if (!(rho < 1.0)) return std::nullopt;
            const double first = std::pow(big_j + 1.0, weight) * s * std::pow(r, big_j + 1.0);
            const double one_side = first / (1.0 - rho);
            const bool two_sided = spec.kind == CoeffSpec::Kind::two_sided_geometric;
            return two_sided ? 2.0 * one_side : one_side;
        }
        case CoeffSpec::Kind::power: {
            const double e = spec.exponent;
            const double s = std::abs(spec.scale);
            if (s == 0.0) return 0.0;
            if (!(e - weight > 1.0)) return std::nullopt;
            // sum_{j > J} j^w s (j+1)^{-e} <= s J^{w-e+1} / (e-w-1)
            return s * std::pow(big_j, weight - e + 1.0) / (e - weight - 1.0);
        }
    }
    return std::nullopt;
}

/// Named pointwise transform applied to a latent series.
struct Transform {
    std::string name = "identity";
    double param = 0.0;

    [[nodiscard]] double operator()(double y) const {
        if (name == "identity") return y;
        if (name == "abs_power") return std::pow(std::abs(y), param);
        if (name == "signed_power") {
            const double v = std::pow(std::abs(y), param);
            return y < 0.0 ? -v : v;
        }
        if (name == "square_centered") return y * y - 1.0;
        if (name == "cube") return y * y * y;
        if (name == "cosine") return std::cos(y);
        throw IoError("unknown transform '" + name + "'");
    }

    /// Smoothness exponent: transforms admissible for the Hoelder-of-linear
    /// class must be gamma-Hoelder with gamma in (0, 1].
    [[nodiscard]] double hoelder_exponent() const {
        if (name == "identity" || name == "cosine") return 1.0;
        if (name == "abs_power" || name == "signed_power") return param;
        return 0.0;
    }
};

struct IidSpec {
    Innovation innovation = Innovation::normal;
};

struct LinearSpec {
    CoeffSpec coeffs;
    Innovation innovation = Innovation::normal;
};

struct HoelderLinearSpec {
    Transform phi;
    CoeffSpec coeffs;
    Innovation innovation = Innovation::normal;
};

/// Transform of a standardized Gaussian linear process.  The materialized
/// filter is renormalized to unit l2 norm so the latent series is exactly
/// standard normal; the transform is centered under that law.  When
/// `hermite_coeffs` is non-empty it defines the transform directly as
/// sum_q c_q He_q (index 0 of the vector holds c_1).
struct GaussianHermiteSpec {
    std::vector<double> hermite_coeffs;
    Transform phi;
    CoeffSpec coeffs;
};

struct VolterraSpec {
    struct Entry {
        int lag_a = 0;
        int lag_b = 1;
        double weight = 0.0;
    };
    std::vector<Entry> entries;
    Innovation innovation = Innovation::normal;
};

/// Heavy-atom stress law: X^2 takes the value exp(-exp(exp(k))) with
/// probability 2^-k (k up to atom_cap, remaining mass folded into the cap),
/// with a fair random sign.  Atoms for k >= 2 lie far below the smallest
/// positive double and collapse to zero in binary64; the distribution over
/// representable values is unaffected in any statistic that sums them.
struct PathologicalSpec {
    int atom_cap = 30;
};

struct ProcessSpec {
    std::variant<IidSpec, LinearSpec, HoelderLinearSpec, GaussianHermiteSpec, VolterraSpec,
                 PathologicalSpec>
        variant;
    std::uint64_t seed = 1;
};

namespace detail {

/// Deterministic innovation stream: a pure function of (key, time index).
class InnovationSource {
public:
    InnovationSource(std::uint64_t key, Innovation kind) : gen_(key), kind_(kind) {}

    [[nodiscard]] double at(std::int64_t u) const {
        switch (kind_) {
            case Innovation::normal: return gen_.normal(u, 0);
            case Innovation::uniform: return gen_.uniform_centered(u, 0);
            case Innovation::rademacher: return gen_.rademacher(u, 0);
        }
        return 0.0;
    }

private:
    rng::CounterRng gen_;
    Innovation kind_;
};

[[nodiscard]] inline Innovation innovation_of(const ProcessSpec& spec) {
    if (const auto* iid = std::get_if<IidSpec>(&spec.variant)) return iid->innovation;
    if (const auto* lin = std::get_if<LinearSpec>(&spec.variant)) return lin->innovation;
    if (const auto* hoe = std::get_if<HoelderLinearSpec>(&spec.variant)) return hoe->innovation;
    if (std::get_if<GaussianHermiteSpec>(&spec.variant)) return Innovation::normal;
    if (const auto* vol = std::get_if<VolterraSpec>(&spec.variant)) return vol->innovation;
    return Innovation::normal;  // pathological draws from its own uniform/sign stream
}

[[nodiscard]] inline Filter normalized_unit_filter(const CoeffSpec& coeffs) {
    Filter filter = materialize(coeffs);
    const double norm = std::sqrt(filter.sum_sq());
    if (!(norm > 0.0)) throw InvalidCoefficientsError("latent filter has zero l2 norm");
    for (double& c : filter.coeffs) c /= norm;
    return filter;
}

[[nodiscard]] inline std::function<double(double)> hermite_transform(
    const GaussianHermiteSpec& spec) {
    if (!spec.hermite_coeffs.empty()) {
        const std::vector<double> cs = spec.hermite_coeffs;
        return [cs](double y) {
            double v = 0.0;
            for (std::size_t q = 0; q < cs.size(); ++q) {
                v += cs[q] * quad::hermite_probabilist(static_cast<int>(q) + 1, y);
            }
            return v;
        };
    }
    const Transform phi = spec.phi;
    const double mean = quad::normal_expectation([&phi](double z) { return phi(z); });
    return [phi, mean](double y) { return phi(y) - mean; };
}

[[nodiscard]] inline double pathological_atom(int k) {
    // X^2 value exp(-exp(exp(k))); underflows to exactly 0 for k >= 2.
    return std::exp(-std::exp(std::exp(static_cast<double>(k))));
}

/// One pathological draw from (uniform, sign) slots at a time index.
[[nodiscard]] inline double pathological_value(const rng::CounterRng& gen, std::int64_t u,
                                               int atom_cap) {
    const double v = gen.uniform(u, 4);
    int k = static_cast<int>(std::ceil(-std::log2(v)));
    k = std::clamp(k, 1, atom_cap);
    const double sign = gen.rademacher(u, 5);
    return sign * std::sqrt(pathological_atom(k));
}

struct EpsProvider {
    InnovationSource base;
    std::optional<std::pair<std::int64_t, double>> swap;  // (index, replacement value)

    [[nodiscard]] double at(std::int64_t u) const {
        if (swap && swap->first == u) return swap->second;
        return base.at(u);
    }
};

/// Evaluates X_t for each t in [t_begin, t_begin + n) under a given
/// innovation assignment.  Every variant is a fixed functional of finitely
/// many innovations, so swapped evaluations share all untouched draws.
inline void evaluate_path(const ProcessSpec& spec, const EpsProvider& eps, std::int64_t t_begin,
                          std::size_t n, std::uint64_t path_key, std::vector<double>& out) {
    out.assign(n, 0.0);
    if (std::get_if<IidSpec>(&spec.variant)) {
        for (std::size_t r = 0; r < n; ++r) {
            out[r] = eps.at(t_begin + static_cast<std::int64_t>(r));
        }
        return;
    }
    if (const auto* path = std::get_if<PathologicalSpec>(&spec.variant)) {
        if (path->atom_cap < 1 || path->atom_cap > 60) {
            throw InvalidCoefficientsError("pathological atom cap must lie in [1, 60]");
        }
        const rng::CounterRng gen(path_key);
        for (std::size_t r = 0; r < n; ++r) {
            out[r] = pathological_value(gen, t_begin + static_cast<std::int64_t>(r), path->atom_cap);
        }
        return;
    }
    if (const auto* vol = std::get_if<VolterraSpec>(&spec.variant)) {
        if (vol->entries.empty()) throw InvalidCoefficientsError("volterra: no entries");
        for (const auto& e : vol->entries) {
            if (e.lag_a == e.lag_b) {
                throw InvalidCoefficientsError("volterra: diagonal entry at lag " +
                                               std::to_string(e.lag_a));
            }
            if (!std::isfinite(e.weight)) throw InvalidCoefficientsError("volterra: non-finite weight");
        }
        for (std::size_t r = 0; r < n; ++r) {
            const std::int64_t t = t_begin + static_cast<std::int64_t>(r);
            numeric::CompensatedSum acc;
            for (const auto& e : vol->entries) {
                acc.add(e.weight * eps.at(t - e.lag_a) * eps.at(t - e.lag_b));
            }
            out[r] = acc.value();
        }
        return;
    }
    // Linear-latent variants share the convolution core.
    Filter filter;
    std::function<double(double)> transform;
    if (const auto* lin = std::get_if<LinearSpec>(&spec.variant)) {
        filter = materialize(lin->coeffs);
        transform = [](double y) { return y; };
    } else if (const auto* hoe = std::get_if<HoelderLinearSpec>(&spec.variant)) {
        const double gamma = hoe->phi.hoelder_exponent();
        if (!(gamma > 0.0 && gamma <= 1.0)) {
            throw InvalidCoefficientsError("hoelder_linear: transform '" + hoe->phi.name +
                                           "' is not Hoelder with exponent in (0, 1]");
        }
        filter = materialize(hoe->coeffs);
        const Transform phi = hoe->phi;
        transform = [phi](double y) { return phi(y); };
    } else {
        const auto& gh = std::get<GaussianHermiteSpec>(spec.variant);
        filter = normalized_unit_filter(gh.coeffs);
        transform = hermite_transform(gh);
    }
    const std::size_t width = filter.coeffs.size();
    // Innovations needed: u = t - lag for lag in [min_lag, max_lag].
    const std::int64_t u_begin = t_begin - filter.max_lag();
    const std::size_t u_count = n - 1 + width;
    std::vector<double> eps_buf(u_count);
    for (std::size_t r = 0; r < u_count; ++r) {
        eps_buf[r] = eps.at(u_begin + static_cast<std::int64_t>(r));
    }
    for (std::size_t r = 0; r < n; ++r) {
        // X_t = sum_r coeffs[r] * eps[t - (min_lag + r)]; highest lag first.
        double y = 0.0;
        const std::size_t base = r;  // index of eps at t - max_lag
        for (std::size_t c = 0; c < width; ++c) {
            y += filter.coeffs[width - 1 - c] * eps_buf[base + c];
        }
        out[r] = transform(y);
    }
}

[[nodiscard]] inline std::uint64_t generation_key(const ProcessSpec& spec) {
    return rng::derive_key(spec.seed, rng::tag_stream("gen"));
}

[[nodiscard]] inline std::uint64_t replacement_key(const ProcessSpec& spec) {
    return rng::derive_key(spec.seed, rng::tag_stream("swap"));
}

}  // namespace detail

/// Innovation value the generator would use at absolute time index u.
[[nodiscard]] inline double innovation_at(const ProcessSpec& spec, std::int64_t u) {
    const detail::InnovationSource src(detail::generation_key(spec), detail::innovation_of(spec));
    return src.at(u);
}

/// Replacement innovation used by coupled paths at index u.
[[nodiscard]] inline double replacement_innovation_at(const ProcessSpec& spec, std::int64_t u) {
    const detail::InnovationSource src(detail::replacement_key(spec), detail::innovation_of(spec));
    return src.at(u);
}

/// Generates X_1, ..., X_n.  Identical spec (including seed) gives an
/// identical series, bit for bit.
[[nodiscard]] inline Series generate(const ProcessSpec& spec, std::size_t n) {
    if (n == 0) throw EmptySeriesError("generate: n must be positive");
    detail::EpsProvider eps{
        detail::InnovationSource(detail::generation_key(spec), detail::innovation_of(spec)), {}};
    std::vector<double> values;
    detail::evaluate_path(spec, eps, 1, n, detail::generation_key(spec), values);
    return Series{std::move(values)};
}

/// Generates the pair (X, X*) on t = 1..n where X* re-runs the identical
/// functional with the innovation at index i swapped for an independent copy.
/// All other draws are shared, so the two paths differ only where index i
/// enters the moving window.
[[nodiscard]] inline std::pair<Series, Series> generate_coupled(const ProcessSpec& spec,
                                                                std::size_t n, std::int64_t i) {
    if (n == 0) throw EmptySeriesError("generate_coupled: n must be positive");
    const detail::InnovationSource base(detail::generation_key(spec), detail::innovation_of(spec));
    detail::EpsProvider eps{base, {}};
    std::vector<double> values;
    detail::evaluate_path(spec, eps, 1, n, detail::generation_key(spec), values);
    if (const auto* path = std::get_if<PathologicalSpec>(&spec.variant)) {
        // The pathological law draws from its own stream; the swap replaces
        // that draw directly at time i.
        std::vector<double> values_swapped = values;
        if (i >= 1 && i <= static_cast<std::int64_t>(n)) {
            const rng::CounterRng gen(detail::replacement_key(spec));
            values_swapped[static_cast<std::size_t>(i - 1)] =
                detail::pathological_value(gen, i, path->atom_cap);
        }
        return {Series{std::move(values)}, Series{std::move(values_swapped)}};
    }
    detail::EpsProvider swapped{base, std::make_pair(i, replacement_innovation_at(spec, i))};
    std::vector<double> values_swapped;
    detail::evaluate_path(spec, swapped, 1, n, detail::generation_key(spec), values_swapped);
    return {Series{std::move(values)}, Series{std::move(values_swapped)}};
}

/// One replication of the coupled pair (X_0, X_0*) with the swap at index i.
/// Each replication draws from its own derived streams, so replications are
/// independent and order-insensitive.
[[nodiscard]] inline std::pair<double, double> coupled_pair_at_zero(const ProcessSpec& spec,
                                                                    std::int64_t i,
                                                                    std::uint64_t replication) {
    const std::uint64_t base_key =
        rng::derive_key(spec.seed, rng::tag_stream("delta-base", replication));
    const std::uint64_t swap_key =
        rng::derive_key(spec.seed, rng::tag_stream("delta-swap", replication));
    const detail::InnovationSource base(base_key, detail::innovation_of(spec));
    const detail::InnovationSource repl(swap_key, detail::innovation_of(spec));
    detail::EpsProvider eps{base, {}};
    std::vector<double> value;
    detail::evaluate_path(spec, eps, 0, 1, base_key, value);
    detail::EpsProvider swapped{base, std::make_pair(i, repl.at(i))};
    // The pathological variant has no innovation window: swapping index i
    // only matters at t = i, which the path key covers directly.
    std::vector<double> value_swapped;
    if (std::get_if<PathologicalSpec>(&spec.variant)) {
        if (i == 0) {
            const rng::CounterRng gen(swap_key);
            const auto& path = std::get<PathologicalSpec>(spec.variant);
            value_swapped = {detail::pathological_value(gen, 0, path.atom_cap)};
        } else {
            value_swapped = value;
        }
    } else {
        detail::evaluate_path(spec, swapped, 0, 1, base_key, value_swapped);
    }
    return {value[0], value_swapped[0]};
}

/// Population raw moments of the marginal law, analytic where the variant
/// admits closed forms and Monte Carlo (flagged) otherwise.
struct MomentInfo {
    std::vector<double> values;
    bool analytic = true;
};

[[nodiscard]] inline MomentInfo population_moments(const ProcessSpec& spec, std::size_t order,
                                                   std::size_t mc_samples = 1'000'000) {
    MomentInfo info;
    info.values.assign(order, 0.0);
    const auto mc_fill = [&](std::size_t from) {
        ProcessSpec probe = spec;
        probe.seed = rng::derive_key(spec.seed, rng::tag_stream("moment-pass"));
        const Series xs = generate(probe, mc_samples);
        std::vector<numeric::CompensatedSum> acc(order);
        for (double x : xs.values) {
            double p = 1.0;
            for (std::size_t k = 0; k < order; ++k) {
                p *= x;
                acc[k].add(p);
            }
        }
        for (std::size_t k = from; k < order; ++k) {
            info.values[k] = acc[k].value() / static_cast<double>(mc_samples);
        }
        info.analytic = false;
    };
    if (const auto* iid = std::get_if<IidSpec>(&spec.variant)) {
        for (std::size_t k = 1; k <= order; ++k) {
            info.values[k - 1] = innovation_moment(iid->innovation, static_cast<int>(k));
        }
        return info;
    }
    if (const auto* path = std::get_if<PathologicalSpec>(&spec.variant)) {
        for (std::size_t k = 1; k <= order; ++k) {
            if (k % 2 == 1) {
                info.values[k - 1] = 0.0;
                continue;
            }
            numeric::CompensatedSum acc;
            for (int atom = 1; atom <= path->atom_cap; ++atom) {
                const double prob = atom < path->atom_cap ? std::pow(2.0, -atom)
                                                          : std::pow(2.0, -(path->atom_cap - 1));
                acc.add(prob * std::pow(detail::pathological_atom(atom),
                                        static_cast<double>(k) / 2.0));
            }
            info.values[k - 1] = acc.value();
        }
        return info;
    }
    if (const auto* lin = std::get_if<LinearSpec>(&spec.variant)) {
        if (order <= 4) {
            const Filter f = materialize(lin->coeffs);
            double s2 = 0.0, s3 = 0.0, s4 = 0.0;
            for (double c : f.coeffs) {
                s2 += c * c;
                s3 += c * c * c;
                s4 += c * c * c * c;
            }
            const double m2 = innovation_moment(lin->innovation, 2);
            const double m3 = innovation_moment(lin->innovation, 3);
            const double m4 = innovation_moment(lin->innovation, 4);
            if (order >= 1) info.values[0] = 0.0;
            if (order >= 2) info.values[1] = s2 * m2;
            if (order >= 3) info.values[2] = s3 * m3;
            if (order >= 4) {
                const double kappa4 = m4 - 3.0 * m2 * m2;
                info.values[3] = s4 * kappa4 + 3.0 * info.values[1] * info.values[1];
            }
            return info;
        }
        mc_fill(0);
        return info;
    }
    if (const auto* hoe = std::get_if<HoelderLinearSpec>(&spec.variant)) {
        if (hoe->innovation == Innovation::normal) {
            const Filter f = materialize(hoe->coeffs);
            const double sigma_y = std::sqrt(f.sum_sq());
            const Transform phi = hoe->phi;
            for (std::size_t k = 1; k <= order; ++k) {
                info.values[k - 1] = quad::normal_expectation([&](double z) {
                    return std::pow(phi(sigma_y * z), static_cast<double>(k));
                });
            }
            return info;
        }
        mc_fill(0);
        return info;
    }
    if (const auto* gh = std::get_if<GaussianHermiteSpec>(&spec.variant)) {
        const auto transform = detail::hermite_transform(*gh);
        for (std::size_t k = 1; k <= order; ++k) {
            info.values[k - 1] = quad::normal_expectation(
                [&](double z) { return std::pow(transform(z), static_cast<double>(k)); });
        }
        return info;
    }
    const auto& vol = std::get<VolterraSpec>(spec.variant);
    if (order <= 2) {
        info.values[0] = 0.0;
        if (order >= 2) {
            // Canonicalize lag pairs; only matching pairs survive E eps^2 = 1.
            std::map<std::pair<int, int>, double> canonical;
            for (const auto& e : vol.entries) {
                const auto key = std::minmax(e.lag_a, e.lag_b);
                canonical[{key.first, key.second}] += e.weight;
            }
            double s = 0.0;
            for (const auto& [lags, w] : canonical) s += w * w;
            const double m2 = innovation_moment(vol.innovation, 2);
            info.values[1] = s * m2 * m2;
        }
        return info;
    }
    {
        // means of odd powers vanish by sign symmetry only for symmetric
        // innovations; estimate everything beyond order 2 by Monte Carlo.
        std::map<std::pair<int, int>, double> canonical;
        for (const auto& e : vol.entries) {
            const auto key = std::minmax(e.lag_a, e.lag_b);
            canonical[{key.first, key.second}] += e.weight;
        }
        double s = 0.0;
        for (const auto& [lags, w] : canonical) s += w * w;
        mc_fill(2);
        info.values[0] = 0.0;
        const double m2 = innovation_moment(vol.innovation, 2);
        info.values[1] = s * m2 * m2;
        return info;
    }
}

/// Gaussian latent structure of a variant, when it has one: X_t = T(sigma_y
/// Z_t) with (Z_t) standard Gaussian of autocorrelation rho, so population
/// functionals reduce to one-dimensional normal expectations.
struct LatentGaussian {
    double sigma_y = 1.0;
    std::vector<double> rho;  // rho[t], t = 0..T (zero beyond)
    std::function<double(double)> x_of_z;
};

[[nodiscard]] inline std::vector<double> filter_autocovariance(const Filter& f) {
    const std::size_t width = f.coeffs.size();
    std::vector<double> r(width, 0.0);
    for (std::size_t t = 0; t < width; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j + t < width; ++j) s += f.coeffs[j] * f.coeffs[j + t];
        r[t] = s;
    }
    return r;
}

[[nodiscard]] inline std::optional<LatentGaussian> latent_gaussian(const ProcessSpec& spec) {
    Filter filter;
    std::function<double(double)> x_of_z;
    if (const auto* iid = std::get_if<IidSpec>(&spec.variant)) {
        if (iid->innovation != Innovation::normal) return std::nullopt;
        LatentGaussian lat;
        lat.sigma_y = 1.0;
        lat.rho = {1.0};
        lat.x_of_z = [](double z) { return z; };
        return lat;
    }
    if (const auto* lin = std::get_if<LinearSpec>(&spec.variant)) {
        if (lin->innovation != Innovation::normal) return std::nullopt;
        filter = materialize(lin->coeffs);
        const double sigma_y = std::sqrt(filter.sum_sq());
        x_of_z = [sigma_y](double z) { return sigma_y * z; };
        LatentGaussian lat;
        lat.sigma_y = sigma_y;
        const auto r = filter_autocovariance(filter);
        lat.rho.resize(r.size());
        for (std::size_t t = 0; t < r.size(); ++t) lat.rho[t] = r[t] / r[0];
        lat.x_of_z = x_of_z;
        return lat;
    }
    if (const auto* hoe = std::get_if<HoelderLinearSpec>(&spec.variant)) {
        if (hoe->innovation != Innovation::normal) return std::nullopt;
        filter = materialize(hoe->coeffs);
        const double sigma_y = std::sqrt(filter.sum_sq());
        const Transform phi = hoe->phi;
        LatentGaussian lat;
        lat.sigma_y = sigma_y;
        const auto r = filter_autocovariance(filter);
        lat.rho.resize(r.size());
        for (std::size_t t = 0; t < r.size(); ++t) lat.rho[t] = r[t] / r[0];
        lat.x_of_z = [phi, sigma_y](double z) { return phi(sigma_y * z); };
        return lat;
    }
    if (const auto* gh = std::get_if<GaussianHermiteSpec>(&spec.variant)) {
        filter = detail::normalized_unit_filter(gh->coeffs);
        LatentGaussian lat;
        lat.sigma_y = 1.0;
        const auto r = filter_autocovariance(filter);
        lat.rho.resize(r.size());
        for (std::size_t t = 0; t < r.size(); ++t) lat.rho[t] = r[t] / r[0];
        lat.x_of_z = detail::hermite_transform(*gh);
        return lat;
    }
    return std::nullopt;
}

/// Orthogonal expansion of a transform in probabilists' Hermite polynomials
/// under the standard normal law: fn ~ sum_q c_q He_q.
struct HermiteExpansion {
    std::vector<double> coeffs;  // c_q for q = 0..max_degree
    double variance = 0.0;       // sum_{q >= 1} q! c_q^2
};

[[nodiscard]] inline HermiteExpansion hermite_expand(const std::function<double(double)>& fn,
                                                     int max_degree) {
    if (max_degree < 0) throw Error("hermite_expand: negative degree");
    // Square-integrability heuristic: fn^2 exp(-z^2/2) must decay along the
    // sampled ray, otherwise the expansion does not converge.
    double prev = 0.0;
    for (double z : {8.0, 10.0, 12.0}) {
        const double v = fn(z) * fn(z) * std::exp(-0.5 * z * z);
        if (!std::isfinite(v) || (z > 8.0 && v > prev && v > 1.0)) {
            throw NonSquareIntegrableError("transform is not square integrable under the normal law");
        }
        prev = v;
    }
    HermiteExpansion exp;
    exp.coeffs.assign(static_cast<std::size_t>(max_degree) + 1, 0.0);
    // Composite panel quadrature split at zero: exact for polynomial
    // transforms, and keeps full accuracy for transforms with a kink there.
    const double kink[1] = {0.0};
    double factorial = 1.0;
    for (int q = 0; q <= max_degree; ++q) {
        if (q > 0) factorial *= static_cast<double>(q);
        const double raw = quad::normal_expectation_split(
            [&](double z) { return fn(z) * quad::hermite_probabilist(q, z); }, kink);
        exp.coeffs[static_cast<std::size_t>(q)] = raw / factorial;
        if (q > 0) {
            exp.variance += factorial * exp.coeffs[static_cast<std::size_t>(q)] *
                            exp.coeffs[static_cast<std::size_t>(q)];
        }
    }
    return exp;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization of process specifications.

[[nodiscard]] inline nlohmann::ordered_json coeffs_to_json(const CoeffSpec& c) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(c.kind);
    switch (c.kind) {
        case CoeffSpec::Kind::list:
            j["values"] = c.values;
            j["offset"] = c.offset;
            break;
        case CoeffSpec::Kind::geometric:
        case CoeffSpec::Kind::two_sided_geometric:
            j["scale"] = c.scale;
            j["rate"] = c.rate;
            j["window"] = c.window;
            break;
        case CoeffSpec::Kind::power:
            j["scale"] = c.scale;
            j["exponent"] = c.exponent;
            j["window"] = c.window;
            break;
    }
    return j;
}

[[nodiscard]] inline CoeffSpec coeffs_from_json(const nlohmann::json& j) {
    CoeffSpec c;
    if (!j.is_object() || !j.contains("kind")) {
        throw IoError("coeffs: expected an object with a 'kind' field");
    }
    c.kind = coeff_kind_from_string(j.at("kind").get<std::string>());
    switch (c.kind) {
        case CoeffSpec::Kind::list:
            if (!j.contains("values")) throw IoError("coeffs: list kind requires 'values'");
            c.values = j.at("values").get<std::vector<double>>();
            c.offset = j.value("offset", 0);
            break;
        case CoeffSpec::Kind::geometric:
        case CoeffSpec::Kind::two_sided_geometric:
            c.scale = j.value("scale", 1.0);
            c.rate = j.value("rate", 0.5);
            c.window = j.value("window", std::size_t{0});
            break;
        case CoeffSpec::Kind::power:
            c.scale = j.value("scale", 1.0);
            c.exponent = j.value("exponent", 2.0);
            c.window = j.value("window", std::size_t{0});
            break;
    }
    return c;
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const ProcessSpec& spec) {
    nlohmann::ordered_json j;
    if (const auto* iid = std::get_if<IidSpec>(&spec.variant)) {
        j["variant"] = "iid";
        j["innovation"] = to_string(iid->innovation);
    } else if (const auto* lin = std::get_if<LinearSpec>(&spec.variant)) {
        j["variant"] = "linear";
        j["innovation"] = to_string(lin->innovation);
        j["coeffs"] = coeffs_to_json(lin->coeffs);
    } else if (const auto* hoe = std::get_if<HoelderLinearSpec>(&spec.variant)) {
        j["variant"] = "hoelder_linear";
        j["innovation"] = to_string(hoe->innovation);
        j["phi"] = {{"name", hoe->phi.name}, {"param", hoe->phi.param}};
        j["coeffs"] = coeffs_to_json(hoe->coeffs);
    } else if (const auto* gh = std::get_if<GaussianHermiteSpec>(&spec.variant)) {
        j["variant"] = "gaussian_hermite";
        if (!gh->hermite_coeffs.empty()) {
            j["hermite_coeffs"] = gh->hermite_coeffs;
        } else {
            j["phi"] = {{"name", gh->phi.name}, {"param", gh->phi.param}};
        }
        j["coeffs"] = coeffs_to_json(gh->coeffs);
    } else if (const auto* vol = std::get_if<VolterraSpec>(&spec.variant)) {
        j["variant"] = "volterra";
        j["innovation"] = to_string(vol->innovation);
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const auto& e : vol->entries) {
            entries.push_back({e.lag_a, e.lag_b, e.weight});
        }
        j["entries"] = entries;
    } else {
        const auto& path = std::get<PathologicalSpec>(spec.variant);
        j["variant"] = "pathological";
        j["atom_cap"] = path.atom_cap;
    }
    j["seed"] = spec.seed;
    return j;
}

[[nodiscard]] inline ProcessSpec from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("variant")) {
        throw IoError("process spec: expected an object with a 'variant' field");
    }
    ProcessSpec spec;
    const std::string variant = j.at("variant").get<std::string>();
    const auto innovation = [&]() {
        return innovation_from_string(j.value("innovation", std::string("normal")));
    };
    if (variant == "iid") {
        spec.variant = IidSpec{innovation()};
    } else if (variant == "linear") {
        if (!j.contains("coeffs")) throw IoError("linear spec requires 'coeffs'");
        spec.variant = LinearSpec{coeffs_from_json(j.at("coeffs")), innovation()};
    } else if (variant == "hoelder_linear") {
        if (!j.contains("coeffs") || !j.contains("phi")) {
            throw IoError("hoelder_linear spec requires 'coeffs' and 'phi'");
        }
        Transform phi;
        phi.name = j.at("phi").value("name", std::string("identity"));
        phi.param = j.at("phi").value("param", 0.0);
        spec.variant = HoelderLinearSpec{phi, coeffs_from_json(j.at("coeffs")), innovation()};
    } else if (variant == "gaussian_hermite") {
        if (!j.contains("coeffs")) throw IoError("gaussian_hermite spec requires 'coeffs'");
        GaussianHermiteSpec gh;
        gh.coeffs = coeffs_from_json(j.at("coeffs"));
        if (j.contains("hermite_coeffs")) {
            gh.hermite_coeffs = j.at("hermite_coeffs").get<std::vector<double>>();
        } else if (j.contains("phi")) {
            gh.phi.name = j.at("phi").value("name", std::string("identity"));
            gh.phi.param = j.at("phi").value("param", 0.0);
        } else {
            throw IoError("gaussian_hermite spec requires 'hermite_coeffs' or 'phi'");
        }
        spec.variant = std::move(gh);
    } else if (variant == "volterra") {
        if (!j.contains("entries")) throw IoError("volterra spec requires 'entries'");
        VolterraSpec vol;
        vol.innovation = innovation();
        for (const auto& row : j.at("entries")) {
            if (!row.is_array() || row.size() != 3) {
                throw IoError("volterra entry must be [lag_a, lag_b, weight]");
            }
            vol.entries.push_back(
                {row[0].get<int>(), row[1].get<int>(), row[2].get<double>()});
        }
        if (vol.entries.empty()) throw InvalidCoefficientsError("volterra: no entries");
        for (const auto& e : vol.entries) {
            if (e.lag_a == e.lag_b) {
                throw InvalidCoefficientsError("volterra: diagonal entry at lag " +
                                               std::to_string(e.lag_a));
            }
        }
        spec.variant = std::move(vol);
    } else if (variant == "pathological") {
        PathologicalSpec path;
        path.atom_cap = j.value("atom_cap", 30);
        if (path.atom_cap < 1 || path.atom_cap > 60) {
            throw InvalidCoefficientsError("pathological atom cap must lie in [1, 60]");
        }
        spec.variant = path;
    } else {
        throw IoError("unknown process variant '" + variant + "'");
    }
    spec.seed = j.value("seed", std::uint64_t{1});
    return spec;
}

}  // namespace blockstat::processes
