#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <string_view>

namespace blockstat::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64-style finalizer: bijective on 64-bit words with full avalanche.
[[nodiscard]] constexpr std::uint64_t avalanche(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

/// Derives an independent stream key from a seed and a stream index.
[[nodiscard]] constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) noexcept {
    return avalanche((seed + kGolden) ^ avalanche(stream * 0xd1342543de82ef95ULL + kGolden));
}

/// Folds a textual tag into a stream index so separate purposes (generation,
/// coupling, replication batches) never share draws.
[[nodiscard]] constexpr std::uint64_t tag_stream(std::string_view tag, std::uint64_t index = 0) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return avalanche(h) + index;
}

/// Stateless counter-based generator: every draw is a pure function of
/// (key, index, slot).  Replications can therefore run in any order, or in
/// parallel, and reproduce bit-identical values.
class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    [[nodiscard]] constexpr std::uint64_t word(std::int64_t index, std::uint64_t slot = 0) const noexcept {
        std::uint64_t x = static_cast<std::uint64_t>(index) * 0xd1342543de82ef95ULL;
        x ^= key_;
        x += slot * kGolden;
        x = avalanche(x);
        return avalanche(x ^ key_);
    }

    /// Uniform draw in the open interval (0, 1); never returns an endpoint.
    [[nodiscard]] double uniform(std::int64_t index, std::uint64_t slot = 0) const noexcept {
        return static_cast<double>(word(index, slot) >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    /// Standard normal via Box-Muller; slots 2s and 2s+1 feed draw slot s.
    [[nodiscard]] double normal(std::int64_t index, std::uint64_t slot = 0) const noexcept {
        const double u1 = uniform(index, 2 * slot);
        const double u2 = uniform(index, 2 * slot + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform on (-sqrt(3), sqrt(3)): mean zero, unit variance.
    [[nodiscard]] double uniform_centered(std::int64_t index, std::uint64_t slot = 0) const noexcept {
        constexpr double kRoot3 = 1.7320508075688772;
        return kRoot3 * (2.0 * uniform(index, slot) - 1.0);
    }

    /// Fair sign: plus or minus one.
    [[nodiscard]] double rademacher(std::int64_t index, std::uint64_t slot = 0) const noexcept {
        return (word(index, slot) & 1ULL) ? 1.0 : -1.0;
    }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
};

}  // namespace blockstat::rng
