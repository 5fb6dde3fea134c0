#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

namespace bacnet {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over the raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Counter-based generator: the i-th draw is a pure function of (key, i), so
/// streams are reproducible on every platform and independent of draw order
/// across distinct keys. Distribution mapping is done here rather than via
/// <random> distributions, whose output is implementation-defined.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(mix64(seed ^ mix64(stream ^ 0x5851f42d4c957f2dULL))) {}

    std::uint64_t next_u64() noexcept { return mix64(key_ + 0x9e3779b97f4a7c15ULL * (counter_++)); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound) noexcept {
        // Lemire's multiply-shift with rejection: exact uniformity.
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one value per call).
    double normal() noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

template <typename T>
void shuffle(std::span<T> items, CounterRng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

inline std::vector<std::size_t> permutation(std::size_t n, CounterRng& rng) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(p), rng);
    return p;
}

}  // namespace bacnet
