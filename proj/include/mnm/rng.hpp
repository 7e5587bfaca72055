#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace mnm {

/**
 * Counter-based generator: the i-th output is a pure function of (key, i),
 * computed with the SplitMix64 finalizer. Runs that derive their key from the
 * same (experiment, seed, stream) name see identical streams no matter how
 * they are scheduled.
 */
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0) : key_(key) {}

    /// Key derived from an experiment name, a seed and a stream label.
    static CounterRng named(std::string_view experiment, std::uint64_t seed, std::string_view stream = {}) {
        std::uint64_t k = fnv1a(experiment);
        k = mix(k ^ mix(seed + 0x632be59bd9b4e019ULL));
        k = mix(k ^ fnv1a(stream));
        return CounterRng(k);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    std::uint64_t counter() const { return counter_; }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Draws an index from a probability vector by inversion.
inline std::size_t sample_categorical(std::span<const double> probs, CounterRng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

}  // namespace mnm
