#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace newsmon {

/// Counter-based 64-bit generator.
///
/// Draw n (n = 1, 2, ...) of a generator built from (seed, stream) is
///
///     key  = mix(seed ^ mix(stream + 0x9E3779B97F4A7C15))
///     x_n  = mix(key + n * 0x9E3779B97F4A7C15)
///
/// where mix is the SplitMix64 finalizer. Uniform reals take the top 53 bits.
/// Everything is plain integer arithmetic, so sequences agree across
/// platforms and compilers.
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream + kGolden))) {}

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() { return mix(key_ + (++counter_) * kGolden); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n); n must be positive.
    std::size_t index(std::size_t n) {
        auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Independent child seed for a named sub-task (per-K fit, per-slice fit, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return CounterRng::mix(seed + CounterRng::mix(tag * CounterRng::kGolden + 1));
}

/// Fisher-Yates with the counter generator (std::shuffle is not portable).
template <typename T>
void shuffle(std::span<T> items, CounterRng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = rng.index(i);
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace newsmon
