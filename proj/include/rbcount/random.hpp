#ifndef RBCOUNT_RANDOM_HPP
#define RBCOUNT_RANDOM_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rbcount {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combines a base seed with two coordinates into one well-mixed word.
/// Each coordinate passes through its own avalanche round, so (a, b) and
/// (b, a) land on unrelated outputs.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
    return h;
}

/// Counter-based stream: word i is mix_seed(seed, stream, i). Output depends
/// only on (seed, stream, position), never on what other streams consumed.
class DrawStream {
public:
    DrawStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : seed_(seed), stream_(stream) {}

    std::uint64_t next() noexcept { return mix_seed(seed_, stream_, counter_++); }

    /// Uniform integer in [0, bound) via Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) {
            throw std::invalid_argument("DrawStream::below: bound must be positive");
        }
        unsigned __int128 product = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// Uniform real in [0, 1) with 53 random bits.
    double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

/// Uniform k-subset of {0, ..., n-1} by Floyd's algorithm, returned sorted.
inline std::vector<std::uint32_t> sample_subset(DrawStream& rng, std::uint32_t n, std::uint32_t k) {
    if (k > n) {
        throw std::invalid_argument("sample_subset: k exceeds n");
    }
    std::vector<std::uint32_t> chosen;
    chosen.reserve(k);
    for (std::uint32_t j = n - k; j < n; ++j) {
        const auto t = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
        if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) {
            chosen.push_back(t);
        } else {
            chosen.push_back(j);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace rbcount

#endif  // RBCOUNT_RANDOM_HPP
