#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace solarnet {

// Deterministic RNG used throughout the toolkit. Every consumer derives its
// generator from an explicit key (seed plus stream identifiers), never from
// global state, so reruns and worker scheduling cannot change any draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Multiply-shift mapping; bias is < 2^-64.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
};

// Compile-time stream tag for rng_for, e.g. rng_for(seed, stream_tag("split"), c).
constexpr std::uint64_t stream_tag(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (; *s; ++s) h = (h ^ static_cast<std::uint64_t>(*s)) * 0x100000001b3ULL;
    return h;
}

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

// Derives an independent stream from a seed and any number of key parts.
template <typename... Parts>
Rng rng_for(std::uint64_t seed, Parts... parts) {
    std::uint64_t h = detail::mix64(seed);
    ((h = detail::mix64(h ^ static_cast<std::uint64_t>(parts))), ...);
    return Rng(h);
}

// Fisher-Yates with our own bounded draw; std::shuffle's traversal is
// implementation-defined and would break byte-stable manifests.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace solarnet
