#pragma once

#include <cstdint>
#include <string_view>

namespace cdi {

// FNV-1a; used to derive per-name RNG streams and to fingerprint configs.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Counter-based random generator.
//
// The raw stream is the SplitMix64 output function applied to
// key + i * 0x9E3779B97F4A7C15 for draw index i = 0, 1, 2, ...; the key is
// itself the mix of (seed, stream). Draw i therefore depends only on
// (seed, stream, i): streams can be split per sample / per parameter and
// replayed on any platform. Doubles are built from the top 53 bits.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    // Independent substream; equal to CounterRng(seed, ...) mixing, so
    // derive(a).derive(b) != derive(b).derive(a).
    CounterRng derive(std::uint64_t substream) const;

    std::uint64_t next_u64();
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // standard normal, Box-Muller
    double normal(double mu, double sigma);
    // Exact Poisson sample via Knuth's product method, chunked so that
    // means far above exp-underflow (~745) remain exact.
    long long poisson(double mean);
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    static std::uint64_t mix(std::uint64_t x);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace cdi
