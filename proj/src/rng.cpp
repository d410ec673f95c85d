#include "cdi/rng.hpp"

#include <cmath>

#include "cdi/error.hpp"

namespace cdi {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}

static long long poisson_knuth(CounterRng& rng, double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    long long k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.uniform();
    } while (p > limit);
    return k - 1;
}

std::uint64_t CounterRng::mix(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix(mix(seed) ^ stream)) {}

CounterRng CounterRng::derive(std::uint64_t substream) const {
    CounterRng r(0);
    r.key_ = mix(key_ ^ mix(substream));
    return r;
}

std::uint64_t CounterRng::next_u64() { return mix(key_ + kGolden * counter_++); }

double CounterRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double CounterRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

double CounterRng::normal(double mu, double sigma) { return mu + sigma * normal(); }

long long CounterRng::poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) throw ValueError("poisson mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    long long total = 0;
    // Poisson(a + b) = Poisson(a) + Poisson(b) with independent chunks.
    constexpr double kChunk = 500.0;
    while (mean > kChunk) {
        total += poisson_knuth(*this, kChunk);
        mean -= kChunk;
    }
    total += poisson_knuth(*this, mean);
    return total;
}

std::uint64_t CounterRng::below(std::uint64_t n) {
    if (n == 0) throw ValueError("below(0)");
    // Rejection keeps the draw unbiased.
    std::uint64_t limit = ~0ull - (~0ull % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

} // namespace cdi
