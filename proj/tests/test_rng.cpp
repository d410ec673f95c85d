#include "doctest.h"

#include <cmath>

#include "cdi/rng.hpp"

using cdi::CounterRng;

TEST_CASE("streams replay exactly") {
    CounterRng a(42, 3), b(42, 3);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CounterRng c(42, 4);
    CHECK(c.next_u64() != CounterRng(42, 3).next_u64());
}

TEST_CASE("derived substreams are order sensitive") {
    CounterRng root(11);
    auto ab = root.derive(1).derive(2);
    auto ba = root.derive(2).derive(1);
    CHECK(ab.next_u64() != ba.next_u64());
}

TEST_CASE("uniform moments look sane") {
    CounterRng rng(5);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        s += u;
        s2 += u * u;
    }
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(s2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("normal mean and variance") {
    CounterRng rng(6);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(s / n == doctest::Approx(0.0).epsilon(1).scale(0.02));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson of zero mean is always zero") {
    CounterRng rng(7);
    for (int i = 0; i < 100; ++i) CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("poisson large mean stays within 5 sigma") {
    CounterRng rng(8);
    const double mean = 1e6;
    double x = static_cast<double>(rng.poisson(mean));
    CHECK(std::abs(x - mean) < 5.0 * std::sqrt(mean));
}

TEST_CASE("poisson chunked path preserves the mean") {
    CounterRng rng(9);
    const double mean = 600.0;  // above the single-chunk cutoff
    const int n = 2000;
    double s = 0;
    for (int i = 0; i < n; ++i) s += static_cast<double>(rng.poisson(mean));
    CHECK(s / n == doctest::Approx(mean).epsilon(0.01));
}

TEST_CASE("poisson rejects bad means") {
    CounterRng rng(10);
    CHECK_THROWS(rng.poisson(-1.0));
    CHECK_THROWS(rng.poisson(std::numeric_limits<double>::infinity()));
}
