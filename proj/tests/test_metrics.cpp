#include "doctest.h"

#include <cmath>

#include "cdi/metrics.hpp"
#include "cdi/rng.hpp"

using namespace cdi;
using namespace cdi::eval;

namespace {
Tensor randu(std::vector<int> shape, CounterRng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform();
    return t;
}
} // namespace

TEST_CASE("nmse/nmae identities and homogeneity") {
    CounterRng rng(1);
    Tensor ref = randu({16, 16}, rng);
    CHECK(nmse_percent(ref, ref) == 0.0);
    CHECK(nmae_percent(ref, ref) == 0.0);

    Tensor twice = ref;
    for (auto& v : twice.data) v *= 2.0;
    CHECK(nmse_percent(twice, ref) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(nmae_percent(twice, ref) == doctest::Approx(100.0).epsilon(1e-12));

    // Scale invariance: alpha x vs alpha ref.
    Tensor x = randu({16, 16}, rng);
    double base = nmse_percent(x, ref);
    Tensor xs = x, rs = ref;
    for (auto& v : xs.data) v *= 3.7;
    for (auto& v : rs.data) v *= 3.7;
    CHECK(nmse_percent(xs, rs) == doctest::Approx(base).epsilon(1e-12));

    Tensor zero({4});
    CHECK_THROWS_AS(nmse_percent(zero, zero), ValueError);
    CHECK_THROWS_AS(nmae_percent(zero, zero), ValueError);
}

TEST_CASE("nmse/nmae agree with direct summation on a shifted signal") {
    // ref has unit norm; x = ref + c.
    const int n = 64;
    Tensor ref({n});
    for (int i = 0; i < n; ++i) ref.data[i] = (i % 2 ? 1.0 : -1.0) / std::sqrt(double(n));
    const double c = 0.25;
    Tensor x = ref;
    for (auto& v : x.data) v += c;

    double num2 = 0, den2 = 0, num1 = 0, den1 = 0;
    for (int i = 0; i < n; ++i) {
        num2 += c * c;
        den2 += ref.data[i] * ref.data[i];
        num1 += std::abs(c);
        den1 += std::abs(ref.data[i]);
    }
    CHECK(nmse_percent(x, ref) == doctest::Approx(100.0 * num2 / den2).epsilon(1e-12));
    CHECK(nmae_percent(x, ref) == doctest::Approx(100.0 * num1 / den1).epsilon(1e-12));
}

TEST_CASE("ssim and psnr behave at the fixed points") {
    CounterRng rng(2);
    Tensor ref = randu({24, 24}, rng);
    CHECK(ssim(ref, ref) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::isinf(psnr_db(ref, ref)));

    // max(ref) = 1, MSE = 0.01 -> 20 dB.
    Tensor flat({16, 16});
    flat.fill(0.5);
    flat.data[0] = 1.0;
    Tensor noisy = flat;
    for (auto& v : noisy.data) v += 0.1;
    double mse = 0.01;
    CHECK(psnr_db(noisy, flat) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));

    Tensor zero({16, 16});
    CHECK_THROWS_AS(psnr_db(zero, zero), ValueError);
    CHECK_THROWS_AS(ssim(zero, zero), ValueError);
    Tensor tiny({4, 4});
    tiny.fill(1.0);
    CHECK_THROWS_AS(ssim(tiny, tiny), ValueError);
}

TEST_CASE("ssim of a checkerboard against its inverse is negative") {
    const int n = 32;
    Tensor a({n, n}), b({n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double v = ((x + y) % 2 == 0) ? 1.0 : 0.0;
            a.at2(y, x) = v;
            b.at2(y, x) = 1.0 - v;
        }
    CHECK(ssim(b, a) < 0.0);
}

TEST_CASE("incomplete beta matches reference values") {
    // I_x(a,b) spot checks, plus the two-sided t tail via the identity
    // p = I_{nu/(nu+t^2)}(nu/2, 1/2): t=2.5, nu=7 -> 0.0409922...
    double nu = 7.0, t = 2.5;
    double p = regularized_incomplete_beta(nu / 2, 0.5, nu / (nu + t * t));
    CHECK(p == doctest::Approx(0.040992218585752874).epsilon(1e-10));
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    double lhs = regularized_incomplete_beta(1.7, 0.4, 0.3);
    double rhs = 1.0 - regularized_incomplete_beta(0.4, 1.7, 0.7);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("paired t-test matches hand and scipy computations") {
    // differences [1,1,1,2]: mean 1.25, sd 0.5, t = 5.0, p = 0.015392...
    std::vector<double> a{2.0, 3.0, 4.0, 6.0};
    std::vector<double> b{1.0, 2.0, 3.0, 4.0};
    CHECK(paired_ttest(a, b) == doctest::Approx(0.015392438073302296).epsilon(1e-10));

    // Frozen scipy.stats.ttest_rel cross-check on a 12-sample pair.
    std::vector<double> x{-1.085631, 0.997345, 0.282978, -1.506295, -0.5786, 1.651437,
                          -2.426679, -0.428913, 1.265936, -0.86674, -0.678886, -0.094709};
    std::vector<double> y{-0.039936, 0.977894, 0.360988, -1.42347, 0.824365, 3.04483,
                          -1.624652, 0.064181, 1.934621, 0.178626, -0.846803, 0.793206};
    CHECK(paired_ttest(x, y) == doctest::Approx(0.0018725433439271174).epsilon(1e-7));

    CHECK(paired_ttest(x, y) == paired_ttest(y, x));  // two-sided symmetry
}

TEST_CASE("paired t-test extreme and degenerate cases") {
    CounterRng rng(3);
    std::vector<double> a(200), b(200);
    for (int i = 0; i < 200; ++i) {
        a[i] = rng.normal();
        b[i] = a[i] + 10.0 + 0.01 * rng.normal();  // shift far beyond the noise
    }
    CHECK(paired_ttest(a, b) < 1e-10);

    // Symmetric noise differences: p should not be extreme.
    for (int i = 0; i < 200; ++i) {
        a[i] = rng.normal();
        b[i] = a[i] + 0.3 * rng.normal();
    }
    CHECK(paired_ttest(a, b) > 0.001);

    std::vector<double> same{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(paired_ttest(same, same), ValueError);
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(paired_ttest(one, one), ValueError);
    std::vector<double> mismatched{1.0, 2.0};
    CHECK_THROWS_AS(paired_ttest(mismatched, same), ShapeError);
}
