#include "cdi/metrics.hpp"

#include <cmath>
#include <limits>

namespace cdi::eval {

namespace {

void check_pair(const Tensor& x, const Tensor& ref, const char* op) {
    if (!x.same_shape(ref))
        throw ShapeError(std::string(op) + ": " + Tensor::shape_str(x.shape) + " vs " +
                         Tensor::shape_str(ref.shape));
}

} // namespace

double nmse_percent(const Tensor& x, const Tensor& ref) {
    check_pair(x, ref, "nmse");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        double d = x.data[i] - ref.data[i];
        num += d * d;
        den += ref.data[i] * ref.data[i];
    }
    if (den == 0.0) throw ValueError("nmse: reference is all zero");
    return 100.0 * num / den;
}

double nmae_percent(const Tensor& x, const Tensor& ref) {
    check_pair(x, ref, "nmae");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        num += std::abs(x.data[i] - ref.data[i]);
        den += std::abs(ref.data[i]);
    }
    if (den == 0.0) throw ValueError("nmae: reference is all zero");
    return 100.0 * num / den;
}

double ssim(const Tensor& x, const Tensor& ref) {
    check_pair(x, ref, "ssim");
    if (x.ndim() != 2) throw ShapeError("ssim: expects 2D images");
    const int h = x.dim(0), w = x.dim(1);
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    if (h < kWin || w < kWin)
        throw ValueError("ssim: image smaller than the 11x11 window");

    double range = 0.0;
    for (double v : ref.data) range = std::max(range, v);
    if (range <= 0.0) throw ValueError("ssim: reference has no positive dynamic range");
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);

    double kernel[kWin][kWin];
    double ksum = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            double dy = i - (kWin - 1) / 2.0, dx = j - (kWin - 1) / 2.0;
            kernel[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            ksum += kernel[i][j];
        }
    for (auto& row : kernel)
        for (double& v : row) v /= ksum;

    double acc = 0.0;
    int count = 0;
    for (int oy = 0; oy + kWin <= h; ++oy) {
        for (int ox = 0; ox + kWin <= w; ++ox) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < kWin; ++i)
                for (int j = 0; j < kWin; ++j) {
                    double kv = kernel[i][j];
                    double a = x.at2(oy + i, ox + j);
                    double b = ref.at2(oy + i, ox + j);
                    mx += kv * a;
                    my += kv * b;
                    sxx += kv * a * a;
                    syy += kv * b * b;
                    sxy += kv * a * b;
                }
            double vx = sxx - mx * mx;
            double vy = syy - my * my;
            double cov = sxy - mx * my;
            acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return acc / count;
}

double psnr_db(const Tensor& x, const Tensor& ref) {
    check_pair(x, ref, "psnr");
    double peak = 0.0;
    for (double v : ref.data) peak = std::max(peak, v);
    if (peak <= 0.0) throw ValueError("psnr: reference has no positive peak");
    double mse = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        double d = x.data[i] - ref.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

// Continued-fraction evaluation (Lentz) of the incomplete beta integral.
static double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16, kTiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw ValueError("incomplete beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("paired_ttest: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw ValueError("paired_ttest: need at least 2 pairs");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    double var = ss / static_cast<double>(n - 1);
    if (var == 0.0) throw ValueError("paired_ttest: zero-variance differences (degenerate)");
    double t = mean / std::sqrt(var / static_cast<double>(n));
    double nu = static_cast<double>(n - 1);
    return regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

} // namespace cdi::eval
