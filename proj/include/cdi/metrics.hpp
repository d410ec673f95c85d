#pragma once

#include <vector>

#include "cdi/tensor.hpp"

namespace cdi::eval {

// 100 * |x - ref|^2_2 / |ref|^2_2 and 100 * |x - ref|_1 / |ref|_1.
double nmse_percent(const Tensor& x, const Tensor& ref);
double nmae_percent(const Tensor& x, const Tensor& ref);

// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5, valid
// placements only), K1 = 0.01, K2 = 0.03, dynamic range = max(ref).
double ssim(const Tensor& x, const Tensor& ref);

// 10 log10(max(ref)^2 / MSE); +infinity for identical inputs (the CSV/JSON
// writers spell the sentinel "inf"/null).
double psnr_db(const Tensor& x, const Tensor& ref);

// Two-sided paired t-test p-value via the regularized incomplete beta
// function: p = I_x(nu/2, 1/2) with x = nu / (nu + t^2), nu = n - 1.
double paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

// Exposed for direct verification against reference tables.
double regularized_incomplete_beta(double a, double b, double x);

} // namespace cdi::eval
