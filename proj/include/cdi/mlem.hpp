#pragma once

#include <functional>

#include "cdi/geometry.hpp"
#include "cdi/projector.hpp"

namespace cdi::tomo {

struct MlemOptions {
    int iterations = 30;
    // Start image; uniform 1.0 when null. Zeros in the start image are
    // preserved by the multiplicative update.
    const Tensor* init = nullptr;
    // Called after every update with (iteration index, current image).
    std::function<void(int, const Tensor&)> per_iteration;
};

// ML-EM reconstruction: x <- x * BP(y / FP(x)) / BP(1).
//
// Ratio bins with FP(x) = 0 are treated as 0 (the 0/0 convention); pixels
// with zero sensitivity never receive counts and stay at 0. The sensitivity
// image BP(1) is computed once. Output is nonnegative.
Tensor mlem_reconstruct(const Tensor& sino, const Geometry& g, AngleSet set, const Tensor* mu,
                        const MlemOptions& opts);

Tensor mlem_reconstruct(const Tensor& sino, const Geometry& g, AngleSet set,
                        const Tensor* mu = nullptr, int iterations = 30);

// Poisson log-likelihood sum(y log yhat - yhat), with the y log yhat term
// dropped where y = 0. Used by the monotonicity checks.
double poisson_loglik(const Tensor& y, const Tensor& yhat);

} // namespace cdi::tomo
