#include "cdi/mlem.hpp"

#include <cmath>

namespace cdi::tomo {

Tensor mlem_reconstruct(const Tensor& sino, const Geometry& g, AngleSet set, const Tensor* mu,
                        const MlemOptions& opts) {
    if (opts.iterations < 1) throw ValueError("mlem_reconstruct: iterations must be >= 1");
    for (double v : sino.data)
        if (!(v >= 0.0)) throw ValueError("mlem_reconstruct: sinogram must be nonnegative");

    Tensor ones({g.rows(set), g.n});
    ones.fill(1.0);
    const Tensor sens = back_project(ones, mu, g, set);

    Tensor x({g.n, g.n});
    if (opts.init) {
        if (!opts.init->same_shape(x))
            throw ShapeError("mlem_reconstruct: init shape " + Tensor::shape_str(opts.init->shape));
        x = *opts.init;
    } else {
        x.fill(1.0);
    }

    Tensor ratio({g.rows(set), g.n});
    for (int it = 0; it < opts.iterations; ++it) {
        Tensor fp = forward_project(x, mu, g, set);
        for (std::size_t i = 0; i < ratio.data.size(); ++i)
            ratio.data[i] = fp.data[i] > 0.0 ? sino.data[i] / fp.data[i] : 0.0;
        Tensor corr = back_project(ratio, mu, g, set);
        for (std::size_t p = 0; p < x.data.size(); ++p)
            x.data[p] = sens.data[p] > 0.0 ? x.data[p] * corr.data[p] / sens.data[p] : 0.0;
        if (opts.per_iteration) opts.per_iteration(it, x);
    }
    return x;
}

Tensor mlem_reconstruct(const Tensor& sino, const Geometry& g, AngleSet set, const Tensor* mu,
                        int iterations) {
    MlemOptions opts;
    opts.iterations = iterations;
    return mlem_reconstruct(sino, g, set, mu, opts);
}

double poisson_loglik(const Tensor& y, const Tensor& yhat) {
    if (!y.same_shape(yhat)) throw ShapeError("poisson_loglik: shape mismatch");
    double ll = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        ll -= yhat.data[i];
        if (y.data[i] > 0.0) ll += y.data[i] * std::log(yhat.data[i]);
    }
    return ll;
}

} // namespace cdi::tomo
