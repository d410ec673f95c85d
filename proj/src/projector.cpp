#include "cdi/projector.hpp"

#include <cmath>
#include <omp.h>

#include "cdi/threads.hpp"

namespace cdi::tomo {

void RayTrace::resize(int n) {
    pix0.resize(n);
    pix1.resize(n);
    w0.resize(n);
    w1.resize(n);
    att.resize(n);
}

void trace_ray(const double* mu, const Geometry& g, int angle_idx, int bin, RayTrace& ws) {
    const int n = g.n;
    const double d = g.pixel_size;
    const double theta = g.angle(angle_idx);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double half = 0.5 * (n - 1);
    const double sdet = (bin - half) * d;

    ws.resize(n);
    ws.steps = n;

    const bool y_dominant = std::abs(c) >= std::abs(s);
    ws.dl = d / (y_dominant ? std::abs(c) : std::abs(s));

    for (int k = 0; k < n; ++k) {
        double frac;
        int lo, row_or_col;
        if (y_dominant) {
            // One step per image row, ordered by increasing t (toward the
            // detector): increasing y when cos > 0, else decreasing.
            const int j = c > 0 ? k : n - 1 - k;
            const double y = (j - half) * d;
            const double t = (y - sdet * s) / c;
            const double x = sdet * c - t * s;
            const double fx = x / d + half;
            lo = static_cast<int>(std::floor(fx));
            frac = fx - lo;
            row_or_col = j;
            ws.pix0[k] = (lo >= 0 && lo < n) ? j * n + lo : -1;
            ws.pix1[k] = (lo + 1 >= 0 && lo + 1 < n) ? j * n + lo + 1 : -1;
        } else {
            // One step per column; t = (s*cos - x)/sin decreases with x, so
            // march columns right to left.
            const int i = n - 1 - k;
            const double x = (i - half) * d;
            const double t = (sdet * c - x) / s;
            const double y = sdet * s + t * c;
            const double fy = y / d + half;
            lo = static_cast<int>(std::floor(fy));
            frac = fy - lo;
            row_or_col = i;
            ws.pix0[k] = (lo >= 0 && lo < n) ? lo * n + row_or_col : -1;
            ws.pix1[k] = (lo + 1 >= 0 && lo + 1 < n) ? (lo + 1) * n + row_or_col : -1;
        }
        ws.w0[k] = 1.0 - frac;
        ws.w1[k] = frac;
    }

    if (mu == nullptr) {
        for (int k = 0; k < n; ++k) ws.att[k] = 1.0;
        return;
    }
    // Suffix pass from the detector side; half of the emitting step's own
    // path is included.
    double suffix = 0.0;
    for (int k = n - 1; k >= 0; --k) {
        double m0 = ws.pix0[k] >= 0 ? mu[ws.pix0[k]] : 0.0;
        double m1 = ws.pix1[k] >= 0 ? mu[ws.pix1[k]] : 0.0;
        double path = ws.dl * (ws.w0[k] * m0 + ws.w1[k] * m1);
        ws.att[k] = std::exp(-(suffix + 0.5 * path));
        suffix += path;
    }
}

namespace {

void check_fp_shapes(const Tensor& activity, const Tensor* mu, const Geometry& g) {
    g.validate();
    if (activity.ndim() != 2 || activity.dim(0) != g.n || activity.dim(1) != g.n)
        throw ShapeError("forward_project: activity " + Tensor::shape_str(activity.shape) +
                         " does not match geometry n=" + std::to_string(g.n));
    if (mu && (mu->ndim() != 2 || mu->dim(0) != g.n || mu->dim(1) != g.n))
        throw ShapeError("forward_project: mu " + Tensor::shape_str(mu->shape) +
                         " does not match geometry n=" + std::to_string(g.n));
}

void check_bp_shapes(const Tensor& sino, const Tensor* mu, const Geometry& g, AngleSet set) {
    g.validate();
    if (sino.ndim() != 2 || sino.dim(0) != g.rows(set) || sino.dim(1) != g.n)
        throw ShapeError("back_project: sinogram " + Tensor::shape_str(sino.shape) +
                         " does not match geometry [" + std::to_string(g.rows(set)) + "," +
                         std::to_string(g.n) + "]");
    if (mu && (mu->ndim() != 2 || mu->dim(0) != g.n || mu->dim(1) != g.n))
        throw ShapeError("back_project: mu " + Tensor::shape_str(mu->shape) +
                         " does not match geometry n=" + std::to_string(g.n));
}

inline double project_one(const double* act, const RayTrace& ws) {
    double acc = 0.0;
    for (int k = 0; k < ws.steps; ++k) {
        double a0 = ws.pix0[k] >= 0 ? act[ws.pix0[k]] : 0.0;
        double a1 = ws.pix1[k] >= 0 ? act[ws.pix1[k]] : 0.0;
        acc += ws.dl * ws.att[k] * (ws.w0[k] * a0 + ws.w1[k] * a1);
    }
    return acc;
}

inline void splat_one(double v, const RayTrace& ws, double* img) {
    for (int k = 0; k < ws.steps; ++k) {
        double w = v * ws.dl * ws.att[k];
        if (ws.pix0[k] >= 0) img[ws.pix0[k]] += w * ws.w0[k];
        if (ws.pix1[k] >= 0) img[ws.pix1[k]] += w * ws.w1[k];
    }
}

} // namespace

Tensor forward_project(const Tensor& activity, const Tensor* mu, const Geometry& g, AngleSet set) {
    check_fp_shapes(activity, mu, g);
    const int rows = g.rows(set);
    Tensor sino({rows, g.n});
    const double* act = activity.ptr();
    const double* mup = mu ? mu->ptr() : nullptr;
    // Each sinogram row is owned by one iteration; bitwise equal to the
    // serial reference for any thread count.
    #pragma omp parallel for num_threads(kernel_threads()) schedule(static)
    for (int r = 0; r < rows; ++r) {
        RayTrace ws;
        const int a = g.angle_index(set, r);
        double* out = sino.ptr() + static_cast<std::size_t>(r) * g.n;
        for (int b = 0; b < g.n; ++b) {
            trace_ray(mup, g, a, b, ws);
            out[b] = project_one(act, ws);
        }
    }
    return sino;
}

Tensor back_project(const Tensor& sino, const Tensor* mu, const Geometry& g, AngleSet set) {
    check_bp_shapes(sino, mu, g, set);
    const int rows = g.rows(set);
    const std::size_t npix = static_cast<std::size_t>(g.n) * g.n;
    const double* mup = mu ? mu->ptr() : nullptr;
    // Scatter within one angle is serialized per partial image; partials are
    // reduced in fixed angle order, so the result does not depend on the
    // thread count.
    std::vector<double> partial(static_cast<std::size_t>(rows) * npix, 0.0);
    #pragma omp parallel for num_threads(kernel_threads()) schedule(static)
    for (int r = 0; r < rows; ++r) {
        RayTrace ws;
        const int a = g.angle_index(set, r);
        double* img = partial.data() + static_cast<std::size_t>(r) * npix;
        const double* in = sino.ptr() + static_cast<std::size_t>(r) * g.n;
        for (int b = 0; b < g.n; ++b) {
            trace_ray(mup, g, a, b, ws);
            splat_one(in[b], ws, img);
        }
    }
    Tensor img({g.n, g.n});
    for (int r = 0; r < rows; ++r) {
        const double* src = partial.data() + static_cast<std::size_t>(r) * npix;
        double* dst = img.ptr();
        for (std::size_t p = 0; p < npix; ++p) dst[p] += src[p];
    }
    return img;
}

namespace ref {

Tensor forward_project(const Tensor& activity, const Tensor* mu, const Geometry& g, AngleSet set) {
    check_fp_shapes(activity, mu, g);
    const int rows = g.rows(set);
    Tensor sino({rows, g.n});
    RayTrace ws;
    for (int r = 0; r < rows; ++r) {
        const int a = g.angle_index(set, r);
        for (int b = 0; b < g.n; ++b) {
            trace_ray(mu ? mu->ptr() : nullptr, g, a, b, ws);
            sino.at2(r, b) = project_one(activity.ptr(), ws);
        }
    }
    return sino;
}

Tensor back_project(const Tensor& sino, const Tensor* mu, const Geometry& g, AngleSet set) {
    check_bp_shapes(sino, mu, g, set);
    const int rows = g.rows(set);
    Tensor img({g.n, g.n});
    RayTrace ws;
    for (int r = 0; r < rows; ++r) {
        const int a = g.angle_index(set, r);
        for (int b = 0; b < g.n; ++b) {
            trace_ray(mu ? mu->ptr() : nullptr, g, a, b, ws);
            splat_one(sino.at2(r, b), ws, img.ptr());
        }
    }
    return img;
}

} // namespace ref

} // namespace cdi::tomo
