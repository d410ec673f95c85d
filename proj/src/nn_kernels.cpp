#include "cdi/nn_kernels.hpp"

#include <algorithm>

#include "cdi/threads.hpp"

namespace cdi::nnk {

namespace {

struct ConvDims {
    int cin, h, w, cout, k, pad;
};

ConvDims check_conv(const Tensor& x, const Tensor& wt, const Tensor* b) {
    if (x.ndim() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + Tensor::shape_str(x.shape));
    if (wt.ndim() != 4 || wt.dim(2) != wt.dim(3) || wt.dim(2) % 2 == 0)
        throw ShapeError("conv2d: weight must be [Cout,Cin,k,k] with odd k, got " +
                         Tensor::shape_str(wt.shape));
    if (wt.dim(1) != x.dim(0))
        throw ShapeError("conv2d: weight Cin " + std::to_string(wt.dim(1)) + " vs input C " +
                         std::to_string(x.dim(0)));
    if (b && (b->ndim() != 1 || b->dim(0) != wt.dim(0)))
        throw ShapeError("conv2d: bias must be [Cout], got " + Tensor::shape_str(b->shape));
    return {x.dim(0), x.dim(1), x.dim(2), wt.dim(0), wt.dim(2), (wt.dim(2) - 1) / 2};
}

// One output row (oc, oy): bias fill then a kernel-tap pass per (ic, ky, kx).
inline void conv_row(const ConvDims& d, const double* x, const double* w, double bias, int oc,
                     int oy, double* yrow) {
    std::fill(yrow, yrow + d.w, bias);
    for (int ic = 0; ic < d.cin; ++ic) {
        const double* xc = x + static_cast<std::size_t>(ic) * d.h * d.w;
        const double* wp = w + ((static_cast<std::size_t>(oc) * d.cin + ic) * d.k) * d.k;
        for (int ky = 0; ky < d.k; ++ky) {
            const int iy = oy + ky - d.pad;
            if (iy < 0 || iy >= d.h) continue;
            const double* xrow = xc + static_cast<std::size_t>(iy) * d.w;
            for (int kx = 0; kx < d.k; ++kx) {
                const double wv = wp[ky * d.k + kx];
                const int shift = kx - d.pad;
                const int lo = std::max(0, -shift);
                const int hi = std::min(d.w, d.w - shift);
                for (int ox = lo; ox < hi; ++ox) yrow[ox] += wv * xrow[ox + shift];
            }
        }
    }
}

// One input-grad row (ic, iy): correlation of dy with the flipped kernel.
inline void conv_row_dx(const ConvDims& d, const double* w, const double* dy, int ic, int iy,
                        double* dxrow) {
    for (int oc = 0; oc < d.cout; ++oc) {
        const double* dyc = dy + static_cast<std::size_t>(oc) * d.h * d.w;
        const double* wp = w + ((static_cast<std::size_t>(oc) * d.cin + ic) * d.k) * d.k;
        for (int ky = 0; ky < d.k; ++ky) {
            const int oy = iy - ky + d.pad;
            if (oy < 0 || oy >= d.h) continue;
            const double* dyrow = dyc + static_cast<std::size_t>(oy) * d.w;
            for (int kx = 0; kx < d.k; ++kx) {
                const double wv = wp[ky * d.k + kx];
                const int shift = d.pad - kx;
                const int lo = std::max(0, -shift);
                const int hi = std::min(d.w, d.w - shift);
                for (int ix = lo; ix < hi; ++ix) dxrow[ix] += wv * dyrow[ix + shift];
            }
        }
    }
}

// Weight-grad slice (oc, ic).
inline void conv_dw_slice(const ConvDims& d, const double* x, const double* dy, int oc, int ic,
                          double* dwp) {
    const double* xc = x + static_cast<std::size_t>(ic) * d.h * d.w;
    const double* dyc = dy + static_cast<std::size_t>(oc) * d.h * d.w;
    for (int ky = 0; ky < d.k; ++ky) {
        for (int kx = 0; kx < d.k; ++kx) {
            const int shift = kx - d.pad;
            double acc = 0.0;
            for (int oy = 0; oy < d.h; ++oy) {
                const int iy = oy + ky - d.pad;
                if (iy < 0 || iy >= d.h) continue;
                const double* dyrow = dyc + static_cast<std::size_t>(oy) * d.w;
                const double* xrow = xc + static_cast<std::size_t>(iy) * d.w;
                const int lo = std::max(0, -shift);
                const int hi = std::min(d.w, d.w - shift);
                for (int ox = lo; ox < hi; ++ox) acc += dyrow[ox] * xrow[ox + shift];
            }
            dwp[ky * d.k + kx] += acc;
        }
    }
}

} // namespace

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    auto d = check_conv(x, w, &b);
    y = Tensor({d.cout, d.h, d.w});
    #pragma omp parallel for collapse(2) num_threads(kernel_threads()) schedule(static)
    for (int oc = 0; oc < d.cout; ++oc)
        for (int oy = 0; oy < d.h; ++oy)
            conv_row(d, x.ptr(), w.ptr(), b.data[oc], oc, oy,
                     y.ptr() + (static_cast<std::size_t>(oc) * d.h + oy) * d.w);
}

void conv2d_backward_x(const Tensor& w, const Tensor& dy, Tensor& dx) {
    ConvDims d{w.dim(1), dy.dim(1), dy.dim(2), w.dim(0), w.dim(2), (w.dim(2) - 1) / 2};
    #pragma omp parallel for collapse(2) num_threads(kernel_threads()) schedule(static)
    for (int ic = 0; ic < d.cin; ++ic)
        for (int iy = 0; iy < d.h; ++iy)
            conv_row_dx(d, w.ptr(), dy.ptr(), ic, iy,
                        dx.ptr() + (static_cast<std::size_t>(ic) * d.h + iy) * d.w);
}

void conv2d_backward_w(const Tensor& x, const Tensor& dy, Tensor& dw) {
    ConvDims d{x.dim(0), x.dim(1), x.dim(2), dy.dim(0), dw.dim(2), (dw.dim(2) - 1) / 2};
    #pragma omp parallel for collapse(2) num_threads(kernel_threads()) schedule(static)
    for (int oc = 0; oc < d.cout; ++oc)
        for (int ic = 0; ic < d.cin; ++ic)
            conv_dw_slice(d, x.ptr(), dy.ptr(), oc, ic,
                          dw.ptr() + ((static_cast<std::size_t>(oc) * d.cin + ic) * d.k) * d.k);
}

void conv2d_backward_b(const Tensor& dy, Tensor& db) {
    const int cout = dy.dim(0);
    const std::size_t hw = static_cast<std::size_t>(dy.dim(1)) * dy.dim(2);
    for (int oc = 0; oc < cout; ++oc) {
        double acc = 0.0;
        const double* p = dy.ptr() + oc * hw;
        for (std::size_t i = 0; i < hw; ++i) acc += p[i];
        db.data[oc] += acc;
    }
}

void fc_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    if (x.ndim() != 1 || w.ndim() != 2 || w.dim(1) != x.dim(0) || b.dim(0) != w.dim(0))
        throw ShapeError("fc: x " + Tensor::shape_str(x.shape) + " w " + Tensor::shape_str(w.shape) +
                         " b " + Tensor::shape_str(b.shape));
    const int m = w.dim(0), k = w.dim(1);
    y = Tensor({m});
    for (int r = 0; r < m; ++r) {
        double acc = b.data[r];
        const double* wr = w.ptr() + static_cast<std::size_t>(r) * k;
        for (int c = 0; c < k; ++c) acc += wr[c] * x.data[c];
        y.data[r] = acc;
    }
}

void fc_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor* dw,
                 Tensor* db) {
    const int m = w.dim(0), k = w.dim(1);
    for (int r = 0; r < m; ++r) {
        const double g = dy.data[r];
        if (db) db->data[r] += g;
        const double* wr = w.ptr() + static_cast<std::size_t>(r) * k;
        double* dwr = dw ? dw->ptr() + static_cast<std::size_t>(r) * k : nullptr;
        for (int c = 0; c < k; ++c) {
            if (dx) dx->data[c] += g * wr[c];
            if (dwr) dwr[c] += g * x.data[c];
        }
    }
}

namespace ref {

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    auto d = check_conv(x, w, &b);
    y = Tensor({d.cout, d.h, d.w});
    for (int oc = 0; oc < d.cout; ++oc)
        for (int oy = 0; oy < d.h; ++oy)
            conv_row(d, x.ptr(), w.ptr(), b.data[oc], oc, oy,
                     y.ptr() + (static_cast<std::size_t>(oc) * d.h + oy) * d.w);
}

void conv2d_backward_x(const Tensor& w, const Tensor& dy, Tensor& dx) {
    ConvDims d{w.dim(1), dy.dim(1), dy.dim(2), w.dim(0), w.dim(2), (w.dim(2) - 1) / 2};
    for (int ic = 0; ic < d.cin; ++ic)
        for (int iy = 0; iy < d.h; ++iy)
            conv_row_dx(d, w.ptr(), dy.ptr(), ic, iy,
                        dx.ptr() + (static_cast<std::size_t>(ic) * d.h + iy) * d.w);
}

void conv2d_backward_w(const Tensor& x, const Tensor& dy, Tensor& dw) {
    ConvDims d{x.dim(0), x.dim(1), x.dim(2), dy.dim(0), dw.dim(2), (dw.dim(2) - 1) / 2};
    for (int oc = 0; oc < d.cout; ++oc)
        for (int ic = 0; ic < d.cin; ++ic)
            conv_dw_slice(d, x.ptr(), dy.ptr(), oc, ic,
                          dw.ptr() + ((static_cast<std::size_t>(oc) * d.cin + ic) * d.k) * d.k);
}

} // namespace ref

} // namespace cdi::nnk
