#pragma once

#include "cdi/tensor.hpp"

namespace cdi::nnk {

// Raw dense kernels behind the tape ops. Shapes: x [Cin,H,W], w
// [Cout,Cin,k,k] with odd k and zero padding (k-1)/2, b [Cout], y [Cout,H,W].
// Backward kernels accumulate (+=) into their output so a value feeding
// several consumers sums its adjoints.
//
// OpenMP variants partition work by output element, so results are bitwise
// identical to the serial reference for any thread count.
void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);
void conv2d_backward_x(const Tensor& w, const Tensor& dy, Tensor& dx);
void conv2d_backward_w(const Tensor& x, const Tensor& dy, Tensor& dw);
void conv2d_backward_b(const Tensor& dy, Tensor& db);

// x [K], w [M,K], b [M], y [M].
void fc_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);
void fc_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor* dw,
                 Tensor* db);

// Serial reference implementations kept for the parallel-vs-serial tests and
// the benchmark target.
namespace ref {
void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);
void conv2d_backward_x(const Tensor& w, const Tensor& dy, Tensor& dx);
void conv2d_backward_w(const Tensor& x, const Tensor& dy, Tensor& dw);
} // namespace ref

} // namespace cdi::nnk
