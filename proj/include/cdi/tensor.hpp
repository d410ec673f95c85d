#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cdi/error.hpp"

namespace cdi {

// Dense n-dimensional array of doubles, row-major (last dimension fastest).
// This is the single value currency of the projectors, the autodiff tape and
// the networks. Gradient bookkeeping lives on the tape, not here.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel_of(shape))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }

    static std::size_t numel_of(const std::vector<int>& s);
    static std::string shape_str(const std::vector<int>& s);

    std::size_t numel() const { return data.size(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    // 2D / 3D accessors used by kernels; no bounds checks in release builds.
    double& at2(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    double at2(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    double& at3(int ch, int r, int c) {
        return data[(static_cast<std::size_t>(ch) * shape[1] + r) * shape[2] + c];
    }
    double at3(int ch, int r, int c) const {
        return data[(static_cast<std::size_t>(ch) * shape[1] + r) * shape[2] + c];
    }

    void fill(double v) { data.assign(data.size(), v); }

    bool all_finite() const;
    // Throws ValueError when a NaN/Inf is present. `where` names the boundary.
    void require_finite(const std::string& where) const;
};

Tensor full_like(const Tensor& t, double v);

// Scalar helpers used all over the test suites.
double sum(const Tensor& t);
double mean(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);
double dot(const Tensor& a, const Tensor& b);
double norm2(const Tensor& t);

} // namespace cdi
