#include "cdi/tensor.hpp"

#include <cmath>
#include <sstream>

namespace cdi {

std::size_t Tensor::numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
        if (d <= 0) throw ShapeError("non-positive extent in shape " + shape_str(s));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string Tensor::shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::require_finite(const std::string& where) const {
    if (!all_finite()) throw ValueError("non-finite value at " + where);
}

Tensor full_like(const Tensor& t, double v) {
    Tensor r(t.shape);
    r.fill(v);
    return r;
}

double sum(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v;
    return s;
}

double mean(const Tensor& t) { return t.numel() ? sum(t) / static_cast<double>(t.numel()) : 0.0; }

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("max_abs_diff: " + Tensor::shape_str(a.shape) + " vs " +
                         Tensor::shape_str(b.shape));
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

double dot(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("dot: " + Tensor::shape_str(a.shape) + " vs " +
                         Tensor::shape_str(b.shape));
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double norm2(const Tensor& t) { return std::sqrt(dot(t, t)); }

} // namespace cdi
