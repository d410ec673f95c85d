#include "cdi/geometry.hpp"

namespace cdi::tomo {

void Sinogram::validate() const {
    geom.validate();
    if (counts.ndim() != 2 || counts.dim(0) != geom.rows(angle_set) || counts.dim(1) != geom.n)
        throw ShapeError("sinogram shape " + Tensor::shape_str(counts.shape) + " does not match geometry [" +
                         std::to_string(geom.rows(angle_set)) + "," + std::to_string(geom.n) + "]");
    for (double v : counts.data)
        if (!(v >= 0.0)) throw ValueError("sinogram counts must be finite and nonnegative");
}

void ImageMap::validate() const {
    geom.validate();
    if (values.ndim() != 2 || values.dim(0) != geom.n || values.dim(1) != geom.n)
        throw ShapeError("image shape " + Tensor::shape_str(values.shape) + " does not match geometry n=" +
                         std::to_string(geom.n));
    for (double v : values.data) {
        if (!(v >= 0.0)) throw ValueError("image values must be finite and nonnegative");
        if (kind == ImageKind::MuMap && v > kMuCap)
            throw ValueError("mu-map value " + std::to_string(v) + " exceeds cap " + std::to_string(kMuCap));
    }
}

Tensor embed_limited(const Tensor& limited, const Geometry& geom) {
    if (limited.ndim() != 2 || limited.dim(0) != geom.angles_limited || limited.dim(1) != geom.n)
        throw ShapeError("embed_limited: expected [" + std::to_string(geom.angles_limited) + "," +
                         std::to_string(geom.n) + "], got " + Tensor::shape_str(limited.shape));
    Tensor full({geom.angles_full, geom.n});
    const int start = geom.limited_start();
    for (int r = 0; r < geom.angles_limited; ++r)
        for (int c = 0; c < geom.n; ++c) full.at2(start + r, c) = limited.at2(r, c);
    return full;
}

} // namespace cdi::tomo
