#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "cdi/error.hpp"
#include "cdi/tensor.hpp"

namespace cdi::tomo {

enum class AngleSet { Full, Limited };

// 2D parallel-beam acquisition description. The image is n x n pixels of
// `pixel_size` cm; the detector has n bins with the same spacing and shares
// the image center. Angles are uniform over [0, 180), and the limited set is
// the contiguous central block of `angles_limited` indices.
struct Geometry {
    int n = 64;
    double pixel_size = 0.5;  // cm
    int angles_full = 40;
    int angles_limited = 19;

    void validate() const {
        if (n < 2) throw ConfigError("geometry: n must be >= 2");
        if (pixel_size <= 0) throw ConfigError("geometry: pixel_size must be > 0");
        if (angles_full < 1) throw ConfigError("geometry: angles_full must be >= 1");
        if (angles_limited < 1 || angles_limited > angles_full)
            throw ConfigError("geometry: need 0 < angles_limited <= angles_full");
    }

    // Radians, strictly increasing in [0, pi).
    double angle(int k) const { return std::numbers::pi * static_cast<double>(k) / angles_full; }

    int limited_start() const { return (angles_full - angles_limited) / 2; }

    int rows(AngleSet s) const { return s == AngleSet::Full ? angles_full : angles_limited; }
    // Global angle index of row r in the given set.
    int angle_index(AngleSet s, int r) const {
        return s == AngleSet::Full ? r : limited_start() + r;
    }

    bool operator==(const Geometry&) const = default;
};

enum class SinogramTag { Ideal, Noisy, Predicted };
enum class ImageKind { Activity, MuMap, Reconstruction };

// Sanity cap on attenuation coefficients (cm^-1).
inline constexpr double kMuCap = 0.5;

// Projection-domain array: [rows(angle_set), n] nonnegative counts.
struct Sinogram {
    Tensor counts;  // [A, n]
    Geometry geom;
    AngleSet angle_set = AngleSet::Full;
    SinogramTag tag = SinogramTag::Ideal;

    void validate() const;
};

// Image-domain array: [n, n] nonnegative values. Activity in counts/pixel,
// mu-maps in cm^-1 (capped at kMuCap).
struct ImageMap {
    Tensor values;  // [n, n]
    Geometry geom;
    ImageKind kind = ImageKind::Activity;

    void validate() const;
};

// Zero-fill a limited sinogram into the full-angle canvas (the explicit
// embedding networks use; unmeasured rows become zeros).
Tensor embed_limited(const Tensor& limited, const Geometry& geom);

} // namespace cdi::tomo
