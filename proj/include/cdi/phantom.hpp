#pragma once

#include <cstdint>

#include "cdi/geometry.hpp"
#include "cdi/rng.hpp"

namespace cdi::sim {

// Sampling ranges for the synthetic thorax phantom. All lengths in cm,
// attenuation in cm^-1, activity in arbitrary units rescaled afterwards to
// hit the count target.
struct PhantomParams {
    std::uint64_t seed = 0;

    double body_a_min = 10.0, body_a_max = 13.5;   // body ellipse semi-axes
    double body_b_min = 8.0, body_b_max = 10.5;
    double body_jitter = 1.0;                      // body center offset bound
    double body_tilt_deg = 10.0;                   // rotation range, +-

    double myo_outer_min = 3.0, myo_outer_max = 4.2;  // myocardium annulus
    double myo_thick_min = 1.0, myo_thick_max = 1.7;
    double myo_offset_max = 2.5;                   // annulus center from body center
    double myo_intensity_min = 4.0, myo_intensity_max = 8.0;
    double defect_probability = 0.3;               // cold arc in the annulus
    double defect_fraction = 0.25;                 // relative residual intensity

    double lung_a_min = 2.2, lung_a_max = 3.4;     // two lung ellipses
    double lung_b_min = 3.0, lung_b_max = 4.6;
    double lung_activity = 0.3;                    // relative to background

    double spine_radius = 1.6;                     // bone disk behind the heart

    double mu_body = 0.15, mu_lung = 0.04, mu_bone = 0.25;
    double background_activity = 1.0;

    double total_counts = 5e5;  // sum of the ideal attenuated FD projection
    int max_retries = 25;

    void validate() const;
};

// Deterministic in params.seed. Activity is zero outside the body and
// scaled so that the ideal attenuated full-angle projection sums to
// total_counts; the mu-map is piecewise constant over the tissue classes.
// Degenerate draws (annulus not inside the body) are resampled up to
// max_retries, then rejected.
std::pair<tomo::ImageMap, tomo::ImageMap> make_phantom(const PhantomParams& params,
                                                       const tomo::Geometry& geom);

// Poisson counts at a reduced dose: one draw per bin with mean
// dose_fraction * ideal, i.e. binomial thinning of the full-dose Poisson
// data. Deterministic in seed.
tomo::Sinogram simulate_counts(const tomo::Sinogram& ideal, double dose_fraction,
                               std::uint64_t seed);

// Central contiguous block of rows, values untouched.
tomo::Sinogram limit_angles(const tomo::Sinogram& sino);

} // namespace cdi::sim
