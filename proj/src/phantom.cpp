#include "cdi/phantom.hpp"

#include <cmath>
#include <numbers>

#include "cdi/projector.hpp"

namespace cdi::sim {

void PhantomParams::validate() const {
    auto range_ok = [](double lo, double hi) { return lo <= hi && lo >= 0.0; };
    if (!range_ok(body_a_min, body_a_max) || !range_ok(body_b_min, body_b_max) ||
        !range_ok(myo_outer_min, myo_outer_max) || !range_ok(myo_thick_min, myo_thick_max) ||
        !range_ok(myo_intensity_min, myo_intensity_max) || !range_ok(lung_a_min, lung_a_max) ||
        !range_ok(lung_b_min, lung_b_max))
        throw ConfigError("phantom: empty or negative sampling range");
    for (double m : {mu_body, mu_lung, mu_bone})
        if (m < 0.0 || m > 0.3) throw ConfigError("phantom: tissue mu must lie in [0, 0.3] cm^-1");
    if (!(total_counts > 0)) throw ConfigError("phantom: total_counts must be > 0");
    if (defect_probability < 0 || defect_probability > 1)
        throw ConfigError("phantom: defect_probability must lie in [0, 1]");
}

namespace {

struct Ellipse {
    double cx, cy, a, b, cos_t, sin_t;
    bool contains(double x, double y) const {
        double dx = x - cx, dy = y - cy;
        double u = (dx * cos_t + dy * sin_t) / a;
        double v = (-dx * sin_t + dy * cos_t) / b;
        return u * u + v * v <= 1.0;
    }
};

} // namespace

std::pair<tomo::ImageMap, tomo::ImageMap> make_phantom(const PhantomParams& params,
                                                       const tomo::Geometry& geom) {
    params.validate();
    geom.validate();
    CounterRng rng(params.seed, fnv1a64("phantom"));
    const int n = geom.n;
    const double half = 0.5 * (n - 1);

    for (int attempt = 0; attempt < params.max_retries; ++attempt) {
        double tilt = params.body_tilt_deg * std::numbers::pi / 180.0 * rng.uniform(-1.0, 1.0);
        Ellipse body{rng.uniform(-params.body_jitter, params.body_jitter),
                     rng.uniform(-params.body_jitter, params.body_jitter),
                     rng.uniform(params.body_a_min, params.body_a_max),
                     rng.uniform(params.body_b_min, params.body_b_max),
                     std::cos(tilt),
                     std::sin(tilt)};

        double myo_r = rng.uniform(params.myo_outer_min, params.myo_outer_max);
        double myo_th = rng.uniform(params.myo_thick_min, params.myo_thick_max);
        double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
        double off = rng.uniform(0.0, params.myo_offset_max);
        double myo_cx = body.cx + off * std::cos(ang);
        double myo_cy = body.cy + off * std::sin(ang);
        double myo_int = rng.uniform(params.myo_intensity_min, params.myo_intensity_max);
        bool defect = rng.uniform() < params.defect_probability;
        double defect_at = rng.uniform(0.0, 2.0 * std::numbers::pi);

        Ellipse lung_l{body.cx - 0.45 * body.a, body.cy + 0.25 * body.b,
                       rng.uniform(params.lung_a_min, params.lung_a_max),
                       rng.uniform(params.lung_b_min, params.lung_b_max), 1.0, 0.0};
        Ellipse lung_r{body.cx + 0.45 * body.a, body.cy + 0.25 * body.b,
                       rng.uniform(params.lung_a_min, params.lung_a_max),
                       rng.uniform(params.lung_b_min, params.lung_b_max), 1.0, 0.0};
        Ellipse spine{body.cx, body.cy - 0.65 * body.b, params.spine_radius, params.spine_radius,
                      1.0, 0.0};

        // The annulus (and a margin) must stay inside the body.
        bool fits = true;
        for (int k = 0; k < 16 && fits; ++k) {
            double a = 2.0 * std::numbers::pi * k / 16;
            fits = body.contains(myo_cx + (myo_r + 0.5) * std::cos(a),
                                 myo_cy + (myo_r + 0.5) * std::sin(a));
        }
        if (!fits) continue;

        tomo::ImageMap activity{Tensor({n, n}), geom, tomo::ImageKind::Activity};
        tomo::ImageMap mu{Tensor({n, n}), geom, tomo::ImageKind::MuMap};
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                double x = (i - half) * geom.pixel_size;
                double y = (j - half) * geom.pixel_size;
                if (!body.contains(x, y)) continue;
                double act = params.background_activity;
                double m = params.mu_body;
                if (lung_l.contains(x, y) || lung_r.contains(x, y)) {
                    act = params.background_activity * params.lung_activity;
                    m = params.mu_lung;
                }
                if (spine.contains(x, y)) m = params.mu_bone;
                double dx = x - myo_cx, dy = y - myo_cy;
                double r = std::sqrt(dx * dx + dy * dy);
                if (r <= myo_r && r >= myo_r - myo_th) {
                    act = myo_int;
                    if (defect) {
                        double delta = std::atan2(dy, dx) - defect_at;
                        while (delta > std::numbers::pi) delta -= 2.0 * std::numbers::pi;
                        while (delta < -std::numbers::pi) delta += 2.0 * std::numbers::pi;
                        if (std::abs(delta) < 0.5) act = myo_int * params.defect_fraction;
                    }
                }
                activity.values.at2(j, i) = act;
                mu.values.at2(j, i) = m;
            }
        }

        Tensor ideal = tomo::forward_project(activity.values, &mu.values, geom,
                                             tomo::AngleSet::Full);
        double total = sum(ideal);
        if (!(total > 0)) continue;
        double scale = params.total_counts / total;
        for (auto& v : activity.values.data) v *= scale;
        activity.validate();
        mu.validate();
        return {std::move(activity), std::move(mu)};
    }
    throw ValueError("make_phantom: no valid geometry after " + std::to_string(params.max_retries) +
                     " retries");
}

tomo::Sinogram simulate_counts(const tomo::Sinogram& ideal, double dose_fraction,
                               std::uint64_t seed) {
    if (!(dose_fraction > 0.0) || dose_fraction > 1.0)
        throw ValueError("simulate_counts: dose_fraction must lie in (0, 1]");
    for (double v : ideal.counts.data)
        if (!(v >= 0.0)) throw ValueError("simulate_counts: ideal sinogram must be nonnegative");

    tomo::Sinogram out = ideal;
    out.tag = tomo::SinogramTag::Noisy;
    CounterRng rng(seed, fnv1a64("counts"));
    for (auto& v : out.counts.data) v = static_cast<double>(rng.poisson(dose_fraction * v));
    return out;
}

tomo::Sinogram limit_angles(const tomo::Sinogram& sino) {
    if (sino.angle_set != tomo::AngleSet::Full)
        throw ValueError("limit_angles: sinogram is already limited");
    const tomo::Geometry& g = sino.geom;
    tomo::Sinogram out;
    out.geom = g;
    out.angle_set = tomo::AngleSet::Limited;
    out.tag = sino.tag;
    out.counts = Tensor({g.angles_limited, g.n});
    const int start = g.limited_start();
    for (int r = 0; r < g.angles_limited; ++r)
        for (int c = 0; c < g.n; ++c) out.counts.at2(r, c) = sino.counts.at2(start + r, c);
    return out;
}

} // namespace cdi::sim
