#pragma once

#include <json.hpp>

#include "cdi/dataset.hpp"
#include "cdi/geometry.hpp"

// JSON bindings for the config structs. Missing keys fall back to the field
// defaults; struct validate() runs after parsing at every entry point.

namespace cdi::tomo {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Geometry, n, pixel_size, angles_full,
                                                angles_limited)
} // namespace cdi::tomo

namespace cdi::sim {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    PhantomParams, seed, body_a_min, body_a_max, body_b_min, body_b_max, body_jitter,
    body_tilt_deg, myo_outer_min, myo_outer_max, myo_thick_min, myo_thick_max, myo_offset_max,
    myo_intensity_min, myo_intensity_max, defect_probability, defect_fraction, lung_a_min,
    lung_a_max, lung_b_min, lung_b_max, lung_activity, spine_radius, mu_body, mu_lung, mu_bone,
    background_activity, total_counts, max_retries)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SplitFractions, train, val)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DatasetConfig, geom, phantom, dose_fraction,
                                                mlem_iterations, split)
} // namespace cdi::sim

namespace cdi {

// Stable fingerprint of a JSON document (nlohmann objects iterate in sorted
// key order, so dump() is canonical).
std::string json_hash_hex(const nlohmann::json& j);

} // namespace cdi
