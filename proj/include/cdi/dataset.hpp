#pragma once

#include <string>
#include <vector>

#include "cdi/phantom.hpp"

namespace cdi::sim {

struct SplitFractions {
    double train = 0.60;
    double val = 0.15;  // test takes the remainder

    void validate() const {
        if (train < 0 || val < 0 || train + val > 1.0)
            throw ConfigError("split fractions must be nonnegative and sum to at most 1");
    }
};

struct DatasetConfig {
    tomo::Geometry geom;
    PhantomParams phantom;  // per-sample seeds are derived; phantom.seed is ignored
    double dose_fraction = 0.1;
    int mlem_iterations = 30;
    SplitFractions split;

    void validate() const {
        geom.validate();
        phantom.validate();
        split.validate();
        if (!(dose_fraction > 0.0) || dose_fraction > 1.0)
            throw ConfigError("dose_fraction must lie in (0, 1]");
        if (mlem_iterations < 1) throw ConfigError("mlem_iterations must be >= 1");
    }
};

// One training record: inputs (P_L, I_L), targets (P_F, mu).
struct Sample {
    tomo::Sinogram p_l;  // limited angle, low dose
    tomo::ImageMap i_l;  // ML-EM of P_L, no attenuation correction
    tomo::Sinogram p_f;  // full angle, full dose, one noisy realization
    tomo::ImageMap mu;
    std::uint64_t seed = 0;
    double dose_fraction = 0.1;
};

// Deterministic in (config, base_seed, index); the phantom and both noise
// realizations use independent substreams, so samples can be generated in
// parallel and in any order.
Sample make_sample(const DatasetConfig& cfg, std::uint64_t base_seed, int index);

struct DatasetEntry {
    std::string id;
    std::uint64_t seed = 0;
    double dose_fraction = 0.1;
    std::string split;
};

struct Dataset {
    std::string root;
    DatasetConfig config;
    std::uint64_t base_seed = 0;
    std::string manifest_hash;
    std::vector<DatasetEntry> entries;

    std::vector<const DatasetEntry*> split_entries(const std::string& split) const;
};

// Writes samples/sNNNN/{p_l,i_l,p_f,mu}.cdit plus manifest.json and returns
// the manifest hash. Split assignment is floor(count * fraction) train/val
// samples in index order, the remainder test. Refuses a non-empty output
// directory unless `force`.
std::string build_dataset(const std::string& dir, int count, std::uint64_t base_seed,
                          const DatasetConfig& cfg, bool force);

Dataset load_dataset(const std::string& dir);
Sample load_sample(const Dataset& ds, const DatasetEntry& entry);

} // namespace cdi::sim
