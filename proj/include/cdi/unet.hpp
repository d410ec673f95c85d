#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdi/autodiff.hpp"

namespace cdi::nn {

struct UNetConfig {
    int in_channels = 1;
    int out_channels = 1;
    int depth = 3;       // encoder levels, bottleneck included
    int base_width = 16; // channels at level 0, doubling per level

    void validate() const {
        if (depth < 1) throw ConfigError("unet: depth must be >= 1");
        if (base_width < 1) throw ConfigError("unet: base_width must be >= 1");
        if (in_channels < 1 || out_channels < 1) throw ConfigError("unet: channels must be >= 1");
    }
    // Spatial dims must be divisible by this.
    int spatial_divisor() const { return 1 << (depth - 1); }
};

// Encoder/decoder with skip concatenations: two 3x3 convs per level, 2x2
// average-pool downsampling, nearest-neighbor upsampling followed by a 3x3
// conv, and a 1x1 conv + ReLU output head. ReLU activations, no
// normalization layers.
class UNet {
public:
    // Registers parameters under `prefix/...`; weights use He-normal init
    // seeded per parameter name so build order does not matter.
    UNet(ad::ParamStore& store, std::string prefix, UNetConfig cfg, bool proj_domain,
         std::uint64_t seed);

    ad::VarId forward(ad::Tape& t, ad::VarId x) const;

    const UNetConfig& config() const { return cfg_; }
    std::size_t param_count() const { return param_count_; }

private:
    struct Conv {
        ad::Param* w;
        ad::Param* b;
    };
    Conv make_conv(ad::ParamStore& store, const std::string& name, int cin, int cout, int k,
                   bool proj_domain, std::uint64_t seed);

    UNetConfig cfg_;
    std::string prefix_;
    std::vector<std::array<Conv, 2>> enc_;  // per level
    std::vector<Conv> up_;                  // depth-1 entries, deepest first
    std::vector<std::array<Conv, 2>> dec_;
    Conv head_;
    std::size_t param_count_ = 0;
};

} // namespace cdi::nn
