#pragma once

#include <cstdint>
#include <string>

#include "cdi/autodiff.hpp"

namespace cdi::nn {

struct AWRConfig {
    int channels = 2;
    int reduction = 2;

    void validate() const {
        if (channels < 1) throw ConfigError("awr: channels must be >= 1");
        if (reduction < 1 || reduction > channels)
            throw ConfigError("awr: need 1 <= reduction <= channels");
    }
    int hidden() const { return std::max(1, channels / reduction); }
};

// Adaptive weight recalibrator: per-channel global average -> two
// fully-connected layers with a ReLU between -> sigmoid gate, applied per
// channel, plus a global residual. Output channel c is (1 + gate_c) * input.
class AWR {
public:
    AWR(ad::ParamStore& store, std::string prefix, AWRConfig cfg, bool proj_domain,
        std::uint64_t seed);

    ad::VarId forward(ad::Tape& t, ad::VarId x) const;

    const AWRConfig& config() const { return cfg_; }

private:
    AWRConfig cfg_;
    std::string prefix_;
    ad::Param* w1_;
    ad::Param* b1_;
    ad::Param* w2_;
    ad::Param* b2_;
};

} // namespace cdi::nn
