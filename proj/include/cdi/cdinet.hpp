#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cdi/awr.hpp"
#include "cdi/geometry.hpp"
#include "cdi/unet.hpp"

namespace cdi::nn {

enum class Variant { Full, NoCiDc, NoCdRc, NoAwr, SeparateUNet };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

struct CDINetConfig {
    int iterations = 5;  // N; forced to 1 for the separate-UNet baseline
    Variant variant = Variant::Full;
    int unet_depth = 3;
    int unet_base_width = 16;
    int awr_reduction = 2;
    tomo::Geometry geom;
};

// Paired projection- and image-domain U-Nets unrolled over N iterations.
//
// Iteration m consumes, through a recalibrator, the concatenation of the raw
// input with every earlier prediction of its own domain (cross-iteration
// dense connections) and the projections/backprojections of the other
// domain's predictions (cross-domain residual connections):
//
//   proj input (m>=2): {P_L, Phat^1..Phat^{m-1}, FP(muhat^1)..FP(muhat^{m-1})}
//   img  input:        {I_L, muhat^1..muhat^{m-1}, BP(Phat^1)..BP(Phat^m)}
//
// so the channel counts are 2m-1 and 2m. Iteration 1's projection net takes
// the raw single-channel P_L and therefore has no recalibrator; elsewhere a
// recalibrator is present exactly where an input has 2+ channels. Variants:
//   no_ci_dc      drops the history terms, keeping only the most recent
//                 cross-domain link (inputs {P_L, FP(muhat^{m-1})} and
//                 {I_L, BP(Phat^m)})
//   no_cd_rc      drops every FP/BP term (inputs are m channels each)
//   no_awr        identical wiring to full; recalibrators replaced by the
//                 identity (their parameters stay registered but unused)
//   separate_unet two disconnected single U-Nets P_L -> Phat, I_L -> muhat
class CDINet {
public:
    CDINet(ad::ParamStore& store, const CDINetConfig& cfg, std::uint64_t seed);

    struct Outputs {
        std::vector<ad::VarId> proj;  // Phat^1..Phat^N, each [1, A_full, n]
        std::vector<ad::VarId> mu;    // muhat^1..muhat^N, each [1, n, n]
    };

    // p_l: zero-embedded full-angle canvas [1, A_full, n], already scaled;
    // i_l: [1, n, n], same scale. All N iterations' outputs are returned.
    Outputs forward(ad::Tape& t, ad::VarId p_l, ad::VarId i_l) const;

    int iterations() const { return n_; }
    const CDINetConfig& config() const { return cfg_; }

    // Channel bookkeeping (m is 1-based); asserted at build.
    int proj_in_channels(int m) const;
    int img_in_channels(int m) const;

    int num_proj_nets() const { return static_cast<int>(proj_nets_.size()); }
    int num_img_nets() const { return static_cast<int>(img_nets_.size()); }
    int num_proj_awr() const;
    int num_img_awr() const;

private:
    CDINetConfig cfg_;
    int n_ = 1;
    std::vector<std::unique_ptr<UNet>> proj_nets_;
    std::vector<std::unique_ptr<UNet>> img_nets_;
    std::vector<std::unique_ptr<AWR>> proj_awr_;  // slot per iteration, may be null
    std::vector<std::unique_ptr<AWR>> img_awr_;
};

// Per-sample projection normalization: networks see counts scaled by
// 1/mean(P_L) (1.0 when the sinogram is empty); predictions are multiplied
// back by mean(P_L). Mu-maps stay in native cm^-1.
double projection_scale(const Tensor& p_l_limited);

} // namespace cdi::nn
