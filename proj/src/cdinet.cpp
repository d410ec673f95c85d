#include "cdi/cdinet.hpp"

namespace cdi::nn {

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::Full;
    if (s == "no_ci_dc") return Variant::NoCiDc;
    if (s == "no_cd_rc") return Variant::NoCdRc;
    if (s == "no_awr") return Variant::NoAwr;
    if (s == "separate_unet") return Variant::SeparateUNet;
    throw ConfigError("unknown variant: " + s);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::NoCiDc: return "no_ci_dc";
        case Variant::NoCdRc: return "no_cd_rc";
        case Variant::NoAwr: return "no_awr";
        case Variant::SeparateUNet: return "separate_unet";
    }
    throw ConfigError("unknown variant enum");
}

int CDINet::proj_in_channels(int m) const {
    switch (cfg_.variant) {
        case Variant::Full:
        case Variant::NoAwr: return m == 1 ? 1 : 2 * m - 1;
        case Variant::NoCiDc: return m == 1 ? 1 : 2;
        case Variant::NoCdRc: return m;
        case Variant::SeparateUNet: return 1;
    }
    throw ConfigError("unknown variant enum");
}

int CDINet::img_in_channels(int m) const {
    switch (cfg_.variant) {
        case Variant::Full:
        case Variant::NoAwr: return 2 * m;
        case Variant::NoCiDc: return 2;
        case Variant::NoCdRc: return m;
        case Variant::SeparateUNet: return 1;
    }
    throw ConfigError("unknown variant enum");
}

CDINet::CDINet(ad::ParamStore& store, const CDINetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.iterations < 1) throw ConfigError("cdinet: iterations must be >= 1");
    cfg_.geom.validate();
    n_ = cfg_.variant == Variant::SeparateUNet ? 1 : cfg_.iterations;

    // Both domains run through U-Nets of the same depth; the projection
    // canvas is [A_full, n], the image canvas [n, n].
    const int div = 1 << (cfg_.unet_depth - 1);
    if (cfg_.geom.angles_full % div || cfg_.geom.n % div)
        throw ConfigError("cdinet: canvas " + std::to_string(cfg_.geom.angles_full) + "x" +
                          std::to_string(cfg_.geom.n) + " not divisible by " + std::to_string(div));

    const bool awr_modules = cfg_.variant != Variant::SeparateUNet;
    for (int m = 1; m <= n_; ++m) {
        UNetConfig pu{proj_in_channels(m), 1, cfg_.unet_depth, cfg_.unet_base_width};
        proj_nets_.push_back(std::make_unique<UNet>(store, "proj_net_" + std::to_string(m), pu,
                                                    /*proj_domain=*/true, seed));
        UNetConfig iu{img_in_channels(m), 1, cfg_.unet_depth, cfg_.unet_base_width};
        img_nets_.push_back(std::make_unique<UNet>(store, "img_net_" + std::to_string(m), iu,
                                                   /*proj_domain=*/false, seed));

        // A recalibrator sits wherever a net consumes 2+ channels. The
        // no_awr ablation keeps the slots (parameters registered, unused).
        proj_awr_.push_back(awr_modules && proj_in_channels(m) >= 2
                                ? std::make_unique<AWR>(store, "awr_p_" + std::to_string(m),
                                                        AWRConfig{proj_in_channels(m), cfg_.awr_reduction},
                                                        true, seed)
                                : nullptr);
        img_awr_.push_back(awr_modules && img_in_channels(m) >= 2
                               ? std::make_unique<AWR>(store, "awr_i_" + std::to_string(m),
                                                       AWRConfig{img_in_channels(m), cfg_.awr_reduction},
                                                       false, seed)
                               : nullptr);
    }
}

int CDINet::num_proj_awr() const {
    int c = 0;
    for (const auto& a : proj_awr_) c += a != nullptr;
    return c;
}

int CDINet::num_img_awr() const {
    int c = 0;
    for (const auto& a : img_awr_) c += a != nullptr;
    return c;
}

CDINet::Outputs CDINet::forward(ad::Tape& t, ad::VarId p_l, ad::VarId i_l) const {
    const tomo::Geometry& g = cfg_.geom;
    {
        const Tensor& vp = t.value(p_l);
        if (vp.ndim() != 3 || vp.dim(0) != 1 || vp.dim(1) != g.angles_full || vp.dim(2) != g.n)
            throw ShapeError("cdinet: P_L canvas must be [1," + std::to_string(g.angles_full) +
                             "," + std::to_string(g.n) + "], got " + Tensor::shape_str(vp.shape));
        const Tensor& vi = t.value(i_l);
        if (vi.ndim() != 3 || vi.dim(0) != 1 || vi.dim(1) != g.n || vi.dim(2) != g.n)
            throw ShapeError("cdinet: I_L must be [1," + std::to_string(g.n) + "," +
                             std::to_string(g.n) + "], got " + Tensor::shape_str(vi.shape));
    }

    const bool use_awr = cfg_.variant != Variant::NoAwr && cfg_.variant != Variant::SeparateUNet;
    Outputs out;
    std::vector<ad::VarId> fp_mu;   // FP(muhat^j), filled as iterations go
    std::vector<ad::VarId> bp_proj; // BP(Phat^j)

    for (int m = 1; m <= n_; ++m) {
        // --- projection domain
        std::vector<ad::VarId> up{p_l};
        if (m >= 2) {
            switch (cfg_.variant) {
                case Variant::Full:
                case Variant::NoAwr:
                    for (int j = 0; j < m - 1; ++j) up.push_back(out.proj[j]);
                    for (int j = 0; j < m - 1; ++j) up.push_back(fp_mu[j]);
                    break;
                case Variant::NoCiDc: up.push_back(fp_mu[m - 2]); break;
                case Variant::NoCdRc:
                    for (int j = 0; j < m - 1; ++j) up.push_back(out.proj[j]);
                    break;
                case Variant::SeparateUNet: break;
            }
        }
        ad::VarId u_p = up.size() == 1 ? up[0] : t.concat(up);
        if (use_awr && proj_awr_[m - 1]) u_p = proj_awr_[m - 1]->forward(t, u_p);
        ad::VarId phat = proj_nets_[m - 1]->forward(t, u_p);
        out.proj.push_back(phat);
        if (cfg_.variant != Variant::SeparateUNet)
            bp_proj.push_back(t.back_project(phat, g, tomo::AngleSet::Full));

        // --- image domain
        std::vector<ad::VarId> ui{i_l};
        switch (cfg_.variant) {
            case Variant::Full:
            case Variant::NoAwr:
                for (int j = 0; j < m - 1; ++j) ui.push_back(out.mu[j]);
                for (int j = 0; j < m; ++j) ui.push_back(bp_proj[j]);
                break;
            case Variant::NoCiDc: ui.push_back(bp_proj[m - 1]); break;
            case Variant::NoCdRc:
                for (int j = 0; j < m - 1; ++j) ui.push_back(out.mu[j]);
                break;
            case Variant::SeparateUNet: break;
        }
        ad::VarId u_i = ui.size() == 1 ? ui[0] : t.concat(ui);
        if (use_awr && img_awr_[m - 1]) u_i = img_awr_[m - 1]->forward(t, u_i);
        ad::VarId muhat = img_nets_[m - 1]->forward(t, u_i);
        out.mu.push_back(muhat);
        if (cfg_.variant != Variant::SeparateUNet && m < n_)
            fp_mu.push_back(t.forward_project(muhat, g, tomo::AngleSet::Full));
    }
    return out;
}

double projection_scale(const Tensor& p_l_limited) {
    double m = mean(p_l_limited);
    return m > 0.0 ? 1.0 / m : 1.0;
}

} // namespace cdi::nn
