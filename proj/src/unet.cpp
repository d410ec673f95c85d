#include "cdi/unet.hpp"

#include <array>
#include <cmath>

#include "cdi/rng.hpp"

namespace cdi::nn {

UNet::Conv UNet::make_conv(ad::ParamStore& store, const std::string& name, int cin, int cout,
                           int k, bool proj_domain, std::uint64_t seed) {
    ad::Param& w = store.create(name + "/w", {cout, cin, k, k}, proj_domain);
    ad::Param& b = store.create(name + "/b", {cout}, proj_domain);
    CounterRng rng(seed, fnv1a64(w.name));
    const double std = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
    for (auto& v : w.value.data) v = rng.normal(0.0, std);
    // Small positive bias keeps ReLU units alive at the start; zero bias
    // leaves dead input regions sitting exactly on the activation kink.
    b.value.fill(0.01);
    param_count_ += w.value.numel() + b.value.numel();
    return {&w, &b};
}

UNet::UNet(ad::ParamStore& store, std::string prefix, UNetConfig cfg, bool proj_domain,
           std::uint64_t seed)
    : cfg_(cfg), prefix_(std::move(prefix)) {
    cfg_.validate();
    auto width = [&](int level) { return cfg_.base_width << level; };

    for (int l = 0; l < cfg_.depth; ++l) {
        int cin = l == 0 ? cfg_.in_channels : width(l - 1);
        enc_.push_back({make_conv(store, prefix_ + "/enc" + std::to_string(l) + "/conv0", cin,
                                  width(l), 3, proj_domain, seed),
                        make_conv(store, prefix_ + "/enc" + std::to_string(l) + "/conv1", width(l),
                                  width(l), 3, proj_domain, seed)});
    }
    for (int l = cfg_.depth - 2; l >= 0; --l) {
        up_.push_back(make_conv(store, prefix_ + "/up" + std::to_string(l), width(l + 1), width(l),
                                3, proj_domain, seed));
        dec_.push_back({make_conv(store, prefix_ + "/dec" + std::to_string(l) + "/conv0",
                                  2 * width(l), width(l), 3, proj_domain, seed),
                        make_conv(store, prefix_ + "/dec" + std::to_string(l) + "/conv1", width(l),
                                  width(l), 3, proj_domain, seed)});
    }
    head_ = make_conv(store, prefix_ + "/head", width(0), cfg_.out_channels, 1, proj_domain, seed);
}

ad::VarId UNet::forward(ad::Tape& t, ad::VarId x) const {
    const Tensor& v = t.value(x);
    if (v.ndim() != 3 || v.dim(0) != cfg_.in_channels)
        throw ShapeError(prefix_ + ": expected [" + std::to_string(cfg_.in_channels) +
                         ",H,W], got " + Tensor::shape_str(v.shape));
    const int div = cfg_.spatial_divisor();
    if (v.dim(1) % div || v.dim(2) % div)
        throw ShapeError(prefix_ + ": spatial dims " + std::to_string(v.dim(1)) + "x" +
                         std::to_string(v.dim(2)) + " not divisible by " + std::to_string(div));

    auto conv_relu = [&](const Conv& c, ad::VarId in) {
        return t.relu(t.conv2d(in, t.param(*c.w), t.param(*c.b)));
    };

    std::vector<ad::VarId> skips;
    ad::VarId cur = x;
    for (int l = 0; l < cfg_.depth; ++l) {
        if (l > 0) cur = t.avg_pool2(cur);
        cur = conv_relu(enc_[l][0], cur);
        cur = conv_relu(enc_[l][1], cur);
        if (l < cfg_.depth - 1) skips.push_back(cur);
    }
    for (int i = 0; i < cfg_.depth - 1; ++i) {
        cur = conv_relu(up_[i], t.upsample2(cur));
        cur = t.concat({skips[skips.size() - 1 - i], cur});
        cur = conv_relu(dec_[i][0], cur);
        cur = conv_relu(dec_[i][1], cur);
    }
    return t.relu(t.conv2d(cur, t.param(*head_.w), t.param(*head_.b)));
}

} // namespace cdi::nn
