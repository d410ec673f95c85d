#include "cdi/awr.hpp"

#include <cmath>

#include "cdi/rng.hpp"

namespace cdi::nn {

namespace {
void he_init(ad::Param& w, int fan_in, std::uint64_t seed) {
    CounterRng rng(seed, fnv1a64(w.name));
    const double std = std::sqrt(2.0 / fan_in);
    for (auto& v : w.value.data) v = rng.normal(0.0, std);
}
} // namespace

AWR::AWR(ad::ParamStore& store, std::string prefix, AWRConfig cfg, bool proj_domain,
         std::uint64_t seed)
    : cfg_(cfg), prefix_(std::move(prefix)) {
    cfg_.validate();
    const int c = cfg_.channels, h = cfg_.hidden();
    w1_ = &store.create(prefix_ + "/fc1/w", {h, c}, proj_domain);
    b1_ = &store.create(prefix_ + "/fc1/b", {h}, proj_domain);
    w2_ = &store.create(prefix_ + "/fc2/w", {c, h}, proj_domain);
    b2_ = &store.create(prefix_ + "/fc2/b", {c}, proj_domain);
    he_init(*w1_, c, seed);
    he_init(*w2_, h, seed);
    // The pooled channel averages feeding fc1 are always nonnegative, so a
    // hidden unit with negative weights would be dead for every input.
    // Half-normal weights plus a small positive bias keep the gate trainable.
    for (auto& v : w1_->value.data) v = std::abs(v);
    b1_->value.fill(0.01);
}

ad::VarId AWR::forward(ad::Tape& t, ad::VarId x) const {
    const Tensor& v = t.value(x);
    if (v.ndim() != 3 || v.dim(0) != cfg_.channels)
        throw ShapeError(prefix_ + ": expected [" + std::to_string(cfg_.channels) + ",H,W], got " +
                         Tensor::shape_str(v.shape));
    ad::VarId pooled = t.gap(x);
    ad::VarId hidden = t.relu(t.fc(pooled, t.param(*w1_), t.param(*b1_)));
    ad::VarId gate = t.sigmoid(t.fc(hidden, t.param(*w2_), t.param(*b2_)));
    return t.add(t.channel_scale(x, gate), x);
}

} // namespace cdi::nn
