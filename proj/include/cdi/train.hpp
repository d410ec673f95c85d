#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdi/cdinet.hpp"
#include "cdi/dataset.hpp"

namespace cdi::train {

struct TrainConfig {
    int epochs = 50;  // the separate-UNet baseline default is 200
    int batch_size = 4;
    double w_p = 0.5;
    double w_mu = 0.5;
    double lr_proj = 1e-4;  // projection-domain initial LR
    double lr_img = 1e-3;   // image-domain initial LR
    double lr_decay = 0.99; // multiplicative, per epoch
    std::uint64_t seed = 0;
    nn::Variant variant = nn::Variant::Full;
    int iterations = 5;
    int unet_depth = 3;
    int unet_base_width = 16;
    int awr_reduction = 2;

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (w_p < 0 || w_mu < 0) throw ConfigError("train: loss weights must be >= 0");
        if (!(lr_proj > 0) || !(lr_img > 0)) throw ConfigError("train: learning rates must be > 0");
        if (!(lr_decay > 0) || lr_decay > 1) throw ConfigError("train: decay must lie in (0, 1]");
        if (iterations < 1) throw ConfigError("train: iterations must be >= 1");
    }
};

double lr_at_epoch(double lr0, double decay, int epoch);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a parameter store, with one learning rate per
// domain group. step() consumes the accumulated gradients and zeroes them.
class Adam {
public:
    explicit Adam(ad::ParamStore& store, AdamConfig cfg = {});

    // Throws ValueError on a non-finite gradient, naming the parameter.
    void step(double lr_proj, double lr_img);

    long long steps() const { return t_; }

    // Serialization hooks for checkpoints.
    const Tensor& moment1(std::size_t i) const { return m_[i]; }
    const Tensor& moment2(std::size_t i) const { return v_[i]; }
    void restore(std::size_t i, Tensor m, Tensor v);
    void set_steps(long long t) { t_ = t; }
    const AdamConfig& config() const { return cfg_; }

private:
    ad::ParamStore* store_;
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    long long t_ = 0;
};

// Deep-supervised loss: sum over iterations of
//   w_p * meanL1(Phat^i, P_F) + w_mu * meanL1(muhat^i, mu).
// proj_part/mu_part carry the two already-weighted addends of the value.
struct LossBreakdown {
    ad::VarId total;
    double value = 0.0;
    double proj_part = 0.0;
    double mu_part = 0.0;
};
LossBreakdown total_loss(ad::Tape& t, const nn::CDINet::Outputs& outs, ad::VarId target_p,
                         ad::VarId target_mu, double w_p, double w_mu);

// Sample prepared for the network: zero-embedded, scaled by 1/mean(P_L).
struct PreppedSample {
    Tensor p_l;       // [1, A_full, n], scaled
    Tensor i_l;       // [1, n, n], scaled
    Tensor target_p;  // [1, A_full, n], scaled
    Tensor target_mu; // [1, n, n], native cm^-1
    double scale = 1.0;
};
PreppedSample prep_sample(const sim::Sample& s, const tomo::Geometry& g);

// Checkpoint directory: index.json + one raw tensor per parameter (and per
// Adam moment when an optimizer is given).
void save_checkpoint(const std::string& dir, ad::ParamStore& store, const Adam* adam,
                     const std::string& meta_json);
// Parameters must already be registered with matching names/shapes (build
// the same network config first). Returns the stored metadata JSON text.
std::string load_checkpoint(const std::string& dir, ad::ParamStore& store, Adam* adam);

struct TrainResult {
    std::string checkpoint_dir;
    std::string metrics_csv;
    double best_val_loss = 0.0;
    int best_epoch = -1;
    int log_rows = 0;
};

// Trains on the dataset's train split, validating per epoch on the val
// split when present (best-checkpoint selection falls back to the train
// loss otherwise). Writes metrics.csv and checkpoint_best/ under out_dir.
TrainResult train(const TrainConfig& cfg, const sim::Dataset& dataset, const std::string& out_dir);

} // namespace cdi::train
