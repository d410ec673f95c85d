#pragma once

#include <string>
#include <vector>

#include "cdi/dataset.hpp"
#include "cdi/metrics.hpp"
#include "cdi/train.hpp"

namespace cdi::eval {

struct SampleMetrics {
    std::string id;
    double nmse = 0, nmae = 0, ssim = 0, psnr = 0;
};

struct MetricAgg {
    double mean = 0, stdev = 0;
};

struct TargetReport {
    std::vector<SampleMetrics> rows;
    MetricAgg nmse, nmae, ssim, psnr;
    std::vector<double> nmse_values() const;
};

TargetReport aggregate(std::vector<SampleMetrics> rows);

struct MethodReport {
    std::string method;
    TargetReport projection;
    TargetReport mu_map;  // empty for the baseline (it has no mu estimate)
    TargetReport recon;
    bool has_mu = true;
};

// Shared evaluation state for one dataset split: loaded samples and the
// ground-truth attenuation-corrected reconstructions ML-EM(P_F, mu).
struct EvalContext {
    const sim::Dataset* ds = nullptr;
    std::vector<sim::Sample> samples;
    std::vector<std::string> ids;
    std::vector<Tensor> gt_ac;
    int recon_iterations = 30;
};

EvalContext make_eval_context(const sim::Dataset& ds, const std::string& split,
                              int recon_iterations);

// Raw LD&LA inputs scored as-is: zero-embedded P_L against P_F, and the
// non-AC limited reconstruction against the ground-truth AC image.
MethodReport evaluate_baseline(const EvalContext& ctx);

// Loads the checkpoint (its metadata carries the network config), predicts
// P_F and mu for every sample, reconstructs with ML-EM(P_F_hat, mu_hat) and
// scores all three targets. Pure: repeated calls give identical reports.
MethodReport evaluate_checkpoint(const EvalContext& ctx, const std::string& checkpoint_dir,
                                 const std::string& method_name);

// metrics_<method>.csv per method, summary.json, and per-target comparison
// tables with a paired NMSE t-test against `reference` in each row.
void write_reports(const std::string& out_dir, const std::vector<MethodReport>& methods,
                   const std::string& reference);

struct SweepConfig {
    std::string dimension;        // "iterations" or "dose"
    std::vector<double> values;
    sim::DatasetConfig data;
    train::TrainConfig training;
    int dataset_count = 40;
    std::uint64_t base_seed = 0;
    int recon_iterations = 30;
    int max_total_epochs = 200;   // budget guard
    bool force = false;
};

// Trains and evaluates one model per value; emits plot-ready
// sweep_<dimension>.csv (value, method, target, metric, mean, std).
std::string sweep(const SweepConfig& cfg, const std::string& out_dir);

} // namespace cdi::eval
