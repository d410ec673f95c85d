#include "cdi/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cdi/json_io.hpp"
#include "cdi/mlem.hpp"
#include "cdi/threads.hpp"

namespace fs = std::filesystem;

namespace cdi::eval {

namespace {

// Exceptions may not unwind out of an OpenMP region; capture the first one
// and rethrow after the join.
class FirstError {
public:
    template <typename F>
    void run(F&& f) {
        try {
            f();
        } catch (...) {
            #pragma omp critical(cdi_eval_first_error)
            if (!err_) err_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (err_) std::rethrow_exception(err_);
    }

private:
    std::exception_ptr err_;
};

} // namespace

std::vector<double> TargetReport::nmse_values() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.nmse);
    return out;
}

TargetReport aggregate(std::vector<SampleMetrics> rows) {
    TargetReport r;
    r.rows = std::move(rows);
    auto agg = [&](auto pick) {
        MetricAgg a;
        const double n = static_cast<double>(r.rows.size());
        if (n == 0) return a;
        for (const auto& row : r.rows) a.mean += pick(row);
        a.mean /= n;
        if (n > 1) {
            for (const auto& row : r.rows) {
                double d = pick(row) - a.mean;
                a.stdev += d * d;
            }
            a.stdev = std::sqrt(a.stdev / (n - 1.0));
        }
        return a;
    };
    r.nmse = agg([](const SampleMetrics& m) { return m.nmse; });
    r.nmae = agg([](const SampleMetrics& m) { return m.nmae; });
    r.ssim = agg([](const SampleMetrics& m) { return m.ssim; });
    r.psnr = agg([](const SampleMetrics& m) { return m.psnr; });
    return r;
}

EvalContext make_eval_context(const sim::Dataset& ds, const std::string& split,
                              int recon_iterations) {
    EvalContext ctx;
    ctx.ds = &ds;
    ctx.recon_iterations = recon_iterations;
    auto entries = ds.split_entries(split);
    if (entries.empty()) throw ConfigError("evaluate: split '" + split + "' is empty");
    const int n = static_cast<int>(entries.size());
    ctx.samples.resize(entries.size());
    ctx.ids.resize(entries.size());
    ctx.gt_ac.resize(entries.size());
    FirstError guard;
    #pragma omp parallel for num_threads(kernel_threads()) schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        guard.run([&, i] {
            ctx.samples[i] = sim::load_sample(ds, *entries[i]);
            ctx.ids[i] = entries[i]->id;
            ctx.gt_ac[i] = tomo::mlem_reconstruct(ctx.samples[i].p_f.counts, ds.config.geom,
                                                  tomo::AngleSet::Full, &ctx.samples[i].mu.values,
                                                  recon_iterations);
        });
    }
    guard.rethrow();
    return ctx;
}

namespace {

SampleMetrics score(const std::string& id, const Tensor& x, const Tensor& ref) {
    return {id, nmse_percent(x, ref), nmae_percent(x, ref), ssim(x, ref), psnr_db(x, ref)};
}

} // namespace

MethodReport evaluate_baseline(const EvalContext& ctx) {
    const tomo::Geometry& g = ctx.ds->config.geom;
    const int n = static_cast<int>(ctx.samples.size());
    std::vector<SampleMetrics> proj(n), recon(n);
    FirstError guard;
    #pragma omp parallel for num_threads(kernel_threads()) schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        guard.run([&, i] {
            const sim::Sample& s = ctx.samples[i];
            proj[i] = score(ctx.ids[i], tomo::embed_limited(s.p_l.counts, g), s.p_f.counts);
            Tensor nac = tomo::mlem_reconstruct(s.p_l.counts, g, tomo::AngleSet::Limited, nullptr,
                                                ctx.recon_iterations);
            recon[i] = score(ctx.ids[i], nac, ctx.gt_ac[i]);
        });
    }
    guard.rethrow();
    MethodReport r;
    r.method = "baseline_ld_la";
    r.has_mu = false;
    r.projection = aggregate(std::move(proj));
    r.recon = aggregate(std::move(recon));
    return r;
}

MethodReport evaluate_checkpoint(const EvalContext& ctx, const std::string& checkpoint_dir,
                                 const std::string& method_name) {
    const tomo::Geometry& g = ctx.ds->config.geom;

    ad::ParamStore store;
    nn::CDINetConfig ncfg;
    {
        // Probe the stored metadata first to rebuild the right architecture.
        std::ifstream is(fs::path(checkpoint_dir) / "index.json");
        if (!is) throw IoError("checkpoint not found: " + checkpoint_dir);
        nlohmann::json index = nlohmann::json::parse(is);
        nlohmann::json meta = index.at("meta");
        ncfg.iterations = meta.at("iterations").get<int>();
        ncfg.variant = nn::variant_from_string(meta.at("variant").get<std::string>());
        ncfg.unet_depth = meta.at("unet_depth").get<int>();
        ncfg.unet_base_width = meta.at("unet_base_width").get<int>();
        ncfg.awr_reduction = meta.at("awr_reduction").get<int>();
        ncfg.geom = meta.at("geometry").get<tomo::Geometry>();
        if (!(ncfg.geom == g))
            throw ConfigError("checkpoint geometry does not match the dataset geometry");
    }
    nn::CDINet net(store, ncfg, /*seed=*/0);
    train::load_checkpoint(checkpoint_dir, store, nullptr);

    const int n = static_cast<int>(ctx.samples.size());
    std::vector<SampleMetrics> proj(n), mu(n), recon(n);
    #pragma omp parallel for num_threads(kernel_threads()) schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        const sim::Sample& s = ctx.samples[i];
        train::PreppedSample prep = train::prep_sample(s, g);
        ad::Tape t;
        auto outs = net.forward(t, t.input(prep.p_l), t.input(prep.i_l));

        // Final-iteration predictions; projections return to count units.
        Tensor phat({g.angles_full, g.n}, t.value(outs.proj.back()).data);
        for (auto& v : phat.data) v /= prep.scale;
        Tensor muhat({g.n, g.n}, t.value(outs.mu.back()).data);
        for (auto& v : muhat.data) v = std::min(v, tomo::kMuCap);

        proj[i] = score(ctx.ids[i], phat, s.p_f.counts);
        mu[i] = score(ctx.ids[i], muhat, s.mu.values);
        Tensor ac = tomo::mlem_reconstruct(phat, g, tomo::AngleSet::Full, &muhat,
                                           ctx.recon_iterations);
        recon[i] = score(ctx.ids[i], ac, ctx.gt_ac[i]);
    }
    MethodReport r;
    r.method = method_name;
    r.projection = aggregate(std::move(proj));
    r.mu_map = aggregate(std::move(mu));
    r.recon = aggregate(std::move(recon));
    return r;
}

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

nlohmann::json agg_json(const TargetReport& t) {
    auto pack = [](const MetricAgg& a) {
        nlohmann::json j;
        j["mean"] = std::isfinite(a.mean) ? nlohmann::json(a.mean) : nlohmann::json();
        j["std"] = std::isfinite(a.stdev) ? nlohmann::json(a.stdev) : nlohmann::json();
        return j;
    };
    nlohmann::json j;
    j["nmse"] = pack(t.nmse);
    j["nmae"] = pack(t.nmae);
    j["ssim"] = pack(t.ssim);
    j["psnr"] = pack(t.psnr);
    j["samples"] = t.rows.size();
    return j;
}

void write_method_csv(const std::string& path, const MethodReport& m) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << "sample,target,nmse,nmae,ssim,psnr\n";
    auto dump = [&](const char* target, const TargetReport& t) {
        for (const auto& r : t.rows)
            os << r.id << "," << target << "," << fmt(r.nmse) << "," << fmt(r.nmae) << ","
               << fmt(r.ssim) << "," << fmt(r.psnr) << "\n";
    };
    dump("projection", m.projection);
    if (m.has_mu) dump("mu_map", m.mu_map);
    dump("reconstruction", m.recon);
}

void write_table(const std::string& path, const std::vector<const MethodReport*>& methods,
                 const TargetReport MethodReport::* target, const MethodReport* reference) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << "method,nmse_mean,nmse_std,nmae_mean,nmae_std,ssim_mean,ssim_std,psnr_mean,psnr_std,"
          "p_nmse_vs_reference\n";
    for (const auto* m : methods) {
        const TargetReport& t = m->*target;
        if (t.rows.empty()) continue;
        os << m->method << "," << fmt(t.nmse.mean) << "," << fmt(t.nmse.stdev) << ","
           << fmt(t.nmae.mean) << "," << fmt(t.nmae.stdev) << "," << fmt(t.ssim.mean) << ","
           << fmt(t.ssim.stdev) << "," << fmt(t.psnr.mean) << "," << fmt(t.psnr.stdev) << ",";
        const TargetReport& ref = reference->*target;
        if (m == reference || ref.rows.empty() || ref.rows.size() != t.rows.size()) {
            os << "-";
        } else {
            try {
                os << fmt(paired_ttest(t.nmse_values(), ref.nmse_values()));
            } catch (const Error&) {
                os << "-";  // degenerate differences
            }
        }
        os << "\n";
    }
}

} // namespace

void write_reports(const std::string& out_dir, const std::vector<MethodReport>& methods,
                   const std::string& reference) {
    if (methods.empty()) throw ConfigError("write_reports: no methods");
    fs::create_directories(out_dir);

    const MethodReport* ref = nullptr;
    for (const auto& m : methods)
        if (m.method == reference) ref = &m;
    if (!ref) throw ConfigError("write_reports: reference method '" + reference + "' not present");

    nlohmann::json summary;
    summary["reference"] = reference;
    std::vector<const MethodReport*> ptrs;
    for (const auto& m : methods) {
        ptrs.push_back(&m);
        write_method_csv((fs::path(out_dir) / ("metrics_" + m.method + ".csv")).string(), m);
        nlohmann::json jm;
        jm["projection"] = agg_json(m.projection);
        if (m.has_mu) jm["mu_map"] = agg_json(m.mu_map);
        jm["reconstruction"] = agg_json(m.recon);
        summary["methods"][m.method] = std::move(jm);
    }
    write_table((fs::path(out_dir) / "table_projection.csv").string(), ptrs,
                &MethodReport::projection, ref);
    write_table((fs::path(out_dir) / "table_mu.csv").string(), ptrs, &MethodReport::mu_map, ref);
    write_table((fs::path(out_dir) / "table_recon.csv").string(), ptrs, &MethodReport::recon, ref);

    std::ofstream os(fs::path(out_dir) / "summary.json");
    if (!os) throw IoError("cannot write summary.json in " + out_dir);
    os << summary.dump(2) << "\n";
}

std::string sweep(const SweepConfig& cfg, const std::string& out_dir) {
    if (cfg.dimension != "iterations" && cfg.dimension != "dose")
        throw ConfigError("sweep: dimension must be 'iterations' or 'dose'");
    if (cfg.values.empty()) throw ConfigError("sweep: no values");
    for (double v : cfg.values) {
        if (cfg.dimension == "iterations" && (v < 1 || v > 6 || v != std::floor(v)))
            throw ConfigError("sweep: iteration counts must be integers in 1..6");
        if (cfg.dimension == "dose" && (!(v > 0.0) || v > 1.0))
            throw ConfigError("sweep: dose values must lie in (0, 1]");
    }
    const long long total_epochs =
        static_cast<long long>(cfg.training.epochs) * static_cast<long long>(cfg.values.size());
    if (total_epochs > cfg.max_total_epochs && !cfg.force)
        throw ConfigError("sweep: " + std::to_string(total_epochs) +
                          " total epochs exceed the budget of " +
                          std::to_string(cfg.max_total_epochs) + " (use --force to override)");

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / ("sweep_" + cfg.dimension + ".csv"));
    if (!csv) throw IoError("cannot write sweep csv in " + out_dir);
    csv << "value,method,target,metric,mean,std\n";
    csv.precision(10);

    auto emit = [&](double value, const MethodReport& m) {
        auto row = [&](const char* target, const TargetReport& t) {
            if (t.rows.empty()) return;
            csv << value << "," << m.method << "," << target << ",nmse," << fmt(t.nmse.mean) << ","
                << fmt(t.nmse.stdev) << "\n";
            csv << value << "," << m.method << "," << target << ",nmae," << fmt(t.nmae.mean) << ","
                << fmt(t.nmae.stdev) << "\n";
            csv << value << "," << m.method << "," << target << ",ssim," << fmt(t.ssim.mean) << ","
                << fmt(t.ssim.stdev) << "\n";
            csv << value << "," << m.method << "," << target << ",psnr," << fmt(t.psnr.mean) << ","
                << fmt(t.psnr.stdev) << "\n";
        };
        row("projection", m.projection);
        if (m.has_mu) row("mu_map", m.mu_map);
        row("reconstruction", m.recon);
    };

    auto run_point = [&](double value, const sim::DatasetConfig& dcfg, const train::TrainConfig& tcfg,
                         const std::string& data_tag, const std::string& run_tag) {
        const std::string data_dir = (fs::path(out_dir) / ("data_" + data_tag)).string();
        if (!fs::exists(fs::path(data_dir) / "manifest.json"))
            sim::build_dataset(data_dir, cfg.dataset_count, cfg.base_seed, dcfg, /*force=*/true);
        auto ds = sim::load_dataset(data_dir);
        auto result = train::train(tcfg, ds, (fs::path(out_dir) / ("train_" + run_tag)).string());
        auto ctx = make_eval_context(ds, "test", cfg.recon_iterations);
        emit(value, evaluate_baseline(ctx));
        emit(value, evaluate_checkpoint(ctx, result.checkpoint_dir, "cdi_net"));
    };

    if (cfg.dimension == "iterations") {
        for (double v : cfg.values) {
            train::TrainConfig tcfg = cfg.training;
            tcfg.iterations = static_cast<int>(v);
            // One shared dataset; the model depth in iterations is swept.
            run_point(v, cfg.data, tcfg, "base", "n" + std::to_string(static_cast<int>(v)));
        }
    } else {
        for (double v : cfg.values) {
            sim::DatasetConfig dcfg = cfg.data;
            dcfg.dose_fraction = v;
            char tag[32];
            std::snprintf(tag, sizeof tag, "d%.4f", v);
            run_point(v, dcfg, cfg.training, tag, tag);
        }
    }
    csv.close();
    return (fs::path(out_dir) / ("sweep_" + cfg.dimension + ".csv")).string();
}

} // namespace cdi::eval
