#include "cdi/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cdi/json_io.hpp"
#include "cdi/rng.hpp"
#include "cdi/tensor_io.hpp"

namespace fs = std::filesystem;

namespace cdi::train {

double lr_at_epoch(double lr0, double decay, int epoch) {
    if (epoch < 0) throw ValueError("lr_at_epoch: epoch must be >= 0");
    return lr0 * std::pow(decay, epoch);
}

Adam::Adam(ad::ParamStore& store, AdamConfig cfg) : store_(&store), cfg_(cfg) {
    for (auto* p : store.all()) {
        m_.emplace_back(p->value.shape);
        v_.emplace_back(p->value.shape);
    }
}

void Adam::restore(std::size_t i, Tensor m, Tensor v) {
    if (!m.same_shape(m_[i]) || !v.same_shape(v_[i]))
        throw ShapeError("adam restore: moment shape mismatch");
    m_[i] = std::move(m);
    v_[i] = std::move(v);
}

void Adam::step(double lr_proj, double lr_img) {
    auto params = store_->all();
    if (params.size() != m_.size()) throw StateError("adam: parameter set changed after construction");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        ad::Param& p = *params[i];
        const double lr = p.proj_domain ? lr_proj : lr_img;
        for (std::size_t k = 0; k < p.value.data.size(); ++k) {
            const double g = p.grad.data[k];
            if (!std::isfinite(g))
                throw ValueError("non-finite gradient in parameter " + p.name);
            double& m = m_[i].data[k];
            double& v = v_[i].data[k];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
            p.value.data[k] -= lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps);
        }
        p.grad.fill(0.0);
    }
}

LossBreakdown total_loss(ad::Tape& t, const nn::CDINet::Outputs& outs, ad::VarId target_p,
                         ad::VarId target_mu, double w_p, double w_mu) {
    if (outs.proj.size() != outs.mu.size() || outs.proj.empty())
        throw ShapeError("total_loss: output lists must be nonempty and of equal length");
    LossBreakdown out;
    bool first = true;
    ad::VarId acc = 0;
    for (std::size_t i = 0; i < outs.proj.size(); ++i) {
        ad::VarId lp = t.scale(t.l1_loss(outs.proj[i], target_p), w_p);
        ad::VarId lm = t.scale(t.l1_loss(outs.mu[i], target_mu), w_mu);
        out.proj_part += t.value(lp).data[0];
        out.mu_part += t.value(lm).data[0];
        ad::VarId term = t.add(lp, lm);
        acc = first ? term : t.add(acc, term);
        first = false;
    }
    out.total = acc;
    out.value = t.value(acc).data[0];
    return out;
}

PreppedSample prep_sample(const sim::Sample& s, const tomo::Geometry& g) {
    PreppedSample p;
    p.scale = nn::projection_scale(s.p_l.counts);
    Tensor canvas = tomo::embed_limited(s.p_l.counts, g);
    p.p_l = Tensor({1, g.angles_full, g.n}, std::move(canvas.data));
    for (auto& v : p.p_l.data) v *= p.scale;
    p.i_l = Tensor({1, g.n, g.n}, s.i_l.values.data);
    for (auto& v : p.i_l.data) v *= p.scale;
    p.target_p = Tensor({1, g.angles_full, g.n}, s.p_f.counts.data);
    for (auto& v : p.target_p.data) v *= p.scale;
    p.target_mu = Tensor({1, g.n, g.n}, s.mu.values.data);
    return p;
}

namespace {

std::string safe_name(const std::string& name) {
    std::string s = name;
    for (char& c : s)
        if (c == '/') c = '.';
    return s;
}

} // namespace

void save_checkpoint(const std::string& dir, ad::ParamStore& store, const Adam* adam,
                     const std::string& meta_json) {
    fs::create_directories(fs::path(dir) / "params");
    nlohmann::json index;
    index["schema_version"] = 1;
    index["kind"] = "cdi-checkpoint";
    index["meta"] = nlohmann::json::parse(meta_json);
    auto params = store.all();
    auto& plist = index["params"];
    plist = nlohmann::json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ad::Param& p = *params[i];
        std::string file = "params/" + safe_name(p.name) + ".cdit";
        write_tensor((fs::path(dir) / file).string(), p.value);
        nlohmann::json e;
        e["name"] = p.name;
        e["shape"] = p.value.shape;
        e["proj_domain"] = p.proj_domain;
        e["file"] = file;
        plist.push_back(std::move(e));
    }
    if (adam) {
        fs::create_directories(fs::path(dir) / "adam");
        index["adam"]["steps"] = adam->steps();
        for (std::size_t i = 0; i < params.size(); ++i) {
            write_tensor((fs::path(dir) / ("adam/" + safe_name(params[i]->name) + ".m.cdit")).string(),
                         adam->moment1(i));
            write_tensor((fs::path(dir) / ("adam/" + safe_name(params[i]->name) + ".v.cdit")).string(),
                         adam->moment2(i));
        }
    }
    std::ofstream os(fs::path(dir) / "index.json");
    if (!os) throw IoError("cannot write checkpoint index in " + dir);
    os << index.dump(2) << "\n";
}

std::string load_checkpoint(const std::string& dir, ad::ParamStore& store, Adam* adam) {
    std::ifstream is(fs::path(dir) / "index.json");
    if (!is) throw IoError("checkpoint not found: " + dir);
    nlohmann::json index = nlohmann::json::parse(is);
    if (index.value("kind", "") != "cdi-checkpoint")
        throw ConfigError(dir + " is not a checkpoint directory");
    auto params = store.all();
    const auto& plist = index.at("params");
    if (plist.size() != params.size())
        throw ConfigError("checkpoint has " + std::to_string(plist.size()) + " parameters, network " +
                          std::to_string(params.size()));
    for (const auto& e : plist) {
        ad::Param& p = store.get(e.at("name").get<std::string>());
        Tensor t = read_tensor((fs::path(dir) / e.at("file").get<std::string>()).string());
        if (!t.same_shape(p.value))
            throw ShapeError("checkpoint parameter " + p.name + " has shape " +
                             Tensor::shape_str(t.shape));
        p.value = std::move(t);
    }
    if (adam && index.contains("adam")) {
        adam->set_steps(index["adam"].at("steps").get<long long>());
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor m = read_tensor((fs::path(dir) / ("adam/" + safe_name(params[i]->name) + ".m.cdit")).string());
            Tensor v = read_tensor((fs::path(dir) / ("adam/" + safe_name(params[i]->name) + ".v.cdit")).string());
            adam->restore(i, std::move(m), std::move(v));
        }
    }
    return index["meta"].dump();
}

TrainResult train(const TrainConfig& cfg, const sim::Dataset& dataset, const std::string& out_dir) {
    cfg.validate();
    const tomo::Geometry& g = dataset.config.geom;

    auto train_entries = dataset.split_entries("train");
    auto val_entries = dataset.split_entries("val");
    if (train_entries.empty()) throw ConfigError("train: dataset has an empty train split");

    auto prep_all = [&](const std::vector<const sim::DatasetEntry*>& es) {
        std::vector<PreppedSample> out;
        out.reserve(es.size());
        for (const auto* e : es) out.push_back(prep_sample(sim::load_sample(dataset, *e), g));
        return out;
    };
    std::vector<PreppedSample> train_set = prep_all(train_entries);
    std::vector<PreppedSample> val_set = prep_all(val_entries);

    ad::ParamStore store;
    nn::CDINetConfig ncfg;
    ncfg.iterations = cfg.iterations;
    ncfg.variant = cfg.variant;
    ncfg.unet_depth = cfg.unet_depth;
    ncfg.unet_base_width = cfg.unet_base_width;
    ncfg.awr_reduction = cfg.awr_reduction;
    ncfg.geom = g;
    nn::CDINet net(store, ncfg, cfg.seed);
    Adam adam(store);

    fs::create_directories(out_dir);
    const std::string csv_path = (fs::path(out_dir) / "metrics.csv").string();
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write " + csv_path);
    csv << "epoch,split,loss,loss_proj,loss_mu,lr_proj,lr_img\n";
    csv.precision(17);

    auto eval_loss = [&](const std::vector<PreppedSample>& set, double& proj, double& mu) {
        double acc = 0.0;
        proj = mu = 0.0;
        for (const auto& s : set) {
            ad::Tape t;
            auto outs = net.forward(t, t.input(s.p_l), t.input(s.i_l));
            auto lb = total_loss(t, outs, t.input(s.target_p), t.input(s.target_mu), cfg.w_p,
                                 cfg.w_mu);
            acc += lb.value;
            proj += lb.proj_part;
            mu += lb.mu_part;
        }
        acc /= static_cast<double>(set.size());
        proj /= static_cast<double>(set.size());
        mu /= static_cast<double>(set.size());
        return acc;
    };

    TrainResult result;
    result.metrics_csv = csv_path;
    result.checkpoint_dir = (fs::path(out_dir) / "checkpoint_best").string();
    double best = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr_p = lr_at_epoch(cfg.lr_proj, cfg.lr_decay, epoch);
        const double lr_i = lr_at_epoch(cfg.lr_img, cfg.lr_decay, epoch);

        // Deterministic shuffle per (seed, epoch).
        CounterRng shuffle_rng(cfg.seed, fnv1a64("shuffle") ^ static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double ep_loss = 0.0, ep_proj = 0.0, ep_mu = 0.0;
        std::size_t done = 0;
        while (done < order.size()) {
            const std::size_t take = std::min<std::size_t>(cfg.batch_size, order.size() - done);
            store.zero_grads();
            for (std::size_t k = 0; k < take; ++k) {
                const PreppedSample& s = train_set[order[done + k]];
                ad::Tape t;
                auto outs = net.forward(t, t.input(s.p_l), t.input(s.i_l));
                auto lb = total_loss(t, outs, t.input(s.target_p), t.input(s.target_mu), cfg.w_p,
                                     cfg.w_mu);
                t.backward(lb.total);
                ep_loss += lb.value;
                ep_proj += lb.proj_part;
                ep_mu += lb.mu_part;
            }
            const double inv = 1.0 / static_cast<double>(take);
            for (auto* p : store.all())
                for (auto& v : p->grad.data) v *= inv;
            adam.step(lr_p, lr_i);
            done += take;
        }
        ep_loss /= static_cast<double>(order.size());
        ep_proj /= static_cast<double>(order.size());
        ep_mu /= static_cast<double>(order.size());
        csv << epoch << ",train," << ep_loss << "," << ep_proj << "," << ep_mu << "," << lr_p << ","
            << lr_i << "\n";
        ++result.log_rows;

        double selector = ep_loss;
        if (!val_set.empty()) {
            double vproj, vmu;
            double vloss = eval_loss(val_set, vproj, vmu);
            csv << epoch << ",val," << vloss << "," << vproj << "," << vmu << "," << lr_p << ","
                << lr_i << "\n";
            ++result.log_rows;
            selector = vloss;
        }
        if (selector < best) {
            best = selector;
            result.best_epoch = epoch;
            nlohmann::json meta;
            meta["epoch"] = epoch;
            meta["val_loss"] = selector;
            meta["variant"] = nn::to_string(cfg.variant);
            meta["iterations"] = net.iterations();
            meta["unet_depth"] = cfg.unet_depth;
            meta["unet_base_width"] = cfg.unet_base_width;
            meta["awr_reduction"] = cfg.awr_reduction;
            meta["seed"] = cfg.seed;
            meta["geometry"] = g;
            save_checkpoint(result.checkpoint_dir, store, &adam, meta.dump());
        }
    }
    result.best_val_loss = best;
    csv.close();
    return result;
}

} // namespace cdi::train
