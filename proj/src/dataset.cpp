#include "cdi/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "cdi/json_io.hpp"
#include "cdi/mlem.hpp"
#include "cdi/tensor_io.hpp"
#include "cdi/threads.hpp"

namespace fs = std::filesystem;

namespace cdi::sim {

namespace {

std::string sample_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%04d", index);
    return buf;
}

std::string split_of(int index, int count, const SplitFractions& split) {
    const int n_train = static_cast<int>(std::floor(count * split.train));
    const int n_val = static_cast<int>(std::floor(count * split.val));
    if (index < n_train) return "train";
    if (index < n_train + n_val) return "val";
    return "test";
}

nlohmann::json manifest_body(int count, std::uint64_t base_seed, const DatasetConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = "cdi-dataset";
    j["count"] = count;
    j["base_seed"] = base_seed;
    j["config"] = cfg;
    auto& samples = j["samples"];
    samples = nlohmann::json::array();
    for (int i = 0; i < count; ++i) {
        CounterRng root(base_seed, static_cast<std::uint64_t>(i));
        nlohmann::json s;
        s["id"] = sample_id(i);
        s["seed"] = root.next_u64();
        s["dose_fraction"] = cfg.dose_fraction;
        s["split"] = split_of(i, count, cfg.split);
        samples.push_back(std::move(s));
    }
    return j;
}

} // namespace

Sample make_sample(const DatasetConfig& cfg, std::uint64_t base_seed, int index) {
    cfg.validate();
    CounterRng root(base_seed, static_cast<std::uint64_t>(index));
    const std::uint64_t sample_seed = root.next_u64();

    PhantomParams pp = cfg.phantom;
    pp.seed = sample_seed;
    auto [activity, mu] = make_phantom(pp, cfg.geom);

    tomo::Sinogram ideal{tomo::forward_project(activity.values, &mu.values, cfg.geom,
                                               tomo::AngleSet::Full),
                         cfg.geom, tomo::AngleSet::Full, tomo::SinogramTag::Ideal};

    const std::uint64_t pf_seed = CounterRng(sample_seed, 1).next_u64();
    const std::uint64_t pl_seed = CounterRng(sample_seed, 2).next_u64();

    Sample s;
    s.seed = sample_seed;
    s.dose_fraction = cfg.dose_fraction;
    s.p_f = simulate_counts(ideal, 1.0, pf_seed);
    // Decimate, then take the central rows; under the Poisson model the
    // order does not matter.
    s.p_l = limit_angles(simulate_counts(ideal, cfg.dose_fraction, pl_seed));
    s.i_l = tomo::ImageMap{
        tomo::mlem_reconstruct(s.p_l.counts, cfg.geom, tomo::AngleSet::Limited, nullptr,
                               cfg.mlem_iterations),
        cfg.geom, tomo::ImageKind::Reconstruction};
    s.mu = std::move(mu);

    s.p_f.validate();
    s.p_l.validate();
    s.i_l.validate();
    s.mu.validate();
    return s;
}

std::string build_dataset(const std::string& dir, int count, std::uint64_t base_seed,
                          const DatasetConfig& cfg, bool force) {
    if (count < 1) throw ConfigError("build_dataset: count must be >= 1");
    cfg.validate();
    fs::path root(dir);
    if (fs::exists(root) && !fs::is_empty(root) && !force)
        throw IoError("output directory " + dir + " is not empty (use --force to overwrite)");
    fs::create_directories(root / "samples");

    nlohmann::json manifest = manifest_body(count, base_seed, cfg);

    #pragma omp parallel for num_threads(kernel_threads()) schedule(dynamic)
    for (int i = 0; i < count; ++i) {
        Sample s = make_sample(cfg, base_seed, i);
        fs::path sdir = root / "samples" / sample_id(i);
        fs::create_directories(sdir);
        write_tensor((sdir / "p_l.cdit").string(), s.p_l.counts);
        write_tensor((sdir / "i_l.cdit").string(), s.i_l.values);
        write_tensor((sdir / "p_f.cdit").string(), s.p_f.counts);
        write_tensor((sdir / "mu.cdit").string(), s.mu.values);
    }

    const std::string hash = json_hash_hex(manifest);
    manifest["manifest_hash"] = hash;
    std::ofstream os(root / "manifest.json");
    if (!os) throw IoError("cannot write manifest in " + dir);
    os << manifest.dump(2) << "\n";
    return hash;
}

Dataset load_dataset(const std::string& dir) {
    fs::path root(dir);
    std::ifstream is(root / "manifest.json");
    if (!is) throw IoError("no manifest.json under " + dir);
    nlohmann::json manifest = nlohmann::json::parse(is, nullptr, /*allow_exceptions=*/true);
    if (manifest.value("kind", "") != "cdi-dataset")
        throw ConfigError("manifest in " + dir + " is not a cdi-dataset");

    Dataset ds;
    ds.root = dir;
    ds.config = manifest.at("config").get<DatasetConfig>();
    ds.config.validate();
    ds.base_seed = manifest.at("base_seed").get<std::uint64_t>();
    ds.manifest_hash = manifest.value("manifest_hash", "");
    for (const auto& s : manifest.at("samples")) {
        DatasetEntry e;
        e.id = s.at("id").get<std::string>();
        e.seed = s.at("seed").get<std::uint64_t>();
        e.dose_fraction = s.at("dose_fraction").get<double>();
        e.split = s.at("split").get<std::string>();
        ds.entries.push_back(std::move(e));
    }
    return ds;
}

std::vector<const DatasetEntry*> Dataset::split_entries(const std::string& split) const {
    std::vector<const DatasetEntry*> out;
    for (const auto& e : entries)
        if (e.split == split) out.push_back(&e);
    return out;
}

Sample load_sample(const Dataset& ds, const DatasetEntry& entry) {
    fs::path sdir = fs::path(ds.root) / "samples" / entry.id;
    const tomo::Geometry& g = ds.config.geom;
    Sample s;
    s.seed = entry.seed;
    s.dose_fraction = entry.dose_fraction;
    s.p_l = tomo::Sinogram{read_tensor((sdir / "p_l.cdit").string()), g, tomo::AngleSet::Limited,
                           tomo::SinogramTag::Noisy};
    s.i_l = tomo::ImageMap{read_tensor((sdir / "i_l.cdit").string()), g,
                           tomo::ImageKind::Reconstruction};
    s.p_f = tomo::Sinogram{read_tensor((sdir / "p_f.cdit").string()), g, tomo::AngleSet::Full,
                           tomo::SinogramTag::Noisy};
    s.mu = tomo::ImageMap{read_tensor((sdir / "mu.cdit").string()), g, tomo::ImageKind::MuMap};
    s.p_l.validate();
    s.i_l.validate();
    s.p_f.validate();
    s.mu.validate();
    return s;
}

} // namespace cdi::sim

namespace cdi {

std::string json_hash_hex(const nlohmann::json& j) {
    std::uint64_t h = fnv1a64(j.dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace cdi
